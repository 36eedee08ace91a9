#include "lapcert/cli.hpp"

int main(int argc, char** argv) { return lapcert::run_cli(argc, argv); }
