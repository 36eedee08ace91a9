#pragma once

namespace lapcert {

// Exit codes: 0 success, 1 asserted invariant failed, 2 usage/config/numerical error.
int run_cli(int argc, char** argv);

}  // namespace lapcert
