#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lapcert/certification.hpp"
#include "lapcert/eigensolver.hpp"
#include "lapcert/model.hpp"
#include "lapcert/posterior.hpp"

namespace lapcert::io {

// Shortest round-trip decimal for a double ("%.17g"), used for every CSV cell.
std::string fmt(double v);

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);
  void row(const std::vector<std::string>& cells);

 private:
  std::string path_;
  std::size_t width_;
  std::FILE* f_ = nullptr;

 public:
  ~CsvWriter();
  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;
};

void save_eigensystem(const EigenSystem& eig, const std::filesystem::path& dir);
EigenSystem load_eigensystem(const std::filesystem::path& dir);

// Load from <cache_root>/<key>/ when present, otherwise solve and store.
EigenSystem load_or_solve(const CoefficientPair& spec, int K, int N,
                          const std::filesystem::path& cache_root, bool* was_cached = nullptr);

void save_dataset(const Dataset& d, const TruthSpec& truth, const std::filesystem::path& dir);
void save_fit(const LaplaceFit& fit, const std::filesystem::path& path);

std::vector<std::string> certificate_header();
std::vector<std::string> certificate_row(const std::string& instance, const Certificate& c);

}  // namespace lapcert::io
