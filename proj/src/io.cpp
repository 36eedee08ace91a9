#include "lapcert/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "lapcert/error.hpp"

namespace lapcert::io {

namespace fs = std::filesystem;
using nlohmann::json;

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

CsvWriter::CsvWriter(const fs::path& path, const std::vector<std::string>& header)
    : path_(path.string()), width_(header.size()) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  f_ = std::fopen(path_.c_str(), "w");
  if (!f_) throw Error("io", "cannot open " + path_);
  row(header);
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != width_) throw Error("io", "CSV row width mismatch in " + path_);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    std::fputs(cells[i].c_str(), f_);
    std::fputc(i + 1 == cells.size() ? '\n' : ',', f_);
  }
}

CsvWriter::~CsvWriter() {
  if (f_) std::fclose(f_);
}

void save_eigensystem(const EigenSystem& eig, const fs::path& dir) {
  fs::create_directories(dir);
  {
    CsvWriter w(dir / "lambdas.csv", {"k", "lambda", "psi_sup", "dpsi_sup", "v_sup", "v_deriv_sup", "v_l2"});
    for (int k = 1; k <= eig.K(); ++k) {
      const VkDiag& v = eig.vk[k - 1];
      w.row({std::to_string(k), fmt(eig.lambdas[k - 1]), fmt(eig.sup_norms[k - 1]),
             fmt(eig.deriv_sup_norms[k - 1]), fmt(v.sup), fmt(v.deriv_sup), fmt(v.l2)});
    }
  }
  for (const char* which : {"psi", "dpsi"}) {
    const Eigen::MatrixXd& M = std::string(which) == "psi" ? eig.psi : eig.dpsi;
    std::vector<std::string> header{"x"};
    for (int k = 1; k <= eig.K(); ++k) header.push_back(std::string(which) + "_" + std::to_string(k));
    CsvWriter w(dir / (std::string(which) + ".csv"), header);
    for (int i = 0; i <= eig.N; ++i) {
      std::vector<std::string> cells{fmt(static_cast<double>(i) / eig.N)};
      for (int k = 0; k < eig.K(); ++k) cells.push_back(fmt(M(i, k)));
      w.row(cells);
    }
  }
  json meta = {{"N", eig.N}, {"K", eig.K()}, {"T", eig.T}, {"Q_sup", eig.Q_sup}};
  std::ofstream(dir / "meta.json") << meta.dump(2) << "\n";
}

namespace {
std::vector<std::vector<double>> read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("io", "missing cache file " + path.string());
  std::string line;
  std::getline(in, line);
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::vector<double> r;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) r.push_back(std::stod(cell));
    rows.push_back(std::move(r));
  }
  return rows;
}
}  // namespace

EigenSystem load_eigensystem(const fs::path& dir) {
  std::ifstream mf(dir / "meta.json");
  if (!mf) throw Error("io", "missing cache metadata in " + dir.string());
  const json meta = json::parse(mf);
  EigenSystem e;
  e.N = meta.at("N").get<int>();
  const int K = meta.at("K").get<int>();
  e.T = meta.at("T").get<double>();
  e.Q_sup = meta.at("Q_sup").get<double>();
  const auto lam = read_csv(dir / "lambdas.csv");
  if (static_cast<int>(lam.size()) != K) throw Error("io", "corrupt lambdas.csv in cache");
  for (const auto& r : lam) {
    e.lambdas.push_back(r.at(1));
    e.sup_norms.push_back(r.at(2));
    e.deriv_sup_norms.push_back(r.at(3));
    e.vk.push_back({r.at(4), r.at(5), r.at(6)});
  }
  const auto ps = read_csv(dir / "psi.csv");
  const auto dps = read_csv(dir / "dpsi.csv");
  if (static_cast<int>(ps.size()) != e.N + 1 || static_cast<int>(dps.size()) != e.N + 1)
    throw Error("io", "corrupt psi cache");
  e.psi.resize(e.N + 1, K);
  e.dpsi.resize(e.N + 1, K);
  for (int i = 0; i <= e.N; ++i)
    for (int k = 0; k < K; ++k) {
      e.psi(i, k) = ps[i].at(k + 1);
      e.dpsi(i, k) = dps[i].at(k + 1);
    }
  return e;
}

EigenSystem load_or_solve(const CoefficientPair& spec, int K, int N, const fs::path& cache_root,
                          bool* was_cached) {
  const fs::path dir = cache_root / eigen_cache_key(spec, N, K);
  if (fs::exists(dir / "meta.json")) {
    if (was_cached) *was_cached = true;
    return load_eigensystem(dir);
  }
  EigenSystem e = solve_eigs(spec, K, N);
  save_eigensystem(e, dir);
  if (was_cached) *was_cached = false;
  return e;
}

void save_dataset(const Dataset& d, const TruthSpec& truth, const fs::path& dir) {
  {
    CsvWriter w(dir / "dataset.csv", {"j", "s_true", "y"});
    for (Eigen::Index j = 0; j < d.y.size(); ++j)
      w.row({std::to_string(j + 1), fmt(d.s_true(j)), fmt(d.y(j))});
  }
  json side = {{"seed", d.seed},
               {"family", to_string(d.family)},
               {"n", d.y.size()},
               {"s_true_sup", d.s_true_sup},
               {"theta_star", std::vector<double>(truth.theta_star.data(),
                                                  truth.theta_star.data() + truth.theta_star.size())}};
  std::ofstream(dir / "dataset.json") << side.dump(2) << "\n";
}

void save_fit(const LaplaceFit& fit, const fs::path& path) {
  json j = {{"theta_hat", std::vector<double>(fit.theta_hat.data(),
                                              fit.theta_hat.data() + fit.theta_hat.size())},
            {"rq_sup", fit.rq_sup},
            {"iters", fit.newton_iters},
            {"grad_norm", fit.grad_norm},
            {"f_hat", fit.f_hat}};
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream(path) << j.dump(2) << "\n";
}

std::vector<std::string> certificate_header() {
  return {"instance", "choice",  "gamma0",   "alpha_raw", "alpha",     "effdim",
          "A",        "A_grid_gap", "B",     "tau3_sup",  "radius",    "local_term",
          "tail_term", "tv_bound", "feasible", "hessian_lb", "S_dim",   "S_tau",
          "m",        "m0star",  "gamma0star"};
}

std::vector<std::string> certificate_row(const std::string& instance, const Certificate& c) {
  return {instance,
          c.choice.label(),
          fmt(c.choice.gamma0),
          fmt(c.alpha_raw),
          fmt(c.alpha),
          fmt(c.effdim),
          fmt(c.geometry.A),
          fmt(c.geometry.grid_gap),
          fmt(c.geometry.B),
          fmt(c.tau3_sup),
          fmt(c.radius),
          fmt(c.local_term),
          fmt(c.tail_term),
          fmt(c.tv_bound),
          c.feasible ? "1" : "0",
          c.hessian_lb_by_construction ? "1" : "0",
          fmt(c.S_dim),
          fmt(c.S_tau),
          fmt(c.m),
          fmt(c.m0star),
          fmt(c.gamma0star)};
}

}  // namespace lapcert::io
