#include "lapcert/cli.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "lapcert/config.hpp"
#include "lapcert/error.hpp"
#include "lapcert/io.hpp"
#include "lapcert/kernels.hpp"
#include "lapcert/pipeline.hpp"

namespace lapcert {

namespace fs = std::filesystem;
using nlohmann::json;
using io::fmt;

namespace {

std::string git_hash() {
  const std::string cmd = std::string("git -C \"") + LAPCERT_SOURCE_DIR + "\" rev-parse HEAD 2>/dev/null";
  std::FILE* p = popen(cmd.c_str(), "r");
  if (!p) return "unknown";
  char buf[64] = {0};
  std::string out;
  if (std::fgets(buf, sizeof buf, p)) out = buf;
  pclose(p);
  while (!out.empty() && (out.back() == '\n' || out.back() == '\r')) out.pop_back();
  return out.empty() ? "unknown" : out;
}

class Stopwatch {
 public:
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    return s;
  }

 private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

struct Run {
  ExperimentConfig cfg;
  fs::path out;
  fs::path cache;
  bool cache_required = false;
  json timings = json::object();
  std::vector<std::string> failures;
  Stopwatch sw;

  CoefficientPair spec() const { return CoefficientPair::make(cfg.a, cfg.b); }

  InstanceSpec instance_spec() const {
    InstanceSpec s;
    s.family = cfg.family;
    s.n = cfg.n;
    s.p = cfg.p;
    s.gamma = cfg.gamma;
    s.beta = cfg.beta();
    s.truth = cfg.truth.spec();
    s.seed = cfg.seed;
    return s;
  }

  ReportOptions report_options() const {
    ReportOptions o;
    o.certification = cfg.certification;
    o.validation = cfg.validation;
    o.concentration = cfg.concentration;
    return o;
  }

  EigenSystem eigen(bool write_outputs) {
    const CoefficientPair s = spec();
    const int K = std::max(cfg.K, needed_modes());
    const fs::path dir = cache / eigen_cache_key(s, cfg.N, K);
    if (cache_required && !fs::exists(dir / "meta.json"))
      throw Error("cli", "missing cache: no eigensystem at " + dir.string());
    bool cached = false;
    EigenSystem e = io::load_or_solve(s, K, cfg.N, cache, &cached);
    timings["eigen"] = sw.lap();
    if (write_outputs) {
      io::save_eigensystem(e, out / "eigen");
      const EigDiagnostics d = eig_diagnostics(e);
      io::CsvWriter w(out / "eigen" / "diagnostics.csv",
                      {"k", "lambda", "psi_sup", "dpsi_sup_over_k", "v_sup", "v_deriv_sup", "v_l2",
                       "above_threshold", "v_sup_ok", "v_deriv_ok"});
      for (const auto& r : d.rows)
        w.row({std::to_string(r.k), fmt(r.lambda), fmt(r.psi_sup), fmt(r.dpsi_sup_over_k), fmt(r.v_sup),
               fmt(r.v_deriv_sup), fmt(r.v_l2), r.above_threshold ? "1" : "0", r.v_sup_ok ? "1" : "0",
               r.v_deriv_ok ? "1" : "0"});
      check_eigensystem(e);
    }
    return e;
  }

  int needed_modes() const {
    int k = std::max(cfg.p, static_cast<int>(cfg.truth.spec().theta_star.size()));
    for (int p : cfg.sweep.p_grid) k = std::max(k, p);
    return k;
  }

  void check_eigensystem(const EigenSystem& e) {
    Eigen::VectorXd w = Eigen::VectorXd::Constant(e.N + 1, 1.0 / e.N);
    w(0) *= 0.5;
    w(e.N) *= 0.5;
    const Eigen::MatrixXd G = e.psi.transpose() * w.asDiagonal() * e.psi;
    const double dev = (G - Eigen::MatrixXd::Identity(e.K(), e.K())).cwiseAbs().maxCoeff();
    if (dev > 1e-6) failures.push_back("eigenfunctions not orthonormal: max deviation " + fmt(dev));
    for (int k = 1; k <= e.K(); ++k) {
      if (interior_sign_changes(e.psi.col(k - 1)) != k - 1)
        failures.push_back("psi_" + std::to_string(k) + " has the wrong number of sign changes");
    }
  }

  Instance instance(const EigenSystem& e, bool write_dataset, bool write_fit) {
    const InstanceSpec s = instance_spec();
    Instance inst;
    inst.spec = s;
    ExpFamily fam{s.family};
    inst.data = generate(e, fam, s.truth, s.n, s.seed);
    timings["simulate"] = sw.lap();
    if (write_dataset) io::save_dataset(inst.data, s.truth, out);
    if (!write_fit) return inst;
    inst.prob = make_problem(e, inst.data, fam, s.gamma, s.p);
    inst.fit = map_solve(inst.prob);
    timings["fit"] = sw.lap();
    io::save_fit(inst.fit, out / "fit.json");
    return inst;
  }

  InstanceReport certify(const EigenSystem& e, const Instance& inst) {
    const ReportOptions o = report_options();
    InstanceReport rep = certify_instance(inst, o);
    timings["certify"] = sw.lap();
    {
      io::CsvWriter w(out / "certificates.csv", io::certificate_header());
      for (const Certificate& c : rep.certificates) w.row(io::certificate_row("main", c));
    }
    const Comparison& cmp = rep.comparison;
    json cj = {{"m", cmp.g0.m},
               {"m0star", cmp.g0.m0},
               {"gamma0star", cmp.g0.gamma0},
               {"below_threshold", cmp.g0.below_threshold},
               {"ratio_dg", cmp.ratio_dg},
               {"ratio_identity", cmp.ratio_identity},
               {"ortho_constant", ortho_constant(e, inst.spec.n, inst.spec.p, cfg.certification.lambda_exp)}};
    if (rep.omega) {
      cj["omega"] = {{"omega_est", rep.omega->omega_est},     {"omega3_est", rep.omega->omega3_est},
                     {"tau3_est", rep.omega->tau3_est},       {"tau3_cert", rep.omega->tau3_cert},
                     {"chain_ok", rep.omega->chain_ok},       {"omega_le_third", rep.omega->omega_le_third}};
    }
    std::ofstream(out / "comparison.json") << cj.dump(2) << "\n";
    return rep;
  }

  void validate(const Instance& inst, InstanceReport& rep) {
    validate_instance(inst, report_options(), rep);
    timings["validate"] = sw.lap();
    {
      io::CsvWriter w(out / "tv.csv", {"instance", "method", "value", "ci_low", "ci_high", "ess", "grid_spec",
                                      "low_ess", "dominance_ok"});
      if (rep.tv)
        w.row({"main", to_string(rep.tv->method), fmt(rep.tv->value), fmt(rep.tv->ci_low), fmt(rep.tv->ci_high),
               fmt(rep.tv->ess), rep.tv->grid_spec, rep.tv->low_ess ? "1" : "0", rep.dominance_ok ? "1" : "0"});
    }
    io::CsvWriter w(out / "tails.csv",
                    {"r", "effdim", "gaussian_bound", "gaussian_hat", "gaussian_ci_low", "gaussian_ci_high",
                     "gaussian_se", "posterior_bound", "posterior_applicable", "posterior_hat", "posterior_ci_low",
                     "posterior_ci_high", "posterior_se", "ess", "low_ess", "gaussian_ok", "posterior_ok"});
    for (const TailReport& t : rep.tails) {
      const OutsideMass& m = t.empirical;
      w.row({fmt(t.r), fmt(t.effdim), fmt(t.gaussian_bound), fmt(m.gaussian), fmt(m.gaussian_ci.lo),
             fmt(m.gaussian_ci.hi), fmt(m.gaussian_se), fmt(t.posterior_bound), t.posterior_applicable ? "1" : "0",
             fmt(m.posterior), fmt(m.posterior_ci.lo), fmt(m.posterior_ci.hi), fmt(m.posterior_se), fmt(m.ess),
             m.low_ess ? "1" : "0", t.gaussian_ok ? "1" : "0", t.posterior_ok ? "1" : "0"});
    }
  }

  void sweep(const EigenSystem& e) {
    CertifyOptions co;
    co.r_points = cfg.certification.r_points;
    co.r_max_factor = cfg.certification.r_max_factor;
    co.beta = cfg.beta();
    const std::vector<SweepRow> rows = run_sweep(e, instance_spec(), cfg.sweep, co);
    timings["sweep"] = sw.lap();
    io::CsvWriter w(out / "sweep.csv",
                    {"n", "p", "m", "m0star", "gamma0star", "regime", "effdim_dg", "effdim_identity", "effdim_star",
                     "tau3_dg", "tau3_identity", "tau3_star", "ub_sq_dg", "ub_sq_identity", "ub_sq_star",
                     "tv_bound_dg", "tv_bound_identity", "tv_bound_star", "feasible_dg", "feasible_identity",
                     "feasible_star", "ratio_dg", "ratio_identity"});
    for (const SweepRow& r : rows) {
      const Comparison& c = r.cmp;
      w.row({std::to_string(r.n), std::to_string(r.p), fmt(c.g0.m), fmt(c.g0.m0), fmt(c.g0.gamma0), r.regime,
             fmt(c.dg.effdim), fmt(c.identity.effdim), fmt(c.star.effdim), fmt(c.dg.tau3_sup),
             fmt(c.identity.tau3_sup), fmt(c.star.tau3_sup), fmt(r.ub_sq_dg), fmt(r.ub_sq_identity),
             fmt(r.ub_sq_star), fmt(c.dg.tv_bound), fmt(c.identity.tv_bound), fmt(c.star.tv_bound),
             c.dg.feasible ? "1" : "0", c.identity.feasible ? "1" : "0", c.star.feasible ? "1" : "0",
             fmt(c.ratio_dg), fmt(c.ratio_identity)});
    }
    const RegimeFit f = fit_regimes(rows);
    json j = {{"axis", cfg.sweep.axis},
              {"plateau_slope", std::isfinite(f.plateau_slope) ? json(f.plateau_slope) : json(nullptr)},
              {"plateau_points", f.plateau_points},
              {"growth_slope", std::isfinite(f.growth_slope) ? json(f.growth_slope) : json(nullptr)},
              {"growth_points", f.growth_points}};
    std::ofstream(out / "sweep_regimes.json") << j.dump(2) << "\n";
  }
};

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

int execute(const std::string& sub, Run& run) {
  fs::create_directories(run.out);
  const std::string started = utc_now();
  Stopwatch total;
  int status = 0;
  std::string error;
  try {
    const EigenSystem e = run.eigen(sub == "eigen" || sub == "all");
    if (sub == "sweep") {
      run.sweep(e);
    } else if (sub != "eigen") {
      const bool need_fit = sub != "simulate";
      Instance inst = run.instance(e, true, need_fit);
      if (sub == "certify" || sub == "validate" || sub == "all") {
        InstanceReport rep = run.certify(e, inst);
        if (sub != "certify") run.validate(inst, rep);
        for (const auto& f : rep.failures) run.failures.push_back(f);
      }
    }
    if (!run.failures.empty()) status = 1;
  } catch (const std::exception& ex) {
    error = ex.what();
    status = 2;
  }
  json m = {{"subcommand", sub},
            {"config", json::parse(echo_config(run.cfg))},
            {"git_hash", git_hash()},
            {"started_at", started},
            {"wall_times", run.timings},
            {"total_seconds", total.lap()},
            {"threads", kernels::max_threads()},
            {"invariant_failures", run.failures},
            {"exit_status", status}};
  if (!error.empty()) m["error"] = error;
  std::ofstream(run.out / "manifest.json") << m.dump(2) << "\n";
  for (const auto& f : run.failures) std::cerr << "invariant failed: " << f << "\n";
  if (!error.empty()) std::cerr << "error: " << error << "\n";
  return status;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Laplace approximation certificates for linear inverse problems"};
  app.require_subcommand(1, 1);
  std::string config_path, out_dir, cache_dir;
  std::optional<std::uint64_t> seed;
  int threads = 0;
  app.add_option("--config", config_path, "experiment config (JSON)")->required();
  app.add_option("--out", out_dir, "output directory (overrides config)");
  app.add_option("--seed", seed, "random seed (overrides config)");
  app.add_option("--threads", threads, "OpenMP threads (0 = runtime default)")->check(CLI::NonNegativeNumber);
  app.add_option("--cache", cache_dir, "precomputed eigensystem cache; required to exist when given");
  for (const char* s : {"eigen", "simulate", "fit", "certify", "validate", "sweep", "all"})
    app.add_subcommand(s)->fallthrough();
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }
  const std::string sub = app.get_subcommands().front()->get_name();
  Run run;
  try {
    run.cfg = load_config(config_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  if (seed) run.cfg.seed = *seed;
  if (!out_dir.empty()) run.cfg.output = out_dir;
  if (threads > 0) kernels::set_threads(threads);
  run.out = run.cfg.output;
  run.cache = cache_dir.empty() ? run.out / "cache" : fs::path(cache_dir);
  run.cache_required = !cache_dir.empty() && sub != "eigen";
  return execute(sub, run);
}

}  // namespace lapcert
