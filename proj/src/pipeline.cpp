#include "lapcert/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <tuple>

#include "lapcert/error.hpp"
#include "lapcert/rng.hpp"

namespace lapcert {

namespace {
constexpr std::uint64_t kTvTag = 0x7A11;
constexpr std::uint64_t kTailTag = 0x7A12;
constexpr std::uint64_t kOmegaTag = 0x7A13;
}  // namespace

Instance build_instance(const EigenSystem& eig, const InstanceSpec& spec) {
  Instance inst;
  inst.spec = spec;
  ExpFamily fam{spec.family};
  inst.data = generate(eig, fam, spec.truth, spec.n, spec.seed);
  inst.prob = make_problem(eig, inst.data, fam, spec.gamma, spec.p);
  inst.fit = map_solve(inst.prob);
  return inst;
}

InstanceReport certify_instance(const Instance& inst, const ReportOptions& opts) {
  InstanceReport rep;
  CertifyOptions co;
  co.r_points = opts.certification.r_points;
  co.r_max_factor = opts.certification.r_max_factor;
  co.beta = inst.spec.beta;
  rep.comparison = compare_choices(inst.fit, inst.prob, co);
  rep.certificates.push_back(rep.comparison.dg);
  rep.certificates.push_back(rep.comparison.identity);
  if (opts.certification.auto_star) {
    rep.certificates.push_back(rep.comparison.star);
  } else {
    for (double g0 : opts.certification.gamma0)
      rep.certificates.push_back(certify(inst.fit, inst.prob, choice_gamma0(inst.fit, g0), co));
  }
  for (const Certificate& c : rep.certificates) {
    if (c.choice.kind == ChoiceKind::gamma0_family && c.choice.gamma0 <= inst.spec.gamma &&
        std::abs(c.alpha_raw - 1.0) > 1e-8) {
      rep.alpha_ok = false;
      rep.failures.push_back("alpha(D(gamma0)) != 1 for " + c.choice.label());
    }
  }
  const Certificate& star = rep.comparison.star;
  if (opts.omega_samples > 0 && star.radius > 0.0) {
    rep.omega = omega_diagnostics(inst.fit, inst.prob, star.choice, star.radius, opts.omega_samples,
                                  derive_seed(inst.spec.seed, kOmegaTag));
    if (!rep.omega->chain_ok) rep.failures.push_back("omega chain violated for " + star.choice.label());
  }
  return rep;
}

std::optional<TVEstimate> estimate_tv(const Instance& inst, const ValidationConfig& v, std::uint64_t seed) {
  std::string method = v.method;
  if (method == "none") return std::nullopt;
  if (method == "auto") method = inst.spec.p <= 2 ? "quadrature" : "importance";
  if (method == "quadrature") return tv_quadrature(inst.fit, inst.prob, v.per_axis);
  if (inst.spec.p > kMaxImportanceDim) return std::nullopt;
  return tv_importance(inst.fit, inst.prob, v.M, derive_seed(seed, kTvTag));
}

void validate_instance(const Instance& inst, const ReportOptions& opts, InstanceReport& rep) {
  if (opts.run_validation) {
    rep.tv = estimate_tv(inst, opts.validation, inst.spec.seed);
    if (rep.tv) {
      for (const Certificate& c : rep.certificates) {
        if (c.feasible && c.tv_bound < 1.0 && rep.tv->ci_high > c.tv_bound + kDominanceFloor) {
          rep.dominance_ok = false;
          rep.failures.push_back("empirical TV above certified bound for " + c.choice.label());
        }
      }
    }
  }
  if (opts.run_tails) {
    const Certificate& star = rep.comparison.star;
    std::vector<double> radii;
    for (double f : opts.concentration.radius_factors) radii.push_back(f * std::sqrt(star.effdim));
    rep.tails = tail_reports(inst.fit, inst.prob, star.choice.D2, star.effdim, radii, opts.concentration.M,
                             derive_seed(inst.spec.seed, kTailTag));
    for (const TailReport& t : rep.tails) {
      if (!t.gaussian_ok || !t.posterior_ok) {
        rep.tails_ok = false;
        rep.failures.push_back("tail bound exceeded at r=" + std::to_string(t.r));
      }
    }
  }
}

std::string regime_label(double p, double m, double m0) {
  if (p < m) return "p<m";
  if (p <= m0) return "m<p<m0*";
  return "p>m0*";
}

namespace {
double ub_sq(const Certificate& c) {
  const double v = c.effdim * c.tau3_sup;
  return v * v;
}
}  // namespace

std::vector<SweepRow> run_sweep(const EigenSystem& eig, const InstanceSpec& base, const SweepConfig& sweep,
                                const CertifyOptions& copts) {
  std::vector<std::pair<int, int>> points;
  if (sweep.axis == "p") {
    for (int p : sweep.p_grid) points.emplace_back(base.n, p);
  } else {
    for (int n : sweep.n_grid) points.emplace_back(n, base.p);
  }
  std::vector<SweepRow> rows(points.size());
  std::vector<std::exception_ptr> errors(points.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t i = 0; i < points.size(); ++i) {
    try {
      InstanceSpec s = base;
      s.n = points[i].first;
      s.p = points[i].second;
      const Instance inst = build_instance(eig, s);
      SweepRow& r = rows[i];
      r.n = s.n;
      r.p = s.p;
      CertifyOptions co = copts;
      co.beta = s.beta;
      r.cmp = compare_choices(inst.fit, inst.prob, co);
      r.regime = regime_label(s.p, r.cmp.g0.m, r.cmp.g0.m0);
      r.ub_sq_dg = ub_sq(r.cmp.dg);
      r.ub_sq_identity = ub_sq(r.cmp.identity);
      r.ub_sq_star = ub_sq(r.cmp.star);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  std::stable_sort(rows.begin(), rows.end(),
                   [](const SweepRow& a, const SweepRow& b) { return std::tie(a.n, a.p) < std::tie(b.n, b.p); });
  return rows;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) return std::nan("");
  double mx = 0, my = 0;
  const double k = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]) / k;
    my += std::log(y[i]) / k;
  }
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxx > 0 ? sxy / sxx : std::nan("");
}

RegimeFit fit_regimes(const std::vector<SweepRow>& rows) {
  std::vector<double> pp, yp, pg, yg;
  for (const SweepRow& r : rows) {
    if (r.p > r.cmp.g0.m0) {
      pp.push_back(r.p);
      yp.push_back(std::sqrt(r.ub_sq_star));
    } else if (r.p < r.cmp.g0.m) {
      pg.push_back(r.p);
      yg.push_back(r.ub_sq_star);
    }
  }
  RegimeFit f;
  f.plateau_points = static_cast<int>(pp.size());
  f.plateau_slope = loglog_slope(pp, yp);
  f.growth_points = static_cast<int>(pg.size());
  f.growth_slope = loglog_slope(pg, yg);
  return f;
}

}  // namespace lapcert
