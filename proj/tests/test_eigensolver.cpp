#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <numbers>

#include "corpus.hpp"
#include "lapcert/eigensolver.hpp"
#include "lapcert/error.hpp"

using namespace lapcert;
using lapcert::testing::spec_corpus;

namespace {

constexpr double kPi = std::numbers::pi;

const EigenSystem& cached(const std::string& name, int K, int N) {
  static std::map<std::tuple<std::string, int, int>, EigenSystem> cache;
  auto key = std::make_tuple(name, K, N);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  for (const auto& s : spec_corpus())
    if (s.name == name) return cache.emplace(key, solve_eigs(s.make(), K, N)).first->second;
  throw std::runtime_error("unknown spec " + name);
}

double grid_inner(const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  return inner(FunctionGrid(u), FunctionGrid(v));
}

}  // namespace

TEST(Liouville, Volterra) {
  const LiouvilleForm f = liouville_transform(CoefficientPair::make({1.0}, {0.0}), 1024);
  EXPECT_NEAR(f.T, 1.0, 1e-14);
  EXPECT_EQ(f.Q.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(f.c1, 1.0);
  EXPECT_EQ(f.c2, 0.0);
}

TEST(Liouville, UnitDampingHasUnitPotential) {
  const LiouvilleForm f = liouville_transform(CoefficientPair::make({1.0}, {1.0}), 1024);
  EXPECT_NEAR(f.T, 1.0, 1e-14);
  EXPECT_LT((f.Q.array() - 1.0).abs().maxCoeff(), 1e-14);
  EXPECT_EQ(f.c2, 1.0);
}

TEST(Liouville, LinearALength) {
  const LiouvilleForm f = liouville_transform(CoefficientPair::make({1.0, 0.5}, {0.0}), 4096);
  EXPECT_NEAR(f.T, 2.0 * std::log(1.5), 1e-7);
  EXPECT_EQ(f.c1, 1.0);
  EXPECT_NEAR(f.c2, -0.25, 1e-15);
}

TEST(Liouville, MapsAreMonotone) {
  for (const auto& s : spec_corpus()) {
    const LiouvilleForm f = liouville_transform(s.make(), 2048);
    EXPECT_EQ(f.t_of_x.values(0), 0.0);
    EXPECT_NEAR(f.t_of_x.values(2048), f.T, 1e-12);
    for (int i = 1; i <= 2048; ++i) ASSERT_GT(f.t_of_x.values(i), f.t_of_x.values(i - 1));
    for (int i = 1; i < f.x_of_t.size(); ++i) ASSERT_GT(f.x_of_t(i), f.x_of_t(i - 1));
    EXPECT_TRUE(f.Q.allFinite());
  }
}

TEST(SolveEigs, VolterraClosedForm) {
  const EigenSystem& e = cached("volterra", 50, 4096);
  EXPECT_NEAR(e.lambdas[0] / (4.0 / (kPi * kPi)) - 1.0, 0.0, 1e-6);
  for (int k = 1; k <= 50; ++k) {
    const double exact = 1.0 / std::pow((k - 0.5) * kPi, 2);
    EXPECT_NEAR(e.lambdas[k - 1] / exact, 1.0, 1e-6) << "k=" << k;
  }
  const int k = 50;
  const double lhs = k * k * e.lambdas[k - 1] * kPi * kPi / (k * k / std::pow(k - 0.5, 2));
  EXPECT_LE(std::abs(lhs - 1.0), 1e-6);
  for (int k : {1, 2, 5, 10}) {
    double err = 0;
    for (int i = 0; i <= e.N; ++i) {
      const double x = static_cast<double>(i) / e.N;
      err = std::max(err, std::abs(e.psi(i, k - 1) - std::sqrt(2.0) * std::sin((k - 0.5) * kPi * x)));
    }
    EXPECT_LT(err, 1e-5) << "k=" << k;
  }
}

TEST(SolveEigs, RejectsBadArguments) {
  const auto spec = CoefficientPair::make({1.0}, {0.0});
  EXPECT_THROW(solve_eigs(spec, 0, 2048), SolverError);
  EXPECT_THROW(solve_eigs(spec, 4, 512), SolverError);
}

TEST(SolveEigs, InvariantsOnCorpus) {
  for (const auto& s : spec_corpus()) {
    SCOPED_TRACE(s.name);
    const auto spec = s.make();
    const EigenSystem& e = cached(s.name, 50, 4096);
    ASSERT_EQ(e.K(), 50);
    double Tint = 0;
    {
      const int M = 20000;
      for (int i = 0; i < M; ++i) Tint += 1.0 / spec.a((i + 0.5) / M) / M;
    }
    const double asym = Tint * Tint / (kPi * kPi);
    for (int k = 1; k <= 50; ++k) {
      EXPECT_GT(e.lambdas[k - 1], 0.0);
      if (k > 1) EXPECT_LT(e.lambdas[k - 1], e.lambdas[k - 2]);
      const Eigen::VectorXd pk = e.psi.col(k - 1);
      EXPECT_NEAR(grid_inner(pk, pk), 1.0, 1e-6);
      for (int l = 1; l < k; ++l) EXPECT_LT(std::abs(grid_inner(pk, e.psi.col(l - 1))), 1e-4);
      EXPECT_EQ(pk(0), 0.0);
      EXPECT_GT(e.dpsi(0, k - 1), 0.0);
      EXPECT_EQ(interior_sign_changes(pk), k - 1);
      const double bres = std::abs(spec.a(1.0) * e.dpsi(e.N, k - 1) + spec.b(1.0) * pk(e.N));
      EXPECT_LE(bres, 1e-3 * e.deriv_sup_norms[k - 1]) << "k=" << k;
      if (k >= 5) {
        const double r = k * k * e.lambdas[k - 1] / asym;
        EXPECT_GE(r, 0.5);
        EXPECT_LE(r, 2.0);
      }
    }
  }
}

TEST(SolveEigs, SturmLiouvilleResidual) {
  for (const auto& s : spec_corpus()) {
    SCOPED_TRACE(s.name);
    const auto spec = s.make();
    const EigenSystem& e = cached(s.name, 50, 4096);
    const int N = e.N;
    const double dx = 1.0 / N;
    double worst_const = 0;
    for (int k : {1, 5, 20, 50}) {
      const Eigen::VectorXd p = e.psi.col(k - 1);
      double res = 0;
      for (int i = 1; i < N; ++i) {
        const double x = i * dx;
        const double ap = spec.a(x + dx / 2), am = spec.a(x - dx / 2);
        const double flux = (ap * ap * (p(i + 1) - p(i)) - am * am * (p(i) - p(i - 1))) / (dx * dx);
        const double q = spec.b(x) * spec.b(x) - (spec.da(x) * spec.b(x) + spec.a(x) * spec.db(x));
        res = std::max(res, std::abs(-flux + q * p(i) - p(i) / e.lambdas[k - 1]));
      }
      worst_const = std::max(worst_const, res * N * e.lambdas[k - 1]);
    }
    RecordProperty("residual_constant_" + s.name, std::to_string(worst_const));
    EXPECT_LT(worst_const, 10.0);
  }
}

TEST(SvdOracle, VolterraTopValue) {
  const EigenSystem o = svd_oracle(CoefficientPair::make({1.0}, {0.0}), 1024, 3);
  EXPECT_NEAR(o.lambdas[0], 4.0 / (kPi * kPi), 1e-3);
}

TEST(SvdOracle, AgreesWithShooting) {
  for (const auto& s : spec_corpus()) {
    SCOPED_TRACE(s.name);
    const EigenSystem& e = cached(s.name, 20, 2048);
    const EigenSystem o = svd_oracle(s.make(), 2048, 20);
    for (int k = 1; k <= 20; ++k) {
      EXPECT_LE(std::abs(e.lambdas[k - 1] - o.lambdas[k - 1]) / e.lambdas[k - 1], 1e-3) << "k=" << k;
      EXPECT_GE(std::abs(grid_inner(e.psi.col(k - 1), o.psi.col(k - 1))), 0.999) << "k=" << k;
    }
  }
}

TEST(Shooting, CountBelowIsMonotone) {
  const LiouvilleForm f = liouville_transform(CoefficientPair::make({1.0, 0.4, -0.3}, {-0.2, 0.5}), 2048);
  int prev = 0;
  for (double mu = 1.0; mu < 3e4; mu *= 1.3) {
    const int c = shoot(f, mu).count_below;
    EXPECT_GE(c, prev);
    prev = c;
  }
  EXPECT_GT(prev, 30);
}

TEST(Diagnostics, VolterraVkBounds) {
  const EigDiagnostics d = eig_diagnostics(cached("volterra", 50, 4096));
  EXPECT_EQ(d.violations, 0);
  for (const auto& r : d.rows) {
    EXPECT_NEAR(r.v_sup, std::sqrt(r.lambda), 1e-6 * std::sqrt(r.lambda) + 1e-9);
    EXPECT_NEAR(r.dpsi_sup_over_k, std::sqrt(2.0) * (r.k - 0.5) * kPi / r.k, 1e-3);
  }
  EXPECT_GT(d.c_l2_min, 0.0);
}

TEST(Diagnostics, SupNormTrendIsFlat) {
  for (const auto& s : spec_corpus()) {
    SCOPED_TRACE(s.name);
    const EigenSystem& e = cached(s.name, 50, 4096);
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (int k = 10; k <= 50; ++k, ++m) {
      const double x = std::log(k), y = std::log(e.sup_norms[k - 1]);
      sx += x, sy += y, sxx += x * x, sxy += x * y;
    }
    const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    EXPECT_GE(slope, -0.1);
    EXPECT_LE(slope, 0.1);
  }
}

TEST(CacheKey, DependsOnAllInputs) {
  const auto s1 = CoefficientPair::make({1.0}, {0.0});
  const auto s2 = CoefficientPair::make({1.0}, {0.1});
  const std::string k = eigen_cache_key(s1, 2048, 16);
  EXPECT_EQ(k, eigen_cache_key(s1, 2048, 16));
  EXPECT_NE(k, eigen_cache_key(s2, 2048, 16));
  EXPECT_NE(k, eigen_cache_key(s1, 4096, 16));
  EXPECT_NE(k, eigen_cache_key(s1, 2048, 17));
}
