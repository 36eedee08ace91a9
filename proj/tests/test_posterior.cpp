#include <gtest/gtest.h>
#include <omp.h>

#include <cmath>

#include "corpus.hpp"
#include "fd.hpp"
#include "lapcert/error.hpp"
#include "lapcert/pipeline.hpp"
#include "lapcert/posterior.hpp"

using namespace lapcert;

namespace {

const EigenSystem& volterra() {
  static const EigenSystem e = solve_eigs(CoefficientPair::make({1.0}, {0.0}), 32, 4096);
  return e;
}

Problem small_problem(FamilyKind kind, int n, int p, std::uint64_t seed, double gamma = 2.0) {
  const ExpFamily fam{kind};
  const Dataset d = generate(volterra(), fam, TruthSpec::decay(8), n, seed);
  return make_problem(volterra(), d, fam, gamma, p);
}

Eigen::VectorXd random_vec(PhiloxStream& r, int p, double scale = 1.0) {
  Eigen::VectorXd v(p);
  for (int k = 0; k < p; ++k) v(k) = scale * r.normal();
  return v;
}

constexpr FamilyKind kFamilies[] = {FamilyKind::poisson, FamilyKind::bernoulli, FamilyKind::gaussian};

}  // namespace

TEST(Objective, GaussianZeroDataAtOrigin) {
  const Dataset d{Eigen::VectorXd::Zero(50), Eigen::VectorXd::Zero(50), 0, FamilyKind::gaussian, 0.0};
  const Problem prob = make_problem(volterra(), d, ExpFamily{FamilyKind::gaussian}, 2.0, 5);
  EXPECT_EQ(f_value(prob, Eigen::VectorXd::Zero(5)), 0.0);
  EXPECT_EQ(grad(prob, Eigen::VectorXd::Zero(5)).norm(), 0.0);
}

TEST(Objective, PriorDiagonal) {
  const Eigen::VectorXd g = prior_diagonal(4, 1.5);
  for (int k = 1; k <= 4; ++k) EXPECT_DOUBLE_EQ(g(k - 1), std::pow(k, 3.0));
}

TEST(Objective, DerivativesMatchFiniteDifferences) {
  PhiloxStream r(11, 0);
  double eg = 0, eh = 0;
  for (int t = 0; t < 30; ++t) {
    const Problem prob = small_problem(kFamilies[t % 3], 30 + t, 2 + t % 4, 500 + t);
    const Eigen::VectorXd th = random_vec(r, prob.p, 0.7);
    const Eigen::VectorXd g = grad(prob, th);
    const Eigen::MatrixXd H = hessian(prob, th);
    const double h = 1e-4;
    Eigen::VectorXd gfd(prob.p);
    Eigen::MatrixXd Hfd(prob.p, prob.p);
    for (int k = 0; k < prob.p; ++k) {
      Eigen::VectorXd e = Eigen::VectorXd::Zero(prob.p);
      e(k) = h;
      gfd(k) = (f_value(prob, th + e) - f_value(prob, th - e)) / (2 * h);
      Hfd.col(k) = (grad(prob, th + e) - grad(prob, th - e)) / (2 * h);
    }
    eg = std::max(eg, (g - gfd).norm() / std::max(g.norm(), 1.0));
    eh = std::max(eh, (H - Hfd).norm() / H.norm());
  }
  EXPECT_LE(eg, 1e-6);
  EXPECT_LE(eh, 1e-5);
}

TEST(ThirdDirectional, GaussianVanishesAndOddSymmetry) {
  PhiloxStream r(12, 0);
  const Problem g = small_problem(FamilyKind::gaussian, 60, 4, 3);
  const Problem p = small_problem(FamilyKind::poisson, 60, 4, 3);
  for (int t = 0; t < 20; ++t) {
    const Eigen::VectorXd th = random_vec(r, 4), v = random_vec(r, 4);
    EXPECT_EQ(third_directional(g, th, v), 0.0);
    EXPECT_EQ(third_directional(p, th, -v), -third_directional(p, th, v));
  }
}

TEST(ThirdDirectional, MatchesThirdDifference) {
  PhiloxStream r(13, 0);
  double worst = 0;
  for (int t = 0; t < 30; ++t) {
    const Problem prob = small_problem(t % 2 ? FamilyKind::poisson : FamilyKind::bernoulli, 40, 2 + t % 4, 700 + t);
    const Eigen::VectorXd th = random_vec(r, prob.p), v = random_vec(r, prob.p);
    const double exact = third_directional(prob, th, v);
    const auto fd = lapcert::testing::third_fd_richardson(prob, th, v, 1e-2);
    worst = std::max(worst, std::max(0.0, std::abs(fd.value - exact) - fd.roundoff) / std::abs(exact));
  }
  EXPECT_LE(worst, 1e-4);
}

TEST(Objective, ConvexAlongRandomSegments) {
  PhiloxStream r(14, 0);
  for (FamilyKind kind : kFamilies) {
    const Problem prob = small_problem(kind, 80, 5, 21);
    for (int t = 0; t < 1000; ++t) {
      const Eigen::VectorXd a = random_vec(r, 5), b = random_vec(r, 5);
      const double mid = f_value(prob, 0.5 * (a + b));
      const double avg = 0.5 * (f_value(prob, a) + f_value(prob, b));
      ASSERT_LE(mid, avg + 1e-12 * std::abs(avg));
    }
  }
}

TEST(Objective, HessianLowerBoundIsPsd) {
  PhiloxStream r(15, 0);
  for (FamilyKind kind : kFamilies) {
    const Problem prob = small_problem(kind, 120, 6, 31);
    for (double g0 : {0.0, 1.0, 1.5, 2.0}) {
      for (int t = 0; t < 100; ++t) {
        const Eigen::VectorXd th = random_vec(r, 6);
        Eigen::MatrixXd M = hess_L(prob, th);
        M.diagonal() += prior_diagonal(6, g0);
        Eigen::LLT<Eigen::MatrixXd> llt(M);
        ASSERT_EQ(llt.info(), Eigen::Success);
      }
    }
  }
}

TEST(MapSolve, GaussianClosedFormInOneStep) {
  const Problem prob = small_problem(FamilyKind::gaussian, 300, 6, 4);
  const LaplaceFit fit = map_solve(prob);
  Eigen::MatrixXd A = prob.gram;
  A.diagonal() += prob.prior;
  const Eigen::VectorXd direct = A.ldlt().solve(prob.R.transpose() * prob.y);
  EXPECT_LT((fit.theta_hat - direct).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LE(fit.newton_iters, 2);
}

TEST(MapSolve, FitInvariants) {
  for (FamilyKind kind : kFamilies) {
    const Problem prob = small_problem(kind, 1000, 8, 6);
    const LaplaceFit fit = map_solve(prob);
    EXPECT_LE(fit.grad_norm, kNewtonGradTol * (1.0 + std::abs(fit.f_hat)));
    EXPECT_TRUE(fit.DG2.isApprox(fit.DG2.transpose(), 0.0));
    EXPECT_EQ(Eigen::LLT<Eigen::MatrixXd>(fit.DG2).info(), Eigen::Success);
    Eigen::MatrixXd expect = fit.hess_L;
    expect.diagonal() += prob.prior;
    EXPECT_LT((fit.DG2 - expect).cwiseAbs().maxCoeff(), 1e-9 * expect.norm());
    EXPECT_TRUE(std::isfinite(fit.rq_sup));
  }
}

TEST(MapSolve, ZeroTruthGivesSmallEstimate) {
  const ExpFamily fam{FamilyKind::poisson};
  const Dataset d = generate(volterra(), fam, TruthSpec{Eigen::VectorXd::Zero(4)}, 20000, 2);
  const LaplaceFit fit = map_solve(make_problem(volterra(), d, fam, 2.0, 4));
  EXPECT_TRUE(fit.theta_hat.allFinite());
}

TEST(MapSolve, PinnedDeskInstanceAcrossThreadCounts) {
  const InstanceSpec s = lapcert::testing::desk_spec({200, 4, 1});
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  const Instance one = build_instance(volterra(), s);
  omp_set_num_threads(4);
  const Instance four = build_instance(volterra(), s);
  omp_set_num_threads(saved);
  EXPECT_EQ(one.fit.theta_hat, four.fit.theta_hat);
  EXPECT_EQ(one.fit.theta_hat, build_instance(volterra(), s).fit.theta_hat);
  const double pinned[4] = {0.45298127360434287, -0.19887383332147848, 0.033416320062913105, 0.004191795507746599};
  for (int k = 0; k < 4; ++k) EXPECT_NEAR(one.fit.theta_hat(k), pinned[k], 1e-12);
}
