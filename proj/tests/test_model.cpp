#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "lapcert/eigensolver.hpp"
#include "lapcert/error.hpp"
#include "lapcert/model.hpp"
#include "lapcert/rng.hpp"

using namespace lapcert;

namespace {

const EigenSystem& volterra() {
  static const EigenSystem e = solve_eigs(CoefficientPair::make({1.0}, {0.0}), 8, 4096);
  return e;
}

TruthSpec unit_first(int p) {
  TruthSpec t;
  t.theta_star = Eigen::VectorXd::Zero(p);
  t.theta_star(0) = 1.0;
  return t;
}

const double kFirstModePeak = 2.0 / std::numbers::pi * std::sqrt(2.0);

}  // namespace

TEST(Philox, KnownAnswer) {
  const auto out = PhiloxStream::block({0, 0, 0, 0}, {0, 0});
  EXPECT_EQ(out[0], 0x6627e8d5u);
  EXPECT_EQ(out[1], 0xe169c58du);
  EXPECT_EQ(out[2], 0xbc57ac4cu);
  EXPECT_EQ(out[3], 0x9b00dbd8u);
}

TEST(Philox, StreamsAreReproducibleAndDistinct) {
  PhiloxStream a(42, 7), b(42, 7), c(42, 8);
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    EXPECT_EQ(x, b.next_u64());
    EXPECT_NE(x, c.next_u64());
  }
}

TEST(Philox, UniformMoments) {
  PhiloxStream r(1, 0);
  const int M = 200000;
  double s = 0, s2 = 0;
  for (int i = 0; i < M; ++i) {
    const double u = r.uniform();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
    s += u;
    s2 += u * u;
  }
  EXPECT_NEAR(s / M, 0.5, 4.0 * std::sqrt(1.0 / 12 / M));
  EXPECT_NEAR(s2 / M, 1.0 / 3, 4.0 * std::sqrt(4.0 / 45 / M));
}

TEST(ExpFamily, CumulantDerivatives) {
  const ExpFamily p{FamilyKind::poisson}, g{FamilyKind::gaussian}, b{FamilyKind::bernoulli};
  for (double s : {-2.0, -0.3, 0.0, 0.7, 1.9}) {
    EXPECT_DOUBLE_EQ(p.h(s), std::exp(s));
    EXPECT_DOUBLE_EQ(p.h3(s), std::exp(s));
    EXPECT_DOUBLE_EQ(g.h(s), s * s / 2);
    EXPECT_EQ(g.h3(s), 0.0);
    EXPECT_NEAR(b.h(s), std::log1p(std::exp(s)), 1e-15);
    for (const ExpFamily* f : {&p, &g, &b}) {
      const double e = 1e-4;
      EXPECT_GT(f->h2(s), 0.0);
      EXPECT_NEAR(f->h1(s), (f->h(s + e) - f->h(s - e)) / (2 * e), 1e-7);
      EXPECT_NEAR(f->h2(s), (f->h1(s + e) - f->h1(s - e)) / (2 * e), 1e-7);
      EXPECT_NEAR(f->h3(s), (f->h2(s + e) - f->h2(s - e)) / (2 * e), 1e-7);
    }
  }
}

TEST(ExpFamily, ThirdDerivativeEnvelopes) {
  const ExpFamily p{FamilyKind::poisson}, g{FamilyKind::gaussian}, b{FamilyKind::bernoulli};
  EXPECT_DOUBLE_EQ(p.d3_envelope(1.5), std::exp(1.5));
  EXPECT_EQ(g.d3_envelope(3.0), 0.0);
  EXPECT_NEAR(kBernoulliH3Max, 1.0 / (6.0 * std::sqrt(3.0)), 1e-16);
  EXPECT_NEAR(bernoulli_h3_argmax(), std::log(2.0 + std::sqrt(3.0)), 1e-14);
  EXPECT_NEAR(std::abs(b.h3(bernoulli_h3_argmax())), kBernoulliH3Max, 1e-15);
  for (double K : {0.1, 0.5, 1.0, 1.3, 2.0, 5.0}) {
    double brute = 0;
    for (int i = 0; i <= 20000; ++i) brute = std::max(brute, std::abs(b.h3(-K + 2 * K * i / 20000.0)));
    EXPECT_GE(b.d3_envelope(K), brute - 1e-12);
    EXPECT_LE(b.d3_envelope(K), brute + 1e-6);
  }
}

TEST(Generate, GaussianZeroSignal) {
  const Dataset d = generate(volterra(), ExpFamily{FamilyKind::gaussian}, TruthSpec{Eigen::VectorXd::Zero(3)},
                             4000, 9);
  EXPECT_EQ(d.s_true.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_NEAR(d.y.mean(), 0.0, 4.0 / std::sqrt(4000.0));
  EXPECT_NEAR((d.y.array() - d.y.mean()).square().mean(), 1.0, 0.1);
}

TEST(Generate, PoissonUnitRate) {
  const int n = 5000;
  const Dataset d = generate(volterra(), ExpFamily{FamilyKind::poisson}, TruthSpec{Eigen::VectorXd::Zero(3)}, n, 3);
  EXPECT_NEAR(d.y.mean(), 1.0, 3.0 / std::sqrt(static_cast<double>(n)));
  for (int j = 0; j < n; ++j) {
    ASSERT_GE(d.y(j), 0.0);
    ASSERT_EQ(d.y(j), std::floor(d.y(j)));
  }
}

TEST(Generate, PoissonRateAtRightEnd) {
  const int n = 200;
  const Dataset d = generate(volterra(), ExpFamily{FamilyKind::poisson}, unit_first(3), n, 5);
  EXPECT_NEAR(d.s_true(n - 1), kFirstModePeak, 1e-6);
  const double rate = std::exp(d.s_true(n - 1));
  EXPECT_NEAR(rate, std::exp(kFirstModePeak), 1e-6);
  EXPECT_NEAR(rate / 2.459, 1.0, 1e-3);
  PhiloxStream r(77, 1);
  const ExpFamily p{FamilyKind::poisson};
  double s = 0;
  for (int rep = 0; rep < 10000; ++rep) s += p.sample(d.s_true(n - 1), r);
  EXPECT_NEAR(s / 10000 / rate, 1.0, 0.05);
}

TEST(Generate, BernoulliSupport) {
  const Dataset d = generate(volterra(), ExpFamily{FamilyKind::bernoulli}, unit_first(2), 1000, 4);
  for (int j = 0; j < 1000; ++j) ASSERT_TRUE(d.y(j) == 0.0 || d.y(j) == 1.0);
}

TEST(Generate, MeanPropertyAcrossReplications) {
  const int n = 40, reps = 3000;
  for (FamilyKind kind : {FamilyKind::poisson, FamilyKind::bernoulli, FamilyKind::gaussian}) {
    SCOPED_TRACE(to_string(kind));
    const ExpFamily f{kind};
    const TruthSpec t = TruthSpec::decay(5, 0.8, 2.0);
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(n);
    Dataset d;
    for (int r = 0; r < reps; ++r) {
      d = generate(volterra(), f, t, n, 1000 + r);
      sum += d.y;
    }
    for (int j = 0; j < n; ++j) {
      const double sd = std::sqrt(f.h2(d.s_true(j)) / reps);
      EXPECT_LE(std::abs(sum(j) / reps - f.h1(d.s_true(j))), 4.0 * sd) << "j=" << j;
    }
  }
}

TEST(Generate, Deterministic) {
  const ExpFamily f{FamilyKind::poisson};
  const TruthSpec t = TruthSpec::decay(6);
  const Dataset a = generate(volterra(), f, t, 3000, 12);
  const Dataset b = generate(volterra(), f, t, 3000, 12);
  const Dataset c = generate(volterra(), f, t, 3000, 13);
  EXPECT_EQ(a.y, b.y);
  EXPECT_EQ(a.s_true, b.s_true);
  EXPECT_NE(a.y, c.y);
}

TEST(Generate, RejectsOversizedTruth) {
  EXPECT_THROW(generate(volterra(), ExpFamily{FamilyKind::poisson}, TruthSpec::decay(9), 100, 1), Error);
}

TEST(Generate, PoissonOverflowIsModelError) {
  TruthSpec t = unit_first(2);
  t.theta_star(0) = 40.0;
  EXPECT_THROW(generate(volterra(), ExpFamily{FamilyKind::poisson}, t, 100, 1), ModelError);
}

TEST(TruthSpec, DecayPreset) {
  const TruthSpec t = TruthSpec::decay(4, 0.5, 2.0);
  ASSERT_EQ(t.theta_star.size(), 4);
  EXPECT_DOUBLE_EQ(t.theta_star(0), 0.5);
  EXPECT_DOUBLE_EQ(t.theta_star(1), -0.125);
  EXPECT_DOUBLE_EQ(t.theta_star(2), 0.5 / 9);
  EXPECT_DOUBLE_EQ(t.theta_star(3), -0.5 / 16);
}

TEST(SignalSupNorm, Examples) {
  EXPECT_EQ(signal_sup_norm(volterra(), Eigen::VectorXd::Zero(4), 100), 0.0);
  EXPECT_NEAR(signal_sup_norm(volterra(), unit_first(4).theta_star, 100), kFirstModePeak, 1e-6);
  PhiloxStream r(3, 3);
  const EigenSystem& e = volterra();
  for (int t = 0; t < 20; ++t) {
    Eigen::VectorXd th(8);
    double tri = 0;
    for (int k = 0; k < 8; ++k) {
      th(k) = r.normal();
      tri += std::abs(th(k)) * std::sqrt(e.lambdas[k]) * e.sup_norms[k];
    }
    EXPECT_LE(signal_sup_norm(e, th, 300), tri + 1e-12);
  }
}
