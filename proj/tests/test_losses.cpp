#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "pinet/error.hpp"
#include "pinet/losses.hpp"
#include "pinet/rng.hpp"

using namespace pinet;

TEST(Pinball, Examples) {
  EXPECT_DOUBLE_EQ(pinball(0.5, 2.0), 1.0);
  EXPECT_DOUBLE_EQ(pinball(0.05, -2.0), 1.9);
  for (double tau : {0.0, 0.3, 1.0}) EXPECT_EQ(pinball(tau, 0.0), 0.0);
}

TEST(Pinball, RejectsLevelOutsideUnitInterval) {
  EXPECT_THROW(pinball(-0.1, 1.0), DomainError);
  EXPECT_THROW(pinball(1.1, 1.0), DomainError);
}

TEST(Pinball, SlopeAtKinkIsTauMinusOne) {
  EXPECT_DOUBLE_EQ(pinball_slope(0.3, 0.0), -0.7);
  EXPECT_DOUBLE_EQ(pinball_slope(0.3, 1.0), 0.3);
  EXPECT_DOUBLE_EQ(pinball_slope(0.3, -1.0), -0.7);
}

TEST(Pinball, NonNegativeZeroOnlyAtOrigin) {
  Rng rng(1);
  for (int i = 0; i < 10000; ++i) {
    const double tau = 0.001 + 0.998 * rng.uniform();
    const double u = 10.0 * rng.normal();
    const double h = pinball(tau, u);
    ASSERT_GE(h, 0.0);
    if (u != 0.0) ASSERT_GT(h, 0.0);
  }
}

TEST(Pinball, Convex) {
  Rng rng(2);
  for (int i = 0; i < 10000; ++i) {
    const double tau = rng.uniform();
    const double u1 = 5.0 * rng.normal(), u2 = 5.0 * rng.normal(), lam = rng.uniform();
    ASSERT_LE(pinball(tau, lam * u1 + (1 - lam) * u2),
              lam * pinball(tau, u1) + (1 - lam) * pinball(tau, u2) + 1e-12);
  }
}

TEST(PiLoss, Examples) {
  EXPECT_EQ(pi_loss({0, 0, 0}, 0.0, 0.37), 0.0);
  EXPECT_NEAR(pi_loss({0, 1, 2}, 1.0, 0.2), 0.2, 1e-15);
  EXPECT_NEAR(pi_loss({-1, 0, 1}, 3.0, 0.1), 3.6, 1e-15);
}

TEST(PiLoss, DecomposesIntoThreePinballTerms) {
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    double a = rng.normal(), b = rng.normal(), c = rng.normal();
    if (a > b) std::swap(a, b);
    if (b > c) std::swap(b, c);
    if (a > b) std::swap(a, b);
    const double y = 2.0 * rng.normal();
    const double tau = 0.01 + 0.98 * rng.uniform();
    const double want = pinball(tau / 2, y - a) + pinball(0.5, y - b) + pinball(1 - tau / 2, y - c);
    ASSERT_DOUBLE_EQ(pi_loss({a, b, c}, y, tau), want);
  }
}

TEST(PiLoss, RejectsInfiniteEndpointsAndBadTau) {
  EXPECT_THROW(pi_loss({-INFINITY, 0, INFINITY}, 0.0, 0.1), DomainError);
  EXPECT_THROW(pi_loss({0, 0, 0}, 0.0, 0.0), DomainError);
  EXPECT_NO_THROW(pi_loss({0, 0, 0}, 0.0, 1.0));
}

TEST(EmpiricalRisk, ArithmeticMean) {
  const std::vector<PiTriple> single{{0, 0, 0}};
  EXPECT_EQ(empirical_risk(single, std::vector<double>{0.0}, 0.5), 0.0);
  const std::vector<PiTriple> two{{0, 1, 2}, {0, 0, 0}};
  const std::vector<double> y{1.0, 2.4};
  EXPECT_NEAR(pi_loss(two[0], y[0], 0.2), 0.2, 1e-15);
  EXPECT_NEAR(pi_loss(two[1], y[1], 0.2), 3.6, 1e-12);
  EXPECT_NEAR(empirical_risk(two, y, 0.2), 1.9, 1e-12);
  EXPECT_THROW(empirical_risk(std::vector<PiTriple>{}, std::vector<double>{}, 0.1), DomainError);
}

TEST(EmpiricalRisk, MatchesIndependentSummation) {
  Rng rng(4);
  std::vector<PiTriple> t;
  std::vector<double> y;
  double sum = 0.0;
  const double tau = 0.15;
  auto h = [](double q, double u) { return u > 0 ? q * u : (q - 1) * u; };
  for (int i = 0; i < 50; ++i) {
    const double m = rng.normal();
    const PiTriple p{m - rng.uniform(), m, m + rng.uniform()};
    const double yi = rng.normal();
    t.push_back(p);
    y.push_back(yi);
    sum += h(tau / 2, yi - p.lower) + h(0.5, yi - p.median) + h(1 - tau / 2, yi - p.upper);
  }
  EXPECT_NEAR(empirical_risk(t, y, tau), sum / 50.0, 1e-12);
}

TEST(GaussianNll, Examples) {
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  EXPECT_NEAR(gaussian_nll(1.3, 1.0, 1.3), 0.9189385332046727, 1e-12);
  EXPECT_NEAR(gaussian_nll(0.0, 1.0, 1.0), half_log_2pi + 0.5, 1e-12);
  EXPECT_NEAR(gaussian_nll(0.0, 1.0, 1.0), 1.4189, 1e-4);
  EXPECT_THROW(gaussian_nll(0.0, 0.0, 1.0), DomainError);
}

TEST(GaussianNll, MatchesLogDensityOracle) {
  const double mu = 0.7, var = 2.3, y = -1.1;
  const double density = std::exp(-(y - mu) * (y - mu) / (2 * var)) / std::sqrt(2 * std::numbers::pi * var);
  EXPECT_NEAR(gaussian_nll(mu, var, y), -std::log(density), 1e-12);
}

TEST(GaussianNll, CanBeNegativeForSmallVariance) { EXPECT_LT(gaussian_nll(0.0, 0.01, 0.0), 0.0); }

TEST(VarianceMap, SoftplusPlusFloor) {
  EXPECT_NEAR(variance_from_raw(0.0), std::log(2.0) + 1e-6, 1e-15);
  EXPECT_NEAR(variance_from_raw(-800.0), kVarianceFloor, 1e-18);
  EXPECT_NEAR(variance_from_raw(50.0), 50.0 + 1e-6, 1e-9);
}

// Grid minimiser of mean pinball loss over N(0,1) draws recovers the quantile.
TEST(Pinball, PopulationMinimizerRecoversNormalQuantiles) {
  Rng rng(20240101);
  std::vector<double> z(100000);
  for (auto& v : z) v = rng.normal();
  auto risk = [&](double tau, double q) {
    double s = 0.0;
    for (double v : z) s += pinball(tau, v - q);
    return s / static_cast<double>(z.size());
  };
  for (double tau : {0.05, 0.5, 0.95}) {
    double best = 0.0, best_risk = INFINITY;
    for (int k = -300; k <= 300; ++k) {
      const double q = k / 100.0;
      const double r = risk(tau, q);
      if (r < best_risk) best_risk = r, best = q;
    }
    const double centre = best;
    for (int k = -20; k <= 20; ++k) {
      const double q = centre + k / 2000.0;
      const double r = risk(tau, q);
      if (r < best_risk) best_risk = r, best = q;
    }
    EXPECT_NEAR(best, normal_quantile(tau), 0.05) << "tau=" << tau;
  }
}
