#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "pinet/calibrate.hpp"
#include "pinet/error.hpp"
#include "pinet/rng.hpp"

using namespace pinet;

namespace {

// Triples (-1, 0, 1) make the score equal |y| on either side.
std::vector<PiTriple> unit_triples(std::size_t n) { return std::vector<PiTriple>(n, PiTriple{-1, 0, 1}); }

// One-feature dataset whose rows are all D2; x is the row index.
Dataset calibration_set(const std::vector<double>& y) {
  std::vector<double> x(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) x[i] = static_cast<double>(i);
  Dataset d(1, x, y);
  d.assign_roles(std::vector<Role>(y.size(), Role::calibration));
  return d;
}

// Zero-hidden-layer network emitting (c - w, c, c + w) for every input.
PiNetwork constant_net(double c, double w) {
  DenseLayer L{1, 3, {0, 0, 0}, {c - w, c, c + w}, false};
  return PiNetwork(Mlp({L}));
}

}  // namespace

TEST(ConformalRank, Examples) {
  EXPECT_EQ(conformal_rank(99, 0.1), 90u);
  EXPECT_EQ(conformal_rank(5, 0.1), 6u);
  EXPECT_EQ(conformal_rank(5, 0.5), 3u);
  EXPECT_EQ(conformal_rank(3, 0.5), 2u);
  EXPECT_THROW(conformal_rank(10, 0.0), DomainError);
}

TEST(ConformityScore, Examples) {
  EXPECT_DOUBLE_EQ(conformity_score({0, 1, 2}, 3.0), 2.0);
  EXPECT_EQ(conformity_score({0, 1, 2}, 1.0), 0.0);
  EXPECT_DOUBLE_EQ(conformity_score({0, 1, 2}, 0.5), 0.5);
}

TEST(ConformityScore, DegenerateWidths) {
  EXPECT_EQ(conformity_score({1, 1, 2}, 0.0), kInf);
  EXPECT_EQ(conformity_score({0, 1, 1}, 2.0), kInf);
  EXPECT_EQ(conformity_score({1, 1, 1}, 1.0), 0.0);
  EXPECT_DOUBLE_EQ(conformity_score({1, 1, 2}, 1.5), 0.5);
  EXPECT_EQ(conformity_score({-kInf, 0, kInf}, 5.0), 0.0);
}

TEST(ConformityScore, SignAndCoverageProperties) {
  Rng rng(1);
  for (int i = 0; i < 10000; ++i) {
    const double m = rng.normal();
    const PiTriple t{m - 0.1 - rng.uniform(), m, m + 0.1 + rng.uniform()};
    const double y = m + 2 * rng.normal();
    const double c = conformity_score(t, y);
    ASSERT_EQ(c > 0.0, y != m);
    ASSERT_EQ(c <= 1.0, t.lower <= y && y <= t.upper);
  }
}

TEST(ConformityScore, RejectsNonFiniteResponse) {
  EXPECT_THROW(conformity_score({0, 1, 2}, NAN), DomainError);
  EXPECT_THROW(conformity_score({0, 1, 2}, INFINITY), DomainError);
}

TEST(SplitConformal, DuplicateScoresUseSortedRank) {
  const std::vector<double> y{3.0, 0.5, 1.1, 0.2, 0.5};
  const auto cal = split_conformal(unit_triples(5), y, 0.5);
  EXPECT_EQ(cal.rank, 3u);
  EXPECT_DOUBLE_EQ(cal.c_hat, 0.5);
  EXPECT_EQ(cal.n2, 5u);
}

TEST(SplitConformal, RankBeyondSampleIsInfinite) {
  const std::vector<double> y{0.1, 0.2, 0.3, 0.4, 0.5};
  const auto cal = split_conformal(unit_triples(5), y, 0.1);
  EXPECT_EQ(cal.rank, 6u);
  EXPECT_EQ(cal.c_hat, kInf);
  const auto iv = expand_interval({-1, 0, 1}, cal.c_hat);
  EXPECT_EQ(iv.lower, -kInf);
  EXPECT_EQ(iv.upper, kInf);
}

TEST(SplitConformal, EmptyCalibrationSet) {
  EXPECT_THROW(split_conformal(std::vector<PiTriple>{}, std::vector<double>{}, 0.1), DomainError);
  const Dataset d = calibration_set({1.0});
  EXPECT_THROW(split_conformal(constant_net(0, 1), d.view(Role::train), 0.1), DomainError);
}

TEST(SplitConformal, NetworkOverView) {
  const Dataset d = calibration_set({0.5, -2.0, 1.5, 0.25});
  const auto cal = split_conformal(constant_net(0.0, 1.0), d.view(Role::calibration), 0.4);
  // scores {0.5, 2, 1.5, 0.25}; k = ceil(0.6 * 5) = 3
  EXPECT_EQ(cal.rank, 3u);
  EXPECT_DOUBLE_EQ(cal.c_hat, 1.5);
}

TEST(ExpandInterval, Examples) {
  EXPECT_EQ(expand_interval({0, 1, 2}, 1.0), (PiInterval{0, 2}));
  EXPECT_EQ(expand_interval({0, 1, 2}, 2.0), (PiInterval{-1, 3}));
  EXPECT_EQ(expand_interval({1, 1, 1}, 5.0), (PiInterval{1, 1}));
}

TEST(ExpandInterval, InfiniteExpansionCoversEverything) {
  EXPECT_EQ(expand_interval({0, 1, 2}, kInf), (PiInterval{-kInf, kInf}));
  EXPECT_EQ(expand_interval({1, 1, 1}, kInf), (PiInterval{-kInf, kInf}));
  EXPECT_TRUE(expand_interval({1, 1, 1}, kInf).contains(1e300));
}

TEST(ExpandInterval, IdentityAtOneAndRejectsNegative) {
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    const double m = rng.normal();
    const PiTriple t{m - rng.uniform(), m, m + rng.uniform()};
    EXPECT_EQ(expand_interval(t, 1.0), to_interval(t));
  }
  EXPECT_THROW(expand_interval({0, 1, 2}, -1.0), DomainError);
  EXPECT_THROW(expand_interval({0, 1, 2}, NAN), DomainError);
}

TEST(FixedWidth, Examples) {
  const std::vector<double> m{0, 0, 0};
  EXPECT_DOUBLE_EQ(fixed_width_conformal(m, std::vector<double>{1, -2, 3}, 0.5).half_width, 2.0);
  EXPECT_EQ(fixed_width_conformal(m, std::vector<double>{0, 0, 0}, 0.5).half_width, 0.0);
  EXPECT_EQ(fixed_width_conformal(m, std::vector<double>{1, 2, 3}, 0.1).half_width, kInf);
  EXPECT_EQ(fixed_width_conformal(m, std::vector<double>{1, 2, 3}, 0.1).rank, 4u);
  EXPECT_EQ(fixed_width_interval(1.0, 0.0), (PiInterval{1, 1}));
  EXPECT_EQ(fixed_width_interval(1.0, kInf), (PiInterval{-kInf, kInf}));
}

TEST(EmpiricalCoverage, Examples) {
  std::vector<PiTriple> t(10, PiTriple{-1, 0, 1});
  std::vector<double> y{0, 0.5, -0.5, 1, -1, 0.2, 0.3, 0.9, 2, -3};
  EXPECT_DOUBLE_EQ(empirical_coverage(t, y), 0.8);
  const Dataset d = calibration_set(y);
  EXPECT_EQ(empirical_coverage(PiNetwork::trivial(1), d.view(Role::calibration)), 1.0);
  EXPECT_EQ(empirical_coverage(std::vector<PiTriple>{{0, 1, 2}}, std::vector<double>{2.0}), 1.0);
  EXPECT_THROW(empirical_coverage(std::vector<PiTriple>{}, std::vector<double>{}), DomainError);
}

TEST(Pav, DefaultGrid) {
  const auto g = default_grid();
  ASSERT_EQ(g.size(), 11u);
  EXPECT_DOUBLE_EQ(g.front(), 0.10);
  EXPECT_EQ(g.back(), 0.0);
  for (std::size_t i = 1; i < g.size(); ++i) EXPECT_NEAR(g[i - 1] - g[i], 0.01, 1e-12);
}

TEST(Pav, Examples) {
  const std::vector<double> grid{0.0, 0.05, 0.10};
  EXPECT_EQ(pav_select_from_coverage(grid, std::vector<double>{1.0, 0.92, 0.85}, 100, 0.1).tau_hat, 0.05);
  EXPECT_EQ(pav_select_from_coverage(grid, std::vector<double>{1.0, 0.7, 0.6}, 100, 0.1).tau_hat, 0.0);
  const std::vector<double> g2{0.0, 0.1};
  EXPECT_EQ(pav_select_from_coverage(g2, std::vector<double>{1.0, 0.90}, 10, 0.1).tau_hat, 0.1);
}

TEST(Pav, SelectsFromNetworks) {
  Rng rng(4);
  std::vector<double> y(200);
  for (auto& v : y) v = rng.normal();
  const Dataset d = calibration_set(y);
  const auto view = d.view(Role::calibration);
  const std::vector<double> grid{0.2, 0.1, 0.0};
  std::map<double, PiNetwork> nets{{0.2, constant_net(0, 0.5)}, {0.1, constant_net(0, 2.0)}};
  const auto sel = pav_select(nets, grid, view, 0.1);
  EXPECT_EQ(sel.tau_hat, 0.1);
  EXPECT_EQ(sel.grid, (std::vector<double>{0.2, 0.1, 0.0}));
  EXPECT_EQ(sel.coverage.back(), 1.0);
  nets.erase(0.1);
  EXPECT_THROW(pav_select(nets, grid, view, 0.1), ConfigError);
  const std::vector<double> no_zero{0.2};
  EXPECT_THROW(pav_select(nets, no_zero, view, 0.1), ConfigError);
}

TEST(Pav, AllUnderCoverFallsBackToTrivial) {
  const Dataset d = calibration_set({5, -5, 6, -6, 7});
  const std::vector<double> grid{0.1, 0.0};
  const std::map<double, PiNetwork> nets{{0.1, constant_net(0, 1)}};
  const auto sel = pav_select(nets, grid, d.view(Role::calibration), 0.1);
  EXPECT_EQ(sel.tau_hat, 0.0);
  const auto iv = to_interval(PiNetwork::trivial(1).forward(std::vector<double>{0.0}));
  EXPECT_EQ(iv, (PiInterval{-kInf, kInf}));
}

TEST(Pav, SelectionMeetsThresholdOnD2) {
  Rng rng(5);
  for (int rep = 0; rep < 50; ++rep) {
    const std::vector<double> grid = default_grid();
    std::vector<double> cov;
    for (double t : grid) cov.push_back(t == 0.0 ? 1.0 : std::round(100 * rng.uniform()) / 100);
    const auto sel = pav_select_from_coverage(grid, cov, 100, 0.1);
    const auto it = std::find(sel.grid.begin(), sel.grid.end(), sel.tau_hat);
    ASSERT_NE(it, sel.grid.end());
    EXPECT_GE(sel.coverage[static_cast<std::size_t>(it - sel.grid.begin())], 0.9 - 1e-12);
    for (std::size_t i = 0; i < sel.grid.size(); ++i)
      if (sel.grid[i] > sel.tau_hat) {
        EXPECT_LT(sel.coverage[i], 0.9);
      }
  }
}

TEST(PavBound, Examples) {
  // -log(0.05/10) / (2 * 0.05^2) = log(200) / 0.005 = 1059.66
  const double direct = std::log(200.0) / 0.005;
  EXPECT_NEAR(direct, 1059.66, 0.01);
  EXPECT_EQ(pav_sample_bound(0.05, 0.05, 10), 1060u);
  EXPECT_EQ(pav_sample_bound(std::sqrt(0.5), std::exp(-2.0), 1), 2u);
  EXPECT_THROW(pav_sample_bound(0.0, 0.05, 10), DomainError);
  EXPECT_THROW(pav_sample_bound(0.05, -1.0, 10), DomainError);
}

TEST(PavBound, NondecreasingInK) {
  std::size_t prev = 0;
  for (std::size_t k = 1; k <= 64; ++k) {
    const auto b = pav_sample_bound(0.05, 0.05, k);
    EXPECT_GE(b, prev);
    prev = b;
  }
}

TEST(ConservativePav, BoundByFormulaAndPlugBack) {
  // -2 log(0.05 / (2 * 10 * 0.925)) / 0.0025 = 4730.80
  const double direct = -2.0 * std::log(0.05 / (2.0 * 10.0 * 0.925)) / 0.0025;
  EXPECT_NEAR(direct, 4730.80, 0.01);
  const auto n = conservative_pav_bound(0.1, 0.05, 10);
  EXPECT_EQ(n, 4731u);
  // (1 - alpha + eps/2)(1 - K exp(-eps^2 n2 / 2)) must reach 1 - alpha
  auto guarantee = [](double m) { return (1 - 0.1 + 0.025) * (1 - 10 * std::exp(-0.0025 * m / 2)); };
  EXPECT_GE(guarantee(static_cast<double>(n)), 0.9);
  EXPECT_LT(guarantee(static_cast<double>(n - 1)), 0.9);
}

TEST(ConservativePav, FlagAndDomain) {
  Rng rng(6);
  std::vector<double> y(100);
  for (auto& v : y) v = rng.normal();
  const Dataset d = calibration_set(y);
  const std::vector<double> grid{0.1, 0.0};
  const std::map<double, PiNetwork> nets{{0.1, constant_net(0, 3.0)}};
  const auto sel = conservative_pav(nets, grid, d.view(Role::calibration), 0.1, 0.05);
  EXPECT_FALSE(sel.guarantee_met);
  EXPECT_DOUBLE_EQ(sel.alpha, 0.05);
  EXPECT_DOUBLE_EQ(sel.nominal_alpha, 0.1);
  EXPECT_EQ(sel.required_n2, conservative_pav_bound(0.1, 0.05, 1));
  EXPECT_EQ(sel.tau_hat, 0.1);
  EXPECT_THROW(conservative_pav(nets, grid, d.view(Role::calibration), 0.1, 0.1), DomainError);
  EXPECT_THROW(conservative_pav_bound(0.1, 0.2, 10), DomainError);
}

TEST(Properties, PermutationInvariance) {
  Rng rng(7);
  std::vector<PiTriple> t;
  std::vector<double> y;
  for (int i = 0; i < 300; ++i) {
    const double m = rng.normal();
    t.push_back({m - rng.uniform(), m, m + rng.uniform()});
    y.push_back(rng.normal());
  }
  const double c = split_conformal(t, y, 0.1).c_hat;
  const std::vector<double> grid{0.3, 0.2, 0.1, 0.0};
  std::map<double, PiNetwork> nets{{0.3, constant_net(0, 0.5)}, {0.2, constant_net(0, 1.0)}, {0.1, constant_net(0, 1.7)}};
  const Dataset base = calibration_set(y);
  const double tau = pav_select(nets, grid, base.view(Role::calibration), 0.1).tau_hat;
  for (int rep = 0; rep < 20; ++rep) {
    const auto perm = random_permutation(t.size(), rng);
    std::vector<PiTriple> pt;
    std::vector<double> py;
    for (auto i : perm) pt.push_back(t[i]), py.push_back(y[i]);
    EXPECT_EQ(split_conformal(pt, py, 0.1).c_hat, c);
    const Dataset shuffled = calibration_set(py);
    EXPECT_EQ(pav_select(nets, grid, shuffled.view(Role::calibration), 0.1).tau_hat, tau);
  }
}

TEST(Properties, CHatMonotoneInAlpha) {
  Rng rng(8);
  std::vector<double> y(97);
  for (auto& v : y) v = rng.normal();
  const auto t = unit_triples(y.size());
  double prev = -1.0;
  for (double alpha = 0.95; alpha > 0.005; alpha -= 0.01) {
    const double c = split_conformal(t, y, alpha).c_hat;
    EXPECT_GE(c, prev);
    prev = c;
  }
}

TEST(Properties, ExpandedCoverageOnD2AtLeastRankShare) {
  Rng rng(9);
  std::vector<PiTriple> t;
  std::vector<double> y;
  for (int i = 0; i < 250; ++i) {
    const double m = rng.normal();
    t.push_back({m - rng.uniform(), m, m + rng.uniform()});
    y.push_back(m + rng.normal());
  }
  const auto cal = split_conformal(t, y, 0.1);
  std::size_t covered = 0;
  for (std::size_t i = 0; i < t.size(); ++i) covered += expand_interval(t[i], cal.c_hat).contains(y[i]);
  EXPECT_GE(covered, cal.rank);
}

// Frozen predictor (-1, 0, 1), continuous scores: coverage lies in
// [1 - alpha, 1 - alpha + 1/(n2 + 1)] up to Monte Carlo noise.
TEST(Properties, MonteCarloMarginalCoverage) {
  Rng rng(10);
  const int reps = 1000;
  const std::size_t n2 = 99;
  int hits = 0;
  for (int r = 0; r < reps; ++r) {
    std::vector<double> y(n2);
    for (auto& v : y) v = rng.normal(0.0, 2.0);
    const double c = split_conformal(unit_triples(n2), y, 0.1).c_hat;
    hits += expand_interval({-1, 0, 1}, c).contains(rng.normal(0.0, 2.0));
  }
  const double cov = static_cast<double>(hits) / reps;
  const double se = std::sqrt(0.9 * 0.1 / reps);
  EXPECT_GE(cov, 0.9 - 3 * se);
  EXPECT_LE(cov, 0.91 + 3 * se);
}
