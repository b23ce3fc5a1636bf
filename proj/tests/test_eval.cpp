#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pinet/calibrate.hpp"
#include "pinet/error.hpp"
#include "pinet/eval.hpp"
#include "pinet/rng.hpp"

using namespace pinet;

namespace {

// Hyndman-Fan type 7 written from its definition.
double type7(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - std::floor(h)) * (v[hi] - v[lo]);
}

}  // namespace

TEST(IntervalMetrics, SingleInterval) {
  const std::vector<PiInterval> iv{{0, 2}};
  const auto m = interval_metrics(iv, std::vector<double>{1}, std::vector<double>{1});
  EXPECT_EQ(m.ave_coverage, 1.0);
  EXPECT_EQ(m.ave_length, 2.0);
  EXPECT_EQ(m.iqr_length, 0.0);
  EXPECT_EQ(m.mad, 0.0);
  EXPECT_FALSE(m.has_infinite);
}

TEST(IntervalMetrics, InterquartileRangeOfLengths) {
  const std::vector<PiInterval> iv{{0, 1}, {0, 2}, {0, 3}, {0, 4}};
  const std::vector<double> z(4, 0.0);
  const auto m = interval_metrics(iv, z, z);
  EXPECT_DOUBLE_EQ(type7({1, 2, 3, 4}, 0.75) - type7({1, 2, 3, 4}, 0.25), 1.5);
  EXPECT_DOUBLE_EQ(m.iqr_length, 1.5);
  EXPECT_DOUBLE_EQ(m.ave_length, 2.5);
}

TEST(IntervalMetrics, InfiniteIntervalFlagged) {
  const std::vector<PiInterval> iv{{0, 1}, {-kInf, kInf}, {0, 2}};
  const std::vector<double> z(3, 0.5);
  const auto m = interval_metrics(iv, z, z);
  EXPECT_EQ(m.ave_length, kInf);
  EXPECT_TRUE(m.has_infinite);
  EXPECT_EQ(m.ave_coverage, 1.0);
}

TEST(IntervalMetrics, ShapeMismatch) {
  const std::vector<PiInterval> iv{{0, 1}};
  EXPECT_THROW(interval_metrics(iv, std::vector<double>{0, 1}, std::vector<double>{0}), ShapeError);
  EXPECT_THROW(interval_metrics({}, std::vector<double>{}, std::vector<double>{}), DomainError);
}

TEST(IntervalMetrics, MadAndCrossModuleCoverage) {
  Rng rng(1);
  std::vector<PiTriple> t;
  std::vector<PiInterval> iv;
  std::vector<double> m, y;
  double mad = 0.0;
  for (int i = 0; i < 500; ++i) {
    const double c = rng.normal();
    t.push_back({c - rng.uniform(), c, c + rng.uniform()});
    iv.push_back(to_interval(t.back()));
    m.push_back(c);
    y.push_back(rng.normal());
    mad += std::fabs(c - y.back());
  }
  const auto met = interval_metrics(iv, m, y);
  EXPECT_DOUBLE_EQ(met.ave_coverage, empirical_coverage(t, y));
  EXPECT_NEAR(met.mad, mad / 500, 1e-12);
}

TEST(IntervalMetrics, PermutationInvariant) {
  Rng rng(2);
  std::vector<PiInterval> iv;
  std::vector<double> m, y;
  for (int i = 0; i < 200; ++i) {
    const double c = rng.normal();
    iv.push_back({c - rng.uniform(), c + rng.uniform()});
    m.push_back(c);
    y.push_back(rng.normal());
  }
  const auto base = interval_metrics(iv, m, y);
  const auto perm = random_permutation(iv.size(), rng);
  std::vector<PiInterval> piv;
  std::vector<double> pm, py;
  for (auto i : perm) piv.push_back(iv[i]), pm.push_back(m[i]), py.push_back(y[i]);
  const auto p = interval_metrics(piv, pm, py);
  EXPECT_EQ(p.ave_coverage, base.ave_coverage);
  EXPECT_NEAR(p.ave_length, base.ave_length, 1e-12);
  EXPECT_EQ(p.iqr_length, base.iqr_length);
  EXPECT_NEAR(p.mad, base.mad, 1e-12);
}

TEST(Quantile, Type7MatchesReference) {
  Rng rng(3);
  std::vector<double> v(37);
  for (auto& x : v) x = rng.normal();
  for (double p : {0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0}) EXPECT_DOUBLE_EQ(quantile_type7(v, p), type7(v, p));
}

TEST(QuantileMad, ExactAndShifted) {
  const SyntheticSpec spec{3, 2, 0};
  Rng rng(4);
  std::vector<PiTriple> t, shifted;
  std::vector<OracleTriple> o;
  for (int i = 0; i < 100; ++i) {
    std::vector<double> x(3);
    for (auto& v : x) v = rng.uniform();
    o.push_back(oracle_quantiles(x, spec, 0.1));
    t.push_back(o.back().triple());
    const auto q = o.back();
    shifted.push_back({q.q_lo + 0.25, q.q_med + 0.25, q.q_hi + 0.25});
  }
  EXPECT_EQ(quantile_mad_vs_oracle(t, o), 0.0);
  EXPECT_NEAR(quantile_mad_vs_oracle(shifted, o), 0.75, 1e-12);
  t[3].upper = kInf;
  EXPECT_EQ(quantile_mad_vs_oracle(t, o), kInf);
}

TEST(QuantileMad, NetworkMatchesBruteForce) {
  const SyntheticSpec spec{4, 2, 0};
  const PiNetwork net = PiNetwork::initialized({4, {6}}, 9);
  Rng rng(5);
  std::vector<std::vector<double>> xs;
  double lo = 0.0, med = 0.0, hi = 0.0;
  for (int i = 0; i < 64; ++i) {
    std::vector<double> x(4);
    for (auto& v : x) v = rng.uniform();
    const auto p = net.forward(x);
    const auto q = oracle_quantiles(x, spec, 0.2);
    lo += std::fabs(p.lower - q.q_lo);
    med += std::fabs(p.median - q.q_med);
    hi += std::fabs(p.upper - q.q_hi);
    xs.push_back(x);
  }
  EXPECT_NEAR(quantile_mad_vs_oracle(net, spec, xs, 0.2), (lo + med + hi) / 64, 1e-12);
  EXPECT_EQ(quantile_mad_vs_oracle(PiNetwork::trivial(4), spec, xs, 0.2), kInf);
}

TEST(ConditionalCoverage, HomoskedasticOracleIsFlat) {
  Rng rng(6);
  const std::size_t n = 20000;
  std::vector<PiInterval> iv(n, PiInterval{-normal_quantile(0.95), normal_quantile(0.95)});
  std::vector<double> y(n), idx(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = rng.normal();
    idx[i] = rng.uniform();
  }
  const auto c = conditional_coverage(iv, y, idx, 10);
  ASSERT_EQ(c.centers.size(), 10u);
  for (std::size_t b = 0; b < 10; ++b) {
    EXPECT_TRUE(c.reliable[b]);
    const double se = std::sqrt(0.09 / static_cast<double>(c.counts[b]));
    EXPECT_NEAR(c.coverage[b], 0.9, 4 * se);
  }
  EXPECT_NEAR(std::accumulate(c.mass.begin(), c.mass.end(), 0.0), 1.0, 1e-12);
  for (std::size_t b = 1; b < 10; ++b) EXPECT_LT(c.centers[b - 1], c.centers[b]);
}

TEST(ConditionalCoverage, NothingCovered) {
  const std::vector<PiInterval> iv(50, PiInterval{10, 11});
  std::vector<double> y(50, 0.0), idx(50);
  std::iota(idx.begin(), idx.end(), 0.0);
  const auto c = conditional_coverage(iv, y, idx, 5);
  for (double v : c.coverage) EXPECT_EQ(v, 0.0);
}

TEST(ConditionalCoverage, SparseBinFlagged) {
  std::vector<PiInterval> iv(41, PiInterval{-1, 1});
  std::vector<double> y(41, 0.0), idx(41, 1.0);
  idx[0] = 0.0;
  const auto c = conditional_coverage(iv, y, idx, 2);
  EXPECT_EQ(c.counts[0], 1u);
  EXPECT_FALSE(c.reliable[0]);
  EXPECT_TRUE(c.reliable[1]);
}

TEST(ConditionalCoverage, Errors) {
  const std::vector<PiInterval> iv(3, PiInterval{-1, 1});
  const std::vector<double> y(3, 0.0), flat(3, 2.0), idx{0, 1, 2};
  EXPECT_THROW(conditional_coverage(iv, y, flat, 4), DomainError);
  EXPECT_THROW(conditional_coverage(iv, y, idx, 1), DomainError);
}

TEST(CoverageByLength, TrimsOnePercentEachTail) {
  Rng rng(7);
  std::vector<double> len(1000);
  for (auto& v : len) v = rng.uniform();
  const std::map<std::string, std::vector<bool>> cov{{"a", std::vector<bool>(1000, true)}};
  const auto curves = coverage_by_length(len, cov);
  const auto& c = curves.at("a");
  EXPECT_EQ(c.retained, 980u);
  EXPECT_EQ(c.centers.size(), 100u);
  EXPECT_EQ(c.window, 9);
  EXPECT_NEAR(std::accumulate(c.mass.begin(), c.mass.end(), 0.0), 1.0, 1e-9);
  EXPECT_EQ(std::accumulate(c.counts.begin(), c.counts.end(), std::size_t{0}), 980u);
}

TEST(CoverageByLength, RetainedCountFormula) {
  for (std::size_t n : {200u, 250u, 999u, 1001u, 5000u}) {
    std::vector<double> len(n);
    std::iota(len.begin(), len.end(), 0.0);
    const std::map<std::string, std::vector<bool>> cov{{"a", std::vector<bool>(n, false)}};
    const auto trim = static_cast<std::size_t>(std::ceil(0.01 * static_cast<double>(n)));
    EXPECT_EQ(coverage_by_length(len, cov).at("a").retained, n - 2 * trim);
  }
}

TEST(CoverageByLength, UniformNinetyPercentIsFlat) {
  Rng rng(8);
  const std::size_t n = 100000;
  std::vector<double> len(n);
  std::vector<bool> hit(n);
  for (std::size_t i = 0; i < n; ++i) {
    len[i] = 1.0 + rng.uniform();
    hit[i] = rng.uniform() < 0.9;
  }
  const auto c = coverage_by_length(len, {{"ref", hit}}).at("ref");
  for (std::size_t b = 0; b < c.coverage.size(); ++b) EXPECT_NEAR(c.coverage[b], 0.9, 0.03) << b;
}

// Reference widths follow the noise scale; a constant-width interval of the
// same average coverage over-covers where the reference is narrow and
// under-covers where it is wide.
TEST(CoverageByLength, ConstantWidthShape) {
  Rng rng(9);
  const std::size_t n = 50000;
  const double z = normal_quantile(0.95);
  std::vector<double> len(n), sd(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    sd[i] = 0.5 + 2.5 * rng.uniform();
    y[i] = sd[i] * rng.normal();
    len[i] = 2 * z * sd[i];
  }
  std::vector<double> absy(n);
  for (std::size_t i = 0; i < n; ++i) absy[i] = std::fabs(y[i]);
  const double h = quantile_type7(absy, 0.9);
  std::vector<bool> adaptive(n), fixed(n);
  for (std::size_t i = 0; i < n; ++i) {
    adaptive[i] = absy[i] <= z * sd[i];
    fixed[i] = absy[i] <= h;
  }
  const auto curves = coverage_by_length(len, {{"adaptive", adaptive}, {"fixed", fixed}});
  const auto& f = curves.at("fixed");
  const auto& a = curves.at("adaptive");
  EXPECT_GT(f.coverage.front(), 0.97);
  EXPECT_LT(f.coverage.back(), 0.85);
  EXPECT_NEAR(a.coverage.front(), 0.9, 0.05);
  EXPECT_NEAR(a.coverage.back(), 0.9, 0.05);
}

TEST(CoverageByLength, Errors) {
  std::vector<double> len(199, 1.0);
  EXPECT_THROW(coverage_by_length(len, {{"a", std::vector<bool>(199, true)}}), DomainError);
  std::vector<double> ok(300, 1.0);
  EXPECT_THROW(coverage_by_length(ok, {{"a", std::vector<bool>(10, true)}}), ShapeError);
}

TEST(Diagnostics, UpperTailCoverage) {
  std::vector<PiInterval> iv;
  std::vector<double> y, idx;
  for (int i = 0; i < 100; ++i) {
    iv.push_back({-1, 1});
    idx.push_back(i);
    y.push_back(i >= 90 ? (i % 2 ? 5.0 : 0.0) : 0.0);
  }
  EXPECT_DOUBLE_EQ(upper_tail_coverage(iv, y, idx, 0.1), 0.5);
  EXPECT_DOUBLE_EQ(upper_tail_coverage(iv, y, idx, 1.0), 0.95);
}

TEST(Diagnostics, SpearmanAndVariance) {
  const std::vector<double> a{1, 2, 3, 4, 5}, b{10, 20, 25, 100, 1000}, c{5, 4, 3, 2, 1};
  EXPECT_DOUBLE_EQ(spearman(a, b), 1.0);
  EXPECT_DOUBLE_EQ(spearman(a, c), -1.0);
  EXPECT_TRUE(std::isnan(spearman(a, std::vector<double>(5, 1.0))));
  const std::vector<double> ties{1, 1, 2, 2, 3};
  EXPECT_NEAR(spearman(a, ties), 0.9486832980505138, 1e-12);
  EXPECT_EQ(variance(std::vector<double>(7, 9.8)), 0.0);
  EXPECT_DOUBLE_EQ(variance(a), 2.0);
}
