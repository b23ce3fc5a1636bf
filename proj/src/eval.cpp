#include "pinet/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "pinet/error.hpp"

namespace pinet {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::size_t ceil_count(double x) {
  return static_cast<std::size_t>(std::ceil(x - 1e-9 * std::max(1.0, std::fabs(x))));
}

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
    i = j + 1;
  }
  return ranks;
}

std::vector<double> smooth(const std::vector<double>& raw, const std::vector<std::size_t>& counts, int window) {
  const auto half = static_cast<std::ptrdiff_t>(window / 2);
  const auto n = static_cast<std::ptrdiff_t>(raw.size());
  std::vector<double> out(raw.size(), kNaN);
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    double sum = 0.0;
    int used = 0;
    for (std::ptrdiff_t j = std::max<std::ptrdiff_t>(0, i - half); j <= std::min(n - 1, i + half); ++j) {
      if (counts[static_cast<std::size_t>(j)] == 0) continue;
      sum += raw[static_cast<std::size_t>(j)];
      ++used;
    }
    if (used > 0) out[static_cast<std::size_t>(i)] = sum / used;
  }
  return out;
}

}  // namespace

double quantile_type7(std::vector<double> values, double p) {
  if (values.empty()) throw DomainError("quantile: empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("quantile: p must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = static_cast<double>(values.size() - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const double frac = h - static_cast<double>(lo);
  if (frac == 0.0 || lo + 1 >= values.size()) return values[lo];
  const double a = values[lo];
  const double b = values[lo + 1];
  if (a == b) return a;
  if (std::isinf(b) || std::isinf(a)) return std::isinf(b) ? b : a;
  return a + frac * (b - a);
}

IntervalMetrics interval_metrics(std::span<const PiInterval> intervals, std::span<const double> predictions,
                                 std::span<const double> y) {
  if (intervals.size() != y.size() || predictions.size() != y.size())
    throw ShapeError("interval_metrics: inputs differ in length");
  if (y.empty()) throw DomainError("interval_metrics: no observations");
  IntervalMetrics m;
  const auto n = static_cast<double>(y.size());
  std::vector<double> lengths(y.size());
  std::size_t covered = 0;
  double total_length = 0.0;
  double abs_err = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (intervals[i].contains(y[i])) ++covered;
    lengths[i] = intervals[i].length();
    if (!std::isfinite(lengths[i])) m.has_infinite = true;
    total_length += lengths[i];
    abs_err += std::fabs(predictions[i] - y[i]);
  }
  m.ave_coverage = static_cast<double>(covered) / n;
  m.ave_length = m.has_infinite ? kInf : total_length / n;
  const double q25 = quantile_type7(lengths, 0.25);
  const double q75 = quantile_type7(lengths, 0.75);
  m.iqr_length = q75 == q25 ? 0.0 : q75 - q25;
  m.mad = abs_err / n;
  return m;
}

double quantile_mad_vs_oracle(std::span<const PiTriple> triples, std::span<const OracleTriple> oracle) {
  if (triples.size() != oracle.size()) throw ShapeError("quantile_mad: length mismatch");
  if (triples.empty()) throw DomainError("quantile_mad: no test points");
  double lo = 0.0, med = 0.0, hi = 0.0;
  for (std::size_t i = 0; i < triples.size(); ++i) {
    if (!triples[i].finite()) return kInf;
    lo += std::fabs(triples[i].lower - oracle[i].q_lo);
    med += std::fabs(triples[i].median - oracle[i].q_med);
    hi += std::fabs(triples[i].upper - oracle[i].q_hi);
  }
  const auto n = static_cast<double>(triples.size());
  return lo / n + med / n + hi / n;
}

double quantile_mad_vs_oracle(const PiNetwork& net, const SyntheticSpec& spec,
                              const std::vector<std::vector<double>>& xs, double alpha) {
  std::vector<PiTriple> triples;
  std::vector<OracleTriple> oracle;
  triples.reserve(xs.size());
  oracle.reserve(xs.size());
  for (const auto& x : xs) {
    triples.push_back(net.forward(x));
    oracle.push_back(oracle_quantiles(x, spec, alpha));
  }
  return quantile_mad_vs_oracle(triples, oracle);
}

BinnedCurve conditional_coverage(std::span<const PiInterval> intervals, std::span<const double> y,
                                 std::span<const double> index, std::size_t bins) {
  if (bins < 2) throw DomainError("conditional_coverage: at least 2 bins required");
  if (intervals.size() != y.size() || index.size() != y.size())
    throw ShapeError("conditional_coverage: inputs differ in length");
  if (y.empty()) throw DomainError("conditional_coverage: no observations");
  const auto [mn, mx] = std::minmax_element(index.begin(), index.end());
  const double lo = *mn, hi = *mx;
  if (!std::isfinite(lo) || !std::isfinite(hi) || !(hi > lo))
    throw DomainError("conditional_coverage: degenerate index range");

  const double width = (hi - lo) / static_cast<double>(bins);
  BinnedCurve c;
  c.counts.assign(bins, 0);
  std::vector<std::size_t> hits(bins, 0);
  for (std::size_t i = 0; i < y.size(); ++i) {
    auto b = static_cast<std::size_t>((index[i] - lo) / width);
    b = std::min(b, bins - 1);
    ++c.counts[b];
    if (intervals[i].contains(y[i])) ++hits[b];
  }
  c.retained = y.size();
  for (std::size_t b = 0; b < bins; ++b) {
    c.centers.push_back(lo + (static_cast<double>(b) + 0.5) * width);
    const double cov = c.counts[b] ? static_cast<double>(hits[b]) / static_cast<double>(c.counts[b]) : kNaN;
    c.raw_coverage.push_back(cov);
    c.coverage.push_back(cov);
    c.mass.push_back(static_cast<double>(c.counts[b]) / static_cast<double>(y.size()));
    c.reliable.push_back(c.counts[b] >= kMinReliableBinCount);
  }
  return c;
}

std::map<std::string, BinnedCurve> coverage_by_length(std::span<const double> reference_lengths,
                                                      const std::map<std::string, std::vector<bool>>& covered,
                                                      const LengthBinning& opts) {
  const std::size_t n = reference_lengths.size();
  if (n < 200) throw DomainError("coverage_by_length: at least 200 observations required");
  if (opts.bins < 1) throw DomainError("coverage_by_length: at least one bin required");
  if (!(opts.trim >= 0.0 && opts.trim < 0.5)) throw DomainError("coverage_by_length: trim must lie in [0, 0.5)");
  if (opts.window < 1) throw DomainError("coverage_by_length: window must be positive");
  for (const auto& [name, flags] : covered)
    if (flags.size() != n) throw ShapeError("coverage_by_length: method '" + name + "' has wrong length");
  for (double l : reference_lengths)
    if (!std::isfinite(l)) throw DomainError("coverage_by_length: reference lengths must be finite");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](auto a, auto b) { return reference_lengths[a] < reference_lengths[b]; });
  const std::size_t cut = ceil_count(opts.trim * static_cast<double>(n));
  const std::vector<std::size_t> kept(order.begin() + static_cast<std::ptrdiff_t>(cut),
                                      order.end() - static_cast<std::ptrdiff_t>(cut));
  const double lo = reference_lengths[kept.front()];
  const double hi = reference_lengths[kept.back()];
  if (!(hi > lo)) throw DomainError("coverage_by_length: reference lengths are constant after trimming");
  const double width = (hi - lo) / static_cast<double>(opts.bins);

  std::vector<std::size_t> bin_of(kept.size());
  std::vector<std::size_t> counts(opts.bins, 0);
  for (std::size_t k = 0; k < kept.size(); ++k) {
    auto b = static_cast<std::size_t>((reference_lengths[kept[k]] - lo) / width);
    bin_of[k] = std::min(b, opts.bins - 1);
    ++counts[bin_of[k]];
  }

  std::map<std::string, BinnedCurve> out;
  for (const auto& [name, flags] : covered) {
    BinnedCurve c;
    c.window = opts.window;
    c.retained = kept.size();
    c.counts = counts;
    std::vector<std::size_t> hits(opts.bins, 0);
    for (std::size_t k = 0; k < kept.size(); ++k)
      if (flags[kept[k]]) ++hits[bin_of[k]];
    for (std::size_t b = 0; b < opts.bins; ++b) {
      c.centers.push_back(lo + (static_cast<double>(b) + 0.5) * width);
      c.raw_coverage.push_back(counts[b] ? static_cast<double>(hits[b]) / static_cast<double>(counts[b]) : kNaN);
      c.mass.push_back(static_cast<double>(counts[b]) / static_cast<double>(kept.size()));
      c.reliable.push_back(counts[b] >= kMinReliableBinCount);
    }
    c.coverage = smooth(c.raw_coverage, counts, opts.window);
    out.emplace(name, std::move(c));
  }
  return out;
}

double upper_tail_coverage(std::span<const PiInterval> intervals, std::span<const double> y,
                           std::span<const double> index, double fraction) {
  if (intervals.size() != y.size() || index.size() != y.size())
    throw ShapeError("upper_tail_coverage: inputs differ in length");
  if (y.empty()) throw DomainError("upper_tail_coverage: no observations");
  if (!(fraction > 0.0 && fraction <= 1.0)) throw DomainError("upper_tail_coverage: fraction must lie in (0, 1]");
  std::vector<std::size_t> order(y.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return index[a] > index[b]; });
  const std::size_t take = std::max<std::size_t>(1, ceil_count(fraction * static_cast<double>(y.size())));
  std::size_t hits = 0;
  for (std::size_t k = 0; k < take; ++k)
    if (intervals[order[k]].contains(y[order[k]])) ++hits;
  return static_cast<double>(hits) / static_cast<double>(take);
}

double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("spearman: length mismatch");
  if (a.size() < 2) throw DomainError("spearman: at least two observations required");
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / static_cast<double>(ra.size());
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / static_cast<double>(rb.size());
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return kNaN;
  return sab / std::sqrt(saa * sbb);
}

double variance(std::span<const double> v) {
  if (v.empty()) throw DomainError("variance: empty sample");
  if (std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); })) return 0.0;
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return s / static_cast<double>(v.size());
}

}  // namespace pinet
