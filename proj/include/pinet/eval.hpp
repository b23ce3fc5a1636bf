#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "pinet/data.hpp"
#include "pinet/interval.hpp"
#include "pinet/net.hpp"

namespace pinet {

struct IntervalMetrics {
  double ave_coverage = 0.0;
  double ave_length = 0.0;  // +inf if any interval is unbounded
  double iqr_length = 0.0;
  double mad = 0.0;         // mean |m(x) - y|
  bool has_infinite = false;
};

/// Binned coverage curve. Empty bins report NaN coverage.
struct BinnedCurve {
  std::vector<double> centers;
  std::vector<double> coverage;      // smoothed when window > 1
  std::vector<double> raw_coverage;  // per-bin fraction covered
  std::vector<double> mass;          // share of retained observations
  std::vector<std::size_t> counts;
  std::vector<bool> reliable;
  int window = 1;
  std::size_t retained = 0;
};

/// Type-7 (linear interpolation) sample quantile, p in [0, 1].
double quantile_type7(std::vector<double> values, double p);

IntervalMetrics interval_metrics(std::span<const PiInterval> intervals, std::span<const double> predictions,
                                 std::span<const double> y);

/// Mean |l - q_lo| + mean |m - q_med| + mean |u - q_hi| over test points,
/// against the analytic quantiles at level alpha.
double quantile_mad_vs_oracle(std::span<const PiTriple> triples, std::span<const OracleTriple> oracle);
double quantile_mad_vs_oracle(const PiNetwork& net, const SyntheticSpec& spec,
                              const std::vector<std::vector<double>>& xs, double alpha);

inline constexpr std::size_t kMinReliableBinCount = 20;

/// Coverage in `bins` equal-width bins over the observed index range. Bins
/// with fewer than 20 points are flagged unreliable.
BinnedCurve conditional_coverage(std::span<const PiInterval> intervals, std::span<const double> y,
                                 std::span<const double> index, std::size_t bins);

struct LengthBinning {
  std::size_t bins = 100;
  double trim = 0.01;  // fraction removed from each tail: ceil(trim * n)
  int window = 9;      // centered moving average, shrunk at the edges
};

/// Coverage of each method as a function of a reference interval length.
/// The reference lengths are tail-trimmed, binned equal-width, and each
/// method's per-bin coverage is smoothed. Needs at least 200 observations.
std::map<std::string, BinnedCurve> coverage_by_length(
    std::span<const double> reference_lengths,
    const std::map<std::string, std::vector<bool>>& covered, const LengthBinning& opts = {});

/// Coverage among the observations whose index lies in the top `fraction`
/// (by rank) of the index distribution.
double upper_tail_coverage(std::span<const PiInterval> intervals, std::span<const double> y,
                           std::span<const double> index, double fraction);

/// Spearman rank correlation with average ranks for ties.
double spearman(std::span<const double> a, std::span<const double> b);

/// Population variance.
double variance(std::span<const double> v);

}  // namespace pinet
