#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include "pinet/data.hpp"
#include "pinet/interval.hpp"
#include "pinet/net.hpp"

namespace pinet {

/// Split-conformal expansion constant for a PI-network.
struct ConformalCalibration {
  double c_hat = kInf;  // +inf when rank > n2
  double alpha = 0.1;
  std::size_t n2 = 0;
  std::size_t rank = 0;
};

/// Residual-based fixed-width calibration (m(x) -/+ half_width).
struct FixedWidthCalibration {
  double half_width = kInf;
  double alpha = 0.1;
  std::size_t n2 = 0;
  std::size_t rank = 0;
};

/// Grid selection of tau.
struct PavSelection {
  double tau_hat = 0.0;
  std::vector<double> grid;      // descending, contains 0
  std::vector<double> coverage;  // empirical D2 coverage, aligned with grid
  double alpha = 0.1;            // miscoverage level the selection was run at
  std::size_t n2 = 0;

  // Set by conservative_pav() only.
  double nominal_alpha = 0.1;
  double epsilon = 0.0;
  std::size_t required_n2 = 0;
  bool guarantee_met = false;
};

/// Rank ceil((1 - alpha)(n + 1)) of the calibration order statistic.
std::size_t conformal_rank(std::size_t n, double alpha);

/// c = max((m - y)/(m - l), (y - m)/(u - m)). A zero-width side gives +inf
/// when y lies strictly beyond it and 0 when y sits on the median.
double conformity_score(const PiTriple& triple, double y);

/// k-th smallest score (stable ascending sort), or +inf when k exceeds the sample.
double order_statistic(std::span<const double> scores, std::size_t k);

ConformalCalibration split_conformal(std::span<const PiTriple> triples, std::span<const double> y, double alpha);
ConformalCalibration split_conformal(const PiNetwork& net, const DataView& calibration, double alpha);

/// [m - c(m - l), m + c(u - m)]. Zero-width sides stay at m for finite c;
/// c = +inf gives the whole line.
PiInterval expand_interval(const PiTriple& triple, double c_hat);

FixedWidthCalibration fixed_width_conformal(std::span<const double> medians, std::span<const double> y, double alpha);
FixedWidthCalibration fixed_width_conformal(const PiNetwork& net, const DataView& calibration, double alpha);

PiInterval fixed_width_interval(double median, double half_width);

/// Fraction of points with l <= y <= u.
double empirical_coverage(std::span<const PiTriple> triples, std::span<const double> y);
double empirical_coverage(const PiNetwork& net, const DataView& data);

/// Default tau grid {0.10, 0.09, ..., 0.01, 0}.
std::vector<double> default_grid();

/// Largest grid tau whose D2 coverage is at least 1 - alpha. `nets` must hold
/// a fitted network for every non-zero grid value; tau = 0 is the trivial
/// network with coverage 1.
PavSelection pav_select(const std::map<double, PiNetwork>& nets, std::span<const double> grid,
                        const DataView& calibration, double alpha);

/// Same selection from precomputed per-grid coverage values.
PavSelection pav_select_from_coverage(std::span<const double> grid, std::span<const double> coverage,
                                      std::size_t n2, double alpha);

/// Hoeffding sample size ceil(-log(delta/K) / (2 eps^2)).
std::size_t pav_sample_bound(double epsilon, double delta, std::size_t k);

/// Calibration-set size at which the selection at level alpha - eps also
/// has average coverage 1 - alpha:
///   ceil(-2 log(eps / (2K(1 - alpha + eps/2))) / eps^2).
std::size_t conservative_pav_bound(double alpha, double epsilon, std::size_t k);

PavSelection conservative_pav(const std::map<double, PiNetwork>& nets, std::span<const double> grid,
                              const DataView& calibration, double alpha, double epsilon);

}  // namespace pinet
