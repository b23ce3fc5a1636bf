#include "pinet/calibrate.hpp"

#include <algorithm>
#include <cmath>

#include "pinet/error.hpp"
#include "pinet/hygiene.hpp"

namespace pinet {

namespace {

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
}

// Ceiling that ignores round-off just above an integer.
std::size_t ceil_count(double x) {
  return static_cast<std::size_t>(std::ceil(x - 1e-9 * std::max(1.0, std::fabs(x))));
}

// numerator / width with the zero-width conventions.
double side_ratio(double numerator, double width) {
  if (width > 0.0) {
    if (std::isinf(width)) return 0.0;
    return numerator / width;
  }
  if (numerator > 0.0) return kInf;
  if (numerator < 0.0) return -kInf;
  return 0.0;
}

// A zero-width side stays a point for finite c; c = +inf admits every score.
double scaled_width(double c, double width) {
  if (std::isinf(c)) return kInf;
  if (width == 0.0) return 0.0;
  return c * width;
}

std::vector<PiTriple> triples_on(const PiNetwork& net, const DataView& data, hygiene::Stage stage,
                                 std::vector<double>* y) {
  std::vector<PiTriple> out;
  out.reserve(data.size());
  if (y) y->reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    hygiene::record(stage, data.row_index(i));
    out.push_back(net.forward(data.x(i)));
    if (y) y->push_back(data.y(i));
  }
  return out;
}

}  // namespace

std::size_t conformal_rank(std::size_t n, double alpha) {
  check_alpha(alpha);
  return ceil_count((1.0 - alpha) * static_cast<double>(n + 1));
}

double conformity_score(const PiTriple& t, double y) {
  if (!std::isfinite(y)) throw DomainError("conformity_score: response must be finite");
  if (!std::isfinite(t.median) || !t.ordered())
    throw DomainError("conformity_score: triple must be ordered with finite median");
  const double left = side_ratio(t.median - y, t.median - t.lower);
  const double right = side_ratio(y - t.median, t.upper - t.median);
  return std::max(left, right);
}

double order_statistic(std::span<const double> scores, std::size_t k) {
  if (k == 0) throw DomainError("order_statistic: rank is 1-based");
  if (k > scores.size()) return kInf;
  std::vector<double> sorted(scores.begin(), scores.end());
  std::stable_sort(sorted.begin(), sorted.end());
  return sorted[k - 1];
}

ConformalCalibration split_conformal(std::span<const PiTriple> triples, std::span<const double> y,
                                     double alpha) {
  check_alpha(alpha);
  if (triples.size() != y.size()) throw ShapeError("split_conformal: triples and responses differ in length");
  if (triples.empty()) throw DomainError("split_conformal: D2 is empty");
  std::vector<double> scores(triples.size());
  for (std::size_t i = 0; i < scores.size(); ++i) scores[i] = conformity_score(triples[i], y[i]);
  ConformalCalibration cal;
  cal.alpha = alpha;
  cal.n2 = scores.size();
  cal.rank = conformal_rank(cal.n2, alpha);
  cal.c_hat = order_statistic(scores, cal.rank);
  return cal;
}

ConformalCalibration split_conformal(const PiNetwork& net, const DataView& calibration, double alpha) {
  if (calibration.empty()) throw DomainError("split_conformal: D2 is empty");
  std::vector<double> y;
  const auto triples = triples_on(net, calibration, hygiene::Stage::calibrate, &y);
  return split_conformal(triples, y, alpha);
}

PiInterval expand_interval(const PiTriple& t, double c_hat) {
  if (!(c_hat >= 0.0)) throw DomainError("expand_interval: expansion must be non-negative");
  return {t.median - scaled_width(c_hat, t.median - t.lower),
          t.median + scaled_width(c_hat, t.upper - t.median)};
}

FixedWidthCalibration fixed_width_conformal(std::span<const double> medians, std::span<const double> y,
                                            double alpha) {
  check_alpha(alpha);
  if (medians.size() != y.size()) throw ShapeError("fixed_width_conformal: length mismatch");
  if (medians.empty()) throw DomainError("fixed_width_conformal: D2 is empty");
  std::vector<double> residuals(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!std::isfinite(y[i])) throw DomainError("fixed_width_conformal: response must be finite");
    residuals[i] = std::fabs(y[i] - medians[i]);
  }
  FixedWidthCalibration cal;
  cal.alpha = alpha;
  cal.n2 = residuals.size();
  cal.rank = conformal_rank(cal.n2, alpha);
  cal.half_width = order_statistic(residuals, cal.rank);
  return cal;
}

FixedWidthCalibration fixed_width_conformal(const PiNetwork& net, const DataView& calibration, double alpha) {
  if (calibration.empty()) throw DomainError("fixed_width_conformal: D2 is empty");
  std::vector<double> y;
  const auto triples = triples_on(net, calibration, hygiene::Stage::calibrate, &y);
  std::vector<double> medians;
  medians.reserve(triples.size());
  for (const auto& t : triples) medians.push_back(t.median);
  return fixed_width_conformal(medians, y, alpha);
}

PiInterval fixed_width_interval(double median, double half_width) {
  if (!(half_width >= 0.0)) throw DomainError("fixed_width_interval: half width must be non-negative");
  return {median - half_width, median + half_width};
}

double empirical_coverage(std::span<const PiTriple> triples, std::span<const double> y) {
  if (triples.size() != y.size()) throw ShapeError("empirical_coverage: length mismatch");
  if (triples.empty()) throw DomainError("empirical_coverage: empty data");
  std::size_t covered = 0;
  for (std::size_t i = 0; i < y.size(); ++i)
    if (triples[i].lower <= y[i] && y[i] <= triples[i].upper) ++covered;
  return static_cast<double>(covered) / static_cast<double>(y.size());
}

double empirical_coverage(const PiNetwork& net, const DataView& data) {
  if (data.empty()) throw DomainError("empirical_coverage: empty data");
  if (net.is_trivial()) return 1.0;
  std::vector<double> y;
  const auto triples = triples_on(net, data, hygiene::Stage::calibrate, &y);
  return empirical_coverage(triples, y);
}

std::vector<double> default_grid() {
  std::vector<double> g;
  for (int k = 10; k >= 0; --k) g.push_back(k / 100.0);
  return g;
}

PavSelection pav_select_from_coverage(std::span<const double> grid, std::span<const double> coverage,
                                      std::size_t n2, double alpha) {
  check_alpha(alpha);
  if (grid.size() != coverage.size()) throw ShapeError("pav_select: grid and coverage differ in length");
  if (std::find(grid.begin(), grid.end(), 0.0) == grid.end())
    throw ConfigError("pav_select: grid must contain 0");
  for (double t : grid)
    if (!(t >= 0.0 && t <= 1.0)) throw ConfigError("pav_select: grid values must lie in [0, 1]");

  PavSelection sel;
  sel.alpha = alpha;
  sel.nominal_alpha = alpha;
  sel.n2 = n2;
  // descending order
  std::vector<std::size_t> order(grid.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return grid[a] > grid[b]; });
  for (auto i : order) {
    sel.grid.push_back(grid[i]);
    sel.coverage.push_back(coverage[i]);
  }

  // Compare on counts so that p = 1 - alpha exactly passes.
  const double needed = (1.0 - alpha) * static_cast<double>(n2);
  sel.tau_hat = 0.0;
  for (std::size_t i = 0; i < sel.grid.size(); ++i) {
    const double covered = sel.coverage[i] * static_cast<double>(n2);
    if (sel.grid[i] == 0.0 || covered >= needed - 1e-9 * std::max(1.0, needed)) {
      sel.tau_hat = sel.grid[i];
      break;
    }
  }
  return sel;
}

PavSelection pav_select(const std::map<double, PiNetwork>& nets, std::span<const double> grid,
                        const DataView& calibration, double alpha) {
  check_alpha(alpha);
  if (calibration.empty()) throw DomainError("pav_select: D2 is empty");
  if (std::find(grid.begin(), grid.end(), 0.0) == grid.end())
    throw ConfigError("pav_select: grid must contain 0");
  std::vector<double> coverage;
  coverage.reserve(grid.size());
  for (double tau : grid) {
    if (tau == 0.0) {
      coverage.push_back(1.0);
      continue;
    }
    const auto it = nets.find(tau);
    if (it == nets.end())
      throw ConfigError("pav_select: no network fitted for tau = " + std::to_string(tau));
    coverage.push_back(empirical_coverage(it->second, calibration));
  }
  return pav_select_from_coverage(grid, coverage, calibration.size(), alpha);
}

std::size_t pav_sample_bound(double epsilon, double delta, std::size_t k) {
  if (!(epsilon > 0.0)) throw DomainError("pav_sample_bound: epsilon must be positive");
  if (!(delta > 0.0)) throw DomainError("pav_sample_bound: delta must be positive");
  if (k == 0) throw DomainError("pav_sample_bound: K must be at least 1");
  const double n = -std::log(delta / static_cast<double>(k)) / (2.0 * epsilon * epsilon);
  return n <= 0.0 ? 0 : ceil_count(n);
}

std::size_t conservative_pav_bound(double alpha, double epsilon, std::size_t k) {
  check_alpha(alpha);
  if (!(epsilon > 0.0)) throw DomainError("conservative_pav: epsilon must be positive");
  if (!(alpha - epsilon > 0.0)) throw DomainError("conservative_pav: alpha - epsilon must be positive");
  if (k == 0) throw DomainError("conservative_pav: K must be at least 1");
  const double arg = epsilon / (2.0 * static_cast<double>(k) * (1.0 - alpha + epsilon / 2.0));
  const double n = -2.0 * std::log(arg) / (epsilon * epsilon);
  return n <= 0.0 ? 0 : ceil_count(n);
}

PavSelection conservative_pav(const std::map<double, PiNetwork>& nets, std::span<const double> grid,
                              const DataView& calibration, double alpha, double epsilon) {
  const std::size_t k = grid.empty() ? 0 : grid.size() - 1;
  const std::size_t required = conservative_pav_bound(alpha, epsilon, std::max<std::size_t>(k, 1));
  PavSelection sel = pav_select(nets, grid, calibration, alpha - epsilon);
  sel.nominal_alpha = alpha;
  sel.epsilon = epsilon;
  sel.required_n2 = required;
  sel.guarantee_met = sel.n2 >= required;
  return sel;
}

}  // namespace pinet
