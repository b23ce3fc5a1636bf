#include "pinet/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "pinet/error.hpp"

namespace pinet {

namespace {

void check_level(double tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw DomainError("pinball: tau must lie in [0, 1]");
}

}  // namespace

double pinball(double tau, double u) {
  check_level(tau);
  if (!std::isfinite(u)) throw DomainError("pinball: residual must be finite");
  return u > 0.0 ? tau * u : (tau - 1.0) * u;
}

double pinball_slope(double tau, double u) {
  check_level(tau);
  return u > 0.0 ? tau : tau - 1.0;
}

double pi_loss(const PiTriple& t, double y, double tau) {
  if (!(tau > 0.0 && tau <= 1.0)) throw DomainError("pi_loss: tau must lie in (0, 1]");
  if (!t.finite()) throw DomainError("pi_loss: triple endpoints must be finite");
  return pinball(tau / 2.0, y - t.lower) + pinball(0.5, y - t.median) +
         pinball(1.0 - tau / 2.0, y - t.upper);
}

double empirical_risk(std::span<const PiTriple> triples, std::span<const double> y, double tau) {
  if (triples.size() != y.size()) throw ShapeError("empirical_risk: triples and responses differ in length");
  if (triples.empty()) throw DomainError("empirical_risk: empty data");
  double sum = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) sum += pi_loss(triples[i], y[i], tau);
  return sum / static_cast<double>(y.size());
}

double gaussian_nll(double mean, double variance, double y) {
  if (!(variance > 0.0)) throw DomainError("gaussian_nll: variance must be positive");
  const double r = y - mean;
  return 0.5 * std::log(2.0 * std::numbers::pi * variance) + r * r / (2.0 * variance);
}

double variance_from_raw(double s) {
  // log(1 + e^s) without overflow
  const double softplus = std::max(s, 0.0) + std::log1p(std::exp(-std::fabs(s)));
  return softplus + kVarianceFloor;
}

}  // namespace pinet
