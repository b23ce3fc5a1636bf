#pragma once

#include <span>

#include "pinet/interval.hpp"

namespace pinet {

/// Asymmetric absolute ("pinball") loss at level tau:
///   tau * u        if u > 0
///   (tau - 1) * u  if u <= 0
double pinball(double tau, double u);

/// Subgradient of pinball() in u. At the kink u = 0 the indicator counts
/// as 1, giving slope tau - 1.
double pinball_slope(double tau, double u);

/// Three-quantile interval loss: pinball terms at levels tau/2, 1/2 and
/// 1 - tau/2 on the lower, median and upper residuals. tau in (0, 1].
double pi_loss(const PiTriple& triple, double y, double tau);

/// Mean pi_loss over paired triples and responses.
double empirical_risk(std::span<const PiTriple> triples, std::span<const double> y, double tau);

/// Negative log-density of N(mean, variance) at y.
double gaussian_nll(double mean, double variance, double y);

/// Positivity map for the variance output of the Gaussian baseline:
/// softplus(s) + 1e-6.
double variance_from_raw(double s);
inline constexpr double kVarianceFloor = 1e-6;

}  // namespace pinet
