#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace pinet {

/// Seeded generator with a fixed, platform-independent output sequence.
///
/// Built on std::mt19937_64 (whose output is pinned by the standard); all
/// derived variates are computed here rather than through the
/// implementation-defined std:: distributions, so results are bit-identical
/// across standard libraries.
///
/// Normal variates use inversion of a 53-bit uniform through
/// normal_quantile(); one uniform draw per normal.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform on the open interval (0, 1).
  double uniform();

  // Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);

  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }

 private:
  std::mt19937_64 engine_;
};

/// SplitMix64 finaliser.
std::uint64_t mix64(std::uint64_t x);

/// Independent stream seed for (parent, stream). Used for replicate seeds
/// and for per-stage / per-network streams within a replicate.
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t stream);

/// Fisher-Yates permutation of 0..n-1.
std::vector<std::size_t> random_permutation(std::size_t n, Rng& rng);

/// Standard normal quantile (Wichura AS241, ~1e-16 relative accuracy).
/// p must lie in (0, 1); returns -inf / +inf at 0 / 1.
double normal_quantile(double p);

/// Standard normal CDF.
double normal_cdf(double z);

}  // namespace pinet
