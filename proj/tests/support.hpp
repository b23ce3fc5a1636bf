#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "pinet/net.hpp"
#include "pinet/rng.hpp"

namespace pinet::testkit {

struct GradientCheck {
  double max_rel_error = 0.0;
  std::size_t coordinates = 0;
};

// Raw head pre-activations (z1, z2, z3) for one input.
inline std::vector<double> raw_outputs(const PiNetwork& net, std::span<const double> x) {
  return net.core().forward(x);
}

// True when every hidden pre-activation, head gap and residual is at least
// `margin` away from its kink.
inline bool away_from_kinks(const PiNetwork& net, std::span<const double> x, double y, double margin) {
  Mlp::Tape tape;
  const auto z = net.core().forward(x, tape);
  for (std::size_t l = 0; l + 1 < tape.pre.size(); ++l)
    for (double v : tape.pre[l])
      if (std::fabs(v) < margin) return false;
  const PiTriple t = monotone_head(z[0], z[1], z[2]);
  if (std::fabs(z[1] - t.lower) < margin || std::fabs(z[2] - t.median) < margin) return false;
  for (double q : {t.lower, t.median, t.upper})
    if (std::fabs(y - q) < margin) return false;
  return true;
}

// Compares backward() with central differences of pi_loss in every parameter.
// Relative error uses max(|analytic|, |numeric|, 1e-3) as denominator.
inline GradientCheck check_gradient(const PiNetwork& net, std::span<const double> x, double y, double tau,
                                    double step = 1e-5) {
  const Gradients g = backward(net, x, y, tau);
  PiNetwork probe = net;
  GradientCheck out;
  auto loss = [&] {
    const auto z = probe.core().forward(x);
    const PiTriple t = monotone_head(z[0], z[1], z[2]);
    auto h = [](double q, double u) { return u > 0 ? q * u : (q - 1.0) * u; };
    return h(tau / 2.0, y - t.lower) + h(0.5, y - t.median) + h(1.0 - tau / 2.0, y - t.upper);
  };
  auto visit = [&](double& param, double analytic) {
    const double saved = param;
    param = saved + step;
    const double up = loss();
    param = saved - step;
    const double down = loss();
    param = saved;
    const double numeric = (up - down) / (2.0 * step);
    const double denom = std::max({std::fabs(analytic), std::fabs(numeric), 1e-3});
    out.max_rel_error = std::max(out.max_rel_error, std::fabs(analytic - numeric) / denom);
    ++out.coordinates;
  };
  auto& layers = probe.core().layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    for (std::size_t k = 0; k < layers[l].weights.size(); ++k) visit(layers[l].weights[k], g[l].weights[k]);
    for (std::size_t k = 0; k < layers[l].bias.size(); ++k) visit(layers[l].bias[k], g[l].bias[k]);
  }
  return out;
}

// Random network, input and response that sit away from every kink.
struct GradientCase {
  PiNetwork net;
  std::vector<double> x;
  double y = 0.0;
  double tau = 0.1;
};

inline GradientCase random_gradient_case(std::uint64_t seed, double margin = 1e-3) {
  Rng rng(seed);
  for (;;) {
    const std::size_t d = 1 + rng.below(6);
    std::vector<std::size_t> hidden;
    const std::size_t depth = 1 + rng.below(2);
    for (std::size_t k = 0; k < depth; ++k) hidden.push_back(2 + rng.below(7));
    GradientCase c;
    c.net = PiNetwork::initialized({d, hidden}, rng.next());
    for (auto& layer : c.net.core().layers())
      for (auto& b : layer.bias) b += 0.3 * rng.normal();
    c.x.resize(d);
    for (auto& v : c.x) v = rng.normal();
    c.y = 3.0 * rng.normal();
    c.tau = 0.02 + 0.96 * rng.uniform();
    if (away_from_kinks(c.net, c.x, c.y, margin)) return c;
  }
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::filesystem::path fresh_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("pinet_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace pinet::testkit
