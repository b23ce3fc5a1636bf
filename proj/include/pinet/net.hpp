#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pinet/data.hpp"
#include "pinet/interval.hpp"

namespace pinet {

struct Architecture {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden;
};

/// Affine map followed by ReLU (hidden layers) or identity (output layer).
struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> weights;  // row-major, out x in
  std::vector<double> bias;
  bool relu = true;

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

struct LayerGradient {
  std::vector<double> weights;
  std::vector<double> bias;
};
using Gradients = std::vector<LayerGradient>;

/// Plain fully connected network. Immutable once trained; forward() is safe
/// to call concurrently.
class Mlp {
 public:
  /// Intermediate values kept for the backward pass.
  struct Tape {
    std::vector<std::vector<double>> pre;   // pre-activation per layer
    std::vector<std::vector<double>> post;  // post[0] = input, post[l+1] = layer l output
  };

  Mlp() = default;
  /// Fan-in scaled uniform initialisation: U(-1/sqrt(in), 1/sqrt(in)) for
  /// weights and biases.
  Mlp(const Architecture& arch, std::size_t outputs, std::uint64_t seed);
  explicit Mlp(std::vector<DenseLayer> layers);

  std::size_t input_dim() const { return layers_.empty() ? 0 : layers_.front().in; }
  std::size_t output_dim() const { return layers_.empty() ? 0 : layers_.back().out; }
  std::size_t parameter_count() const;

  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& layers() { return layers_; }

  std::vector<double> forward(std::span<const double> x) const;
  std::span<const double> forward(std::span<const double> x, Tape& tape) const;

  /// Adds d(loss)/d(theta) to `grads`, given d(loss)/d(output).
  void backward(const Tape& tape, std::span<const double> output_grad, Gradients& grads) const;

  Gradients zero_gradients() const;
  bool all_finite() const;

  friend bool operator==(const Mlp&, const Mlp&) = default;

 private:
  std::vector<DenseLayer> layers_;
};

struct TrainingInfo {
  double tau = 0.0;
  std::uint64_t seed = 0;
  int epochs = 0;
  std::vector<double> risk;  // epoch-averaged training loss

  friend bool operator==(const TrainingInfo&, const TrainingInfo&) = default;
};

/// Enforces lower <= median <= upper on a raw 3-vector:
///   l = z1,  m = l + relu(z2 - l),  u = m + relu(z3 - m).
PiTriple monotone_head(double z1, double z2, double z3);

/// Network emitting an ordered (lower, median, upper) triple.
///
/// The trivial network (tau = 0) has no parameters and returns
/// (-inf, 0, +inf) everywhere.
class PiNetwork {
 public:
  PiNetwork() = default;
  explicit PiNetwork(Mlp core, TrainingInfo info = {});

  static PiNetwork initialized(const Architecture& arch, std::uint64_t seed);
  static PiNetwork trivial(std::size_t input_dim);

  bool is_trivial() const { return trivial_; }
  std::size_t input_dim() const { return input_dim_; }

  PiTriple forward(std::span<const double> x) const;

  const Mlp& core() const { return core_; }
  Mlp& core() { return core_; }
  const TrainingInfo& training() const { return info_; }
  TrainingInfo& training() { return info_; }

  friend bool operator==(const PiNetwork&, const PiNetwork&) = default;

 private:
  Mlp core_;
  TrainingInfo info_;
  std::size_t input_dim_ = 0;
  bool trivial_ = false;
};

/// Loss gradient for one observation, d L_tau(N(x), y) / d theta.
/// Head ReLU takes subgradient 0 at 0; pinball takes slope tau - 1 at 0.
Gradients backward(const PiNetwork& net, std::span<const double> x, double y, double tau);

/// Mean interval loss of `net` over `data`.
double empirical_risk(const PiNetwork& net, const DataView& data, double tau);

enum class Optimizer { sgd, adam };

std::string optimizer_name(Optimizer o);
Optimizer parse_optimizer(const std::string& s);

struct TrainConfig {
  int epochs = 100;
  std::size_t batch_size = 64;
  double learning_rate = 1e-3;
  Optimizer optimizer = Optimizer::adam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 0;

  /// Throws DomainError unless epochs >= 1, 0 < batch <= n_train, lr > 0.
  void validate(std::size_t n_train) const;
};

/// Minimises the empirical interval risk on D1 by minibatch descent.
/// tau must lie in (0, 1]; tau = 0 is the trivial network and is never fit.
PiNetwork fit(const DataView& train, double tau, const TrainConfig& cfg, const Architecture& arch);

/// Same, starting from `start` (warm start). Only the shuffling stream is
/// drawn from cfg.seed.
PiNetwork fit(const DataView& train, double tau, const TrainConfig& cfg, PiNetwork start);

/// Mean/variance baseline trained on Gaussian negative log-likelihood.
/// Raw outputs (mu, s) map to variance softplus(s) + 1e-6.
class GaussianNetwork {
 public:
  struct Prediction {
    double mean;
    double variance;
  };

  GaussianNetwork() = default;
  explicit GaussianNetwork(Mlp core, TrainingInfo info = {});
  static GaussianNetwork initialized(const Architecture& arch, std::uint64_t seed);

  std::size_t input_dim() const { return core_.input_dim(); }
  Prediction forward(std::span<const double> x) const;
  /// mean -/+ z_{alpha/2} sd, with the mean as median.
  PiTriple interval(std::span<const double> x, double alpha) const;

  const Mlp& core() const { return core_; }
  Mlp& core() { return core_; }
  const TrainingInfo& training() const { return info_; }
  TrainingInfo& training() { return info_; }

  friend bool operator==(const GaussianNetwork&, const GaussianNetwork&) = default;

 private:
  Mlp core_;
  TrainingInfo info_;
};

Gradients backward(const GaussianNetwork& net, std::span<const double> x, double y);

GaussianNetwork fit_gaussian(const DataView& train, const TrainConfig& cfg, const Architecture& arch);

}  // namespace pinet
