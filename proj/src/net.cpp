#include "pinet/net.hpp"

#include <algorithm>
#include <cmath>

#include "pinet/error.hpp"
#include "pinet/hygiene.hpp"
#include "pinet/losses.hpp"
#include "pinet/rng.hpp"

namespace pinet {

// ---------------------------------------------------------------------------
// Mlp

Mlp::Mlp(const Architecture& arch, std::size_t outputs, std::uint64_t seed) {
  if (arch.input_dim == 0) throw ShapeError("network: input dimension must be positive");
  if (outputs == 0) throw ShapeError("network: output dimension must be positive");
  Rng rng(seed);
  std::size_t in = arch.input_dim;
  auto make = [&](std::size_t out, bool relu) {
    DenseLayer layer{in, out, std::vector<double>(in * out), std::vector<double>(out), relu};
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    for (auto& w : layer.weights) w = bound * (2.0 * rng.uniform() - 1.0);
    for (auto& b : layer.bias) b = bound * (2.0 * rng.uniform() - 1.0);
    layers_.push_back(std::move(layer));
    in = out;
  };
  for (std::size_t h : arch.hidden) {
    if (h == 0) throw ShapeError("network: hidden layers must be non-empty");
    make(h, true);
  }
  make(outputs, false);
}

Mlp::Mlp(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw ShapeError("network: at least one layer required");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& L = layers_[l];
    if (L.in == 0 || L.out == 0 || L.weights.size() != L.in * L.out || L.bias.size() != L.out)
      throw ShapeError("network: layer " + std::to_string(l) + " has inconsistent shape");
    if (l > 0 && layers_[l - 1].out != L.in)
      throw ShapeError("network: layer " + std::to_string(l) + " input does not match previous output");
  }
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& L : layers_) n += L.weights.size() + L.bias.size();
  return n;
}

std::vector<double> Mlp::forward(std::span<const double> x) const {
  Tape tape;
  const auto out = forward(x, tape);
  return {out.begin(), out.end()};
}

std::span<const double> Mlp::forward(std::span<const double> x, Tape& tape) const {
  if (x.size() != input_dim())
    throw ShapeError("network: expected input of length " + std::to_string(input_dim()) +
                     ", got " + std::to_string(x.size()));
  tape.pre.resize(layers_.size());
  tape.post.resize(layers_.size() + 1);
  tape.post[0].assign(x.begin(), x.end());
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const DenseLayer& L = layers_[l];
    const auto& in = tape.post[l];
    auto& pre = tape.pre[l];
    auto& post = tape.post[l + 1];
    pre.resize(L.out);
    post.resize(L.out);
    for (std::size_t o = 0; o < L.out; ++o) {
      const double* w = L.weights.data() + o * L.in;
      double s = L.bias[o];
      for (std::size_t i = 0; i < L.in; ++i) s += w[i] * in[i];
      if (!std::isfinite(s)) throw NumericError("non-finite activation in layer " + std::to_string(l));
      pre[o] = s;
      post[o] = L.relu ? std::max(0.0, s) : s;
    }
  }
  return tape.post.back();
}

void Mlp::backward(const Tape& tape, std::span<const double> output_grad, Gradients& grads) const {
  if (output_grad.size() != output_dim()) throw ShapeError("network: output gradient length mismatch");
  std::vector<double> delta(output_grad.begin(), output_grad.end());
  std::vector<double> prev;
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const DenseLayer& L = layers_[l];
    if (L.relu) {
      for (std::size_t o = 0; o < L.out; ++o)
        if (!(tape.pre[l][o] > 0.0)) delta[o] = 0.0;
    }
    for (double v : delta)
      if (!std::isfinite(v))
        throw NumericError("non-finite gradient in layer " + std::to_string(l));
    auto& g = grads[l];
    const auto& in = tape.post[l];
    for (std::size_t o = 0; o < L.out; ++o) {
      const double d = delta[o];
      g.bias[o] += d;
      if (d == 0.0) continue;
      double* gw = g.weights.data() + o * L.in;
      for (std::size_t i = 0; i < L.in; ++i) gw[i] += d * in[i];
    }
    if (l == 0) break;
    prev.assign(L.in, 0.0);
    for (std::size_t o = 0; o < L.out; ++o) {
      const double d = delta[o];
      if (d == 0.0) continue;
      const double* w = L.weights.data() + o * L.in;
      for (std::size_t i = 0; i < L.in; ++i) prev[i] += w[i] * d;
    }
    delta.swap(prev);
  }
}

Gradients Mlp::zero_gradients() const {
  Gradients g;
  g.reserve(layers_.size());
  for (const auto& L : layers_)
    g.push_back({std::vector<double>(L.weights.size(), 0.0), std::vector<double>(L.bias.size(), 0.0)});
  return g;
}

bool Mlp::all_finite() const {
  for (const auto& L : layers_) {
    for (double w : L.weights)
      if (!std::isfinite(w)) return false;
    for (double b : L.bias)
      if (!std::isfinite(b)) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Heads

PiTriple monotone_head(double z1, double z2, double z3) {
  if (!std::isfinite(z1) || !std::isfinite(z2) || !std::isfinite(z3))
    throw NumericError("monotone_head: non-finite raw output");
  const double l = z1;
  const double m = l + std::max(0.0, z2 - l);
  const double u = m + std::max(0.0, z3 - m);
  return {l, m, u};
}

namespace {

// Initial spread between the raw head outputs, so that every gap starts open.
constexpr double kHeadBiasOffset = 1.0;

// Loss L_tau at raw outputs z and its gradient with respect to z.
double pi_head_loss(std::span<const double> z, double y, double tau, std::span<double> grad) {
  const PiTriple t = monotone_head(z[0], z[1], z[2]);
  const double loss = pi_loss(t, y, tau);

  // d/dq h(y - q) = -h'(y - q)
  const double g_l = -pinball_slope(tau / 2.0, y - t.lower);
  double g_m = -pinball_slope(0.5, y - t.median);
  const double g_u = -pinball_slope(1.0 - tau / 2.0, y - t.upper);

  const bool upper_open = z[2] - t.median > 0.0;
  const bool median_open = z[1] - t.lower > 0.0;
  g_m += upper_open ? 0.0 : g_u;
  grad[2] = upper_open ? g_u : 0.0;
  grad[1] = median_open ? g_m : 0.0;
  grad[0] = g_l + (median_open ? 0.0 : g_m);
  return loss;
}

double gaussian_head_loss(std::span<const double> z, double y, std::span<double> grad) {
  const double mean = z[0];
  const double var = variance_from_raw(z[1]);
  const double r = y - mean;
  grad[0] = -r / var;
  const double dvar = 0.5 / var - r * r / (2.0 * var * var);
  const double sigmoid = 1.0 / (1.0 + std::exp(-z[1]));
  grad[1] = dvar * sigmoid;
  return gaussian_nll(mean, var, y);
}

template <class HeadLoss>
std::vector<double> train_loop(Mlp& core, const DataView& train, const TrainConfig& cfg,
                               std::uint64_t shuffle_seed, HeadLoss&& head_loss) {
  const std::size_t n = train.size();
  Rng rng(shuffle_seed);
  Gradients grads = core.zero_gradients();
  Gradients m1 = core.zero_gradients();
  Gradients m2 = core.zero_gradients();
  Mlp::Tape tape;
  std::vector<double> out_grad(core.output_dim());
  std::vector<double> risk;
  risk.reserve(static_cast<std::size_t>(cfg.epochs));
  long step = 0;

  auto update = [&](std::vector<double>& param, std::vector<double>& g, std::vector<double>& a,
                    std::vector<double>& b, double scale, double bias1, double bias2) {
    for (std::size_t k = 0; k < param.size(); ++k) {
      const double gk = g[k] * scale;
      g[k] = 0.0;
      if (cfg.optimizer == Optimizer::sgd) {
        param[k] -= cfg.learning_rate * gk;
      } else {
        a[k] = cfg.beta1 * a[k] + (1.0 - cfg.beta1) * gk;
        b[k] = cfg.beta2 * b[k] + (1.0 - cfg.beta2) * gk * gk;
        const double mhat = a[k] / bias1;
        const double vhat = b[k] / bias2;
        param[k] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.epsilon);
      }
    }
  };

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto perm = random_permutation(n, rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t end = std::min(n, start + cfg.batch_size);
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t i = perm[k];
        hygiene::record(hygiene::Stage::train, train.row_index(i));
        double loss;
        try {
          const auto z = core.forward(train.x(i), tape);
          loss = head_loss(z, train.y(i), std::span<double>(out_grad));
          core.backward(tape, out_grad, grads);
        } catch (const NumericError& e) {
          throw TrainingError(std::string("diverged: ") + e.what(), epoch);
        }
        if (!std::isfinite(loss)) throw TrainingError("non-finite loss", epoch);
        epoch_loss += loss;
      }
      ++step;
      const double scale = 1.0 / static_cast<double>(end - start);
      const double bias1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
      const double bias2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
      auto& layers = core.layers();
      for (std::size_t l = 0; l < layers.size(); ++l) {
        update(layers[l].weights, grads[l].weights, m1[l].weights, m2[l].weights, scale, bias1, bias2);
        update(layers[l].bias, grads[l].bias, m1[l].bias, m2[l].bias, scale, bias1, bias2);
      }
      if (!core.all_finite()) throw TrainingError("non-finite parameters after update", epoch);
    }
    if (!std::isfinite(epoch_loss)) throw TrainingError("non-finite epoch risk", epoch);
    risk.push_back(epoch_loss / static_cast<double>(n));
  }
  return risk;
}

}  // namespace

// ---------------------------------------------------------------------------
// PiNetwork

PiNetwork::PiNetwork(Mlp core, TrainingInfo info)
    : core_(std::move(core)), info_(std::move(info)), input_dim_(core_.input_dim()) {
  if (core_.output_dim() != 3) throw ShapeError("PiNetwork: raw output must be 3-dimensional");
}

PiNetwork PiNetwork::initialized(const Architecture& arch, std::uint64_t seed) {
  TrainingInfo info;
  info.seed = seed;
  Mlp core(arch, 3, seed);
  auto& bias = core.layers().back().bias;
  bias[0] -= kHeadBiasOffset;
  bias[2] += kHeadBiasOffset;
  return PiNetwork(std::move(core), std::move(info));
}

PiNetwork PiNetwork::trivial(std::size_t input_dim) {
  PiNetwork net;
  net.input_dim_ = input_dim;
  net.trivial_ = true;
  return net;
}

PiTriple PiNetwork::forward(std::span<const double> x) const {
  if (trivial_) {
    if (x.size() != input_dim_) throw ShapeError("network: input dimension mismatch");
    return {-kInf, 0.0, kInf};
  }
  Mlp::Tape tape;
  const auto z = core_.forward(x, tape);
  return monotone_head(z[0], z[1], z[2]);
}

Gradients backward(const PiNetwork& net, std::span<const double> x, double y, double tau) {
  if (net.is_trivial()) throw DomainError("backward: the trivial network has no parameters");
  if (!(tau > 0.0 && tau < 1.0)) throw DomainError("backward: tau must lie in (0, 1)");
  if (!std::isfinite(y)) throw DomainError("backward: response must be finite");
  for (double v : x)
    if (!std::isfinite(v)) throw DomainError("backward: covariates must be finite");
  Mlp::Tape tape;
  const auto z = net.core().forward(x, tape);
  std::vector<double> g(3);
  pi_head_loss(z, y, tau, g);
  Gradients grads = net.core().zero_gradients();
  net.core().backward(tape, g, grads);
  return grads;
}

std::string optimizer_name(Optimizer o) { return o == Optimizer::sgd ? "sgd" : "adam"; }

Optimizer parse_optimizer(const std::string& s) {
  if (s == "sgd") return Optimizer::sgd;
  if (s == "adam") return Optimizer::adam;
  throw DomainError("unknown optimizer '" + s + "'");
}

void TrainConfig::validate(std::size_t n_train) const {
  if (epochs < 1) throw DomainError("train config: epochs must be >= 1");
  if (batch_size == 0) throw DomainError("train config: batch size must be positive");
  if (batch_size > n_train) throw DomainError("train config: batch size exceeds |D1|");
  if (!(learning_rate > 0.0)) throw DomainError("train config: learning rate must be positive");
  if (optimizer == Optimizer::adam &&
      !(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0 && epsilon > 0.0))
    throw DomainError("train config: invalid moment parameters");
}

double empirical_risk(const PiNetwork& net, const DataView& data, double tau) {
  if (data.empty()) throw DomainError("empirical_risk: empty data");
  std::vector<PiTriple> triples;
  std::vector<double> y;
  for (std::size_t i = 0; i < data.size(); ++i) {
    triples.push_back(net.forward(data.x(i)));
    y.push_back(data.y(i));
  }
  return empirical_risk(triples, y, tau);
}

PiNetwork fit(const DataView& train, double tau, const TrainConfig& cfg, const Architecture& arch) {
  return fit(train, tau, cfg, PiNetwork::initialized(arch, derive_seed(cfg.seed, 0)));
}

PiNetwork fit(const DataView& train, double tau, const TrainConfig& cfg, PiNetwork start) {
  if (tau == 0.0)
    throw DomainError("fit: tau = 0 is the trivial network and is never trained");
  if (!(tau > 0.0 && tau <= 1.0)) throw DomainError("fit: tau must lie in (0, 1]");
  if (train.empty()) throw DomainError("fit: D1 is empty");
  if (start.is_trivial()) throw DomainError("fit: cannot train the trivial network");
  if (train.dim() != start.input_dim()) throw ShapeError("fit: data and network dimensions differ");
  cfg.validate(train.size());

  PiNetwork net = std::move(start);
  auto risk = train_loop(net.core(), train, cfg, derive_seed(cfg.seed, 1),
                         [tau](std::span<const double> z, double y, std::span<double> g) {
                           return pi_head_loss(z, y, tau, g);
                         });
  auto& info = net.training();
  info.tau = tau;
  info.seed = cfg.seed;
  info.epochs = cfg.epochs;
  info.risk = std::move(risk);
  return net;
}

// ---------------------------------------------------------------------------
// GaussianNetwork

GaussianNetwork::GaussianNetwork(Mlp core, TrainingInfo info)
    : core_(std::move(core)), info_(std::move(info)) {
  if (core_.output_dim() != 2) throw ShapeError("GaussianNetwork: raw output must be 2-dimensional");
}

GaussianNetwork GaussianNetwork::initialized(const Architecture& arch, std::uint64_t seed) {
  TrainingInfo info;
  info.seed = seed;
  return GaussianNetwork(Mlp(arch, 2, seed), std::move(info));
}

GaussianNetwork::Prediction GaussianNetwork::forward(std::span<const double> x) const {
  Mlp::Tape tape;
  const auto z = core_.forward(x, tape);
  return {z[0], variance_from_raw(z[1])};
}

PiTriple GaussianNetwork::interval(std::span<const double> x, double alpha) const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("interval: alpha must lie in (0, 1)");
  const auto p = forward(x);
  const double half = normal_quantile(1.0 - alpha / 2.0) * std::sqrt(p.variance);
  return {p.mean - half, p.mean, p.mean + half};
}

Gradients backward(const GaussianNetwork& net, std::span<const double> x, double y) {
  Mlp::Tape tape;
  const auto z = net.core().forward(x, tape);
  std::vector<double> g(2);
  gaussian_head_loss(z, y, g);
  Gradients grads = net.core().zero_gradients();
  net.core().backward(tape, g, grads);
  return grads;
}

GaussianNetwork fit_gaussian(const DataView& train, const TrainConfig& cfg, const Architecture& arch) {
  if (train.empty()) throw DomainError("fit: D1 is empty");
  if (train.dim() != arch.input_dim) throw ShapeError("fit: data and network dimensions differ");
  cfg.validate(train.size());
  GaussianNetwork net = GaussianNetwork::initialized(arch, derive_seed(cfg.seed, 0));
  auto risk = train_loop(net.core(), train, cfg, derive_seed(cfg.seed, 1),
                         [](std::span<const double> z, double y, std::span<double> g) {
                           return gaussian_head_loss(z, y, g);
                         });
  auto& info = net.training();
  info.seed = cfg.seed;
  info.epochs = cfg.epochs;
  info.risk = std::move(risk);
  return net;
}

}  // namespace pinet
