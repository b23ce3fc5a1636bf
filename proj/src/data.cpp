#include "pinet/data.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "pinet/error.hpp"
#include "pinet/hygiene.hpp"
#include "pinet/rng.hpp"

namespace pinet {

std::string_view role_name(Role r) {
  switch (r) {
    case Role::train: return "D1";
    case Role::calibration: return "D2";
    case Role::test: return "D3";
    case Role::none: break;
  }
  return "";
}

Role parse_role(std::string_view s) {
  if (s == "D1") return Role::train;
  if (s == "D2") return Role::calibration;
  if (s == "D3") return Role::test;
  if (s.empty()) return Role::none;
  throw DomainError("unknown role label '" + std::string(s) + "'");
}

std::vector<double> Standardization::apply(std::span<const double> x) const {
  std::vector<double> out(x.begin(), x.end());
  apply_inplace(out);
  return out;
}

void Standardization::apply_inplace(std::span<double> x) const {
  if (x.size() != mean.size()) throw ShapeError("standardization: dimension mismatch");
  for (std::size_t j = 0; j < x.size(); ++j) x[j] = (x[j] - mean[j]) / sd[j];
}

Dataset::Dataset(std::size_t dim, std::vector<double> features, std::vector<double> responses,
                 std::vector<std::string> feature_names, std::string target_name)
    : dim_(dim),
      features_(std::move(features)),
      responses_(std::move(responses)),
      feature_names_(std::move(feature_names)),
      target_name_(std::move(target_name)) {
  if (dim_ == 0) throw ShapeError("dataset: dimension must be positive");
  if (features_.size() != responses_.size() * dim_)
    throw ShapeError("dataset: feature matrix is not n x d");
  if (feature_names_.empty()) {
    for (std::size_t j = 0; j < dim_; ++j) feature_names_.push_back("x" + std::to_string(j + 1));
  } else if (feature_names_.size() != dim_) {
    throw ShapeError("dataset: feature name count differs from dimension");
  }
}

void Dataset::assign_roles(std::vector<Role> roles) {
  if (roles.size() != size()) throw ShapeError("dataset: one role per row required");
  roles_ = std::move(roles);
}

std::size_t Dataset::count(Role r) const {
  if (roles_.empty()) return r == Role::none ? size() : 0;
  return static_cast<std::size_t>(std::count(roles_.begin(), roles_.end(), r));
}

DataView Dataset::view(Role r) const {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < size(); ++i)
    if (role(i) == r) rows.push_back(i);
  return {*this, std::move(rows), r};
}

DataView Dataset::all() const {
  std::vector<std::size_t> rows(size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  return {*this, std::move(rows), Role::none};
}

Dataset Dataset::concat(const Dataset& a, const Dataset& b) {
  if (a.dim() != b.dim()) throw ShapeError("concat: dimension mismatch");
  std::vector<double> f(a.features_);
  f.insert(f.end(), b.features_.begin(), b.features_.end());
  std::vector<double> r(a.responses_);
  r.insert(r.end(), b.responses_.begin(), b.responses_.end());
  Dataset out(a.dim(), std::move(f), std::move(r), a.feature_names_, a.target_name_);
  if (a.has_roles() || b.has_roles()) {
    std::vector<Role> roles;
    roles.reserve(out.size());
    for (std::size_t i = 0; i < a.size(); ++i) roles.push_back(a.role(i));
    for (std::size_t i = 0; i < b.size(); ++i) roles.push_back(b.role(i));
    out.roles_ = std::move(roles);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic benchmark

void SyntheticSpec::validate() const {
  if (dim == 0) throw DomainError("synthetic: dimension must be positive");
  if (signal > dim) throw DomainError("synthetic: signal count exceeds dimension");
}

double SyntheticSpec::index(std::span<const double> x) const {
  if (x.size() != dim) throw ShapeError("synthetic: covariate dimension mismatch");
  double t = 0.0;
  for (std::size_t j = 0; j < signal; ++j) t += x[j];
  return t;
}

double SyntheticSpec::link(double t) {
  return 2.0 * std::sin(std::numbers::pi * t) + std::numbers::pi * t;
}

double SyntheticSpec::noise_sd(double t) { return std::sqrt(1.0 + t * t); }

Dataset gen_synthetic(const SyntheticSpec& spec, std::size_t n) {
  spec.validate();
  if (n == 0) throw DomainError("synthetic: n must be at least 1");
  Rng rng(spec.seed);
  std::vector<double> features(n * spec.dim);
  std::vector<double> responses(n);
  for (std::size_t i = 0; i < n; ++i) {
    double* row = features.data() + i * spec.dim;
    for (std::size_t j = 0; j < spec.dim; ++j) row[j] = rng.uniform();
    const double t = spec.index({row, spec.dim});
    responses[i] = SyntheticSpec::link(t) + SyntheticSpec::noise_sd(t) * rng.normal();
  }
  return Dataset(spec.dim, std::move(features), std::move(responses));
}

OracleTriple oracle_quantiles(std::span<const double> x, const SyntheticSpec& spec, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("oracle: alpha must lie in (0, 1)");
  const double t = spec.index(x);
  const double z = normal_quantile(1.0 - alpha / 2.0);
  const double med = SyntheticSpec::link(t);
  const double half = z * SyntheticSpec::noise_sd(t);
  return {med - half, med, med + half};
}

// ---------------------------------------------------------------------------
// Splitting and standardization

Dataset split(const Dataset& data, std::array<double, 3> fractions, std::uint64_t seed) {
  const std::size_t n = data.size();
  if (n < 3) throw DomainError("split: at least 3 rows required");
  double total = 0.0;
  for (double f : fractions) {
    if (!(f > 0.0)) throw DomainError("split: fractions must be positive");
    total += f;
  }
  if (std::fabs(total - 1.0) > 1e-9) throw DomainError("split: fractions must sum to 1");

  const auto n1 = static_cast<std::size_t>(std::floor(static_cast<double>(n) * fractions[0]));
  const auto n2 = static_cast<std::size_t>(std::floor(static_cast<double>(n) * fractions[1]));
  if (n1 + n2 > n) throw DomainError("split: fractions exceed sample size");

  Rng rng(seed);
  const auto perm = random_permutation(n, rng);
  std::vector<Role> roles(n, Role::test);
  for (std::size_t k = 0; k < n1; ++k) roles[perm[k]] = Role::train;
  for (std::size_t k = n1; k < n1 + n2; ++k) roles[perm[k]] = Role::calibration;

  Dataset out = data;
  out.assign_roles(std::move(roles));
  return out;
}

Dataset standardize(const Dataset& data) {
  const DataView d1 = data.view(Role::train);
  if (d1.empty()) throw DomainError("standardize: D1 is empty (roles must be assigned)");
  const std::size_t d = data.dim();
  Standardization stats{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};

  for (std::size_t i = 0; i < d1.size(); ++i) {
    hygiene::record(hygiene::Stage::preprocess, d1.row_index(i));
    const auto x = d1.x(i);
    for (std::size_t j = 0; j < d; ++j) stats.mean[j] += x[j];
  }
  const auto n1 = static_cast<double>(d1.size());
  for (auto& m : stats.mean) m /= n1;
  for (std::size_t i = 0; i < d1.size(); ++i) {
    const auto x = d1.x(i);
    for (std::size_t j = 0; j < d; ++j) {
      const double c = x[j] - stats.mean[j];
      stats.sd[j] += c * c;
    }
  }
  for (std::size_t j = 0; j < d; ++j) {
    stats.sd[j] = std::sqrt(stats.sd[j] / n1);
    if (!(stats.sd[j] > 1e-12 * std::max(1.0, std::fabs(stats.mean[j]))))
      throw DomainError("standardize: feature '" + data.feature_names()[j] +
                        "' has zero variance on D1");
  }
  return apply_standardization(data, stats);
}

Dataset apply_standardization(const Dataset& data, const Standardization& stats) {
  if (stats.mean.size() != data.dim() || stats.sd.size() != data.dim())
    throw ShapeError("standardization: statistics do not match dataset dimension");
  Dataset out = data;
  for (std::size_t i = 0; i < out.size(); ++i)
    stats.apply_inplace({out.features_.data() + i * out.dim_, out.dim_});
  out.standardization_ = stats;
  return out;
}

}  // namespace pinet
