#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pinet/interval.hpp"

namespace pinet {

/// Row role in the sample split: D1 trains, D2 calibrates, D3 tests.
enum class Role : std::uint8_t { none = 0, train = 1, calibration = 2, test = 3 };

std::string_view role_name(Role r);  // "D1", "D2", "D3", ""
Role parse_role(std::string_view s);

/// Per-feature affine map (x - mean) / sd, fitted on D1 rows.
struct Standardization {
  std::vector<double> mean;
  std::vector<double> sd;

  std::vector<double> apply(std::span<const double> x) const;
  void apply_inplace(std::span<double> x) const;
  friend bool operator==(const Standardization&, const Standardization&) = default;
};

class DataView;

/// Feature matrix (row-major, n x d), responses and per-row roles.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::size_t dim, std::vector<double> features, std::vector<double> responses,
          std::vector<std::string> feature_names = {}, std::string target_name = "y");

  std::size_t size() const { return responses_.size(); }
  std::size_t dim() const { return dim_; }

  std::span<const double> x(std::size_t row) const {
    return {features_.data() + row * dim_, dim_};
  }
  double y(std::size_t row) const { return responses_[row]; }
  Role role(std::size_t row) const { return roles_.empty() ? Role::none : roles_[row]; }

  std::span<const double> features() const { return features_; }
  std::span<const double> responses() const { return responses_; }
  const std::vector<Role>& roles() const { return roles_; }
  bool has_roles() const { return !roles_.empty(); }

  const std::vector<std::string>& feature_names() const { return feature_names_; }
  const std::string& target_name() const { return target_name_; }
  const std::optional<Standardization>& standardization() const { return standardization_; }

  /// Replaces the role labels. Must have one entry per row.
  void assign_roles(std::vector<Role> roles);

  std::size_t count(Role r) const;
  DataView view(Role r) const;
  DataView all() const;

  /// Concatenate rows of two datasets with the same dimension.
  static Dataset concat(const Dataset& a, const Dataset& b);

 private:
  friend Dataset standardize(const Dataset&);
  friend Dataset apply_standardization(const Dataset&, const Standardization&);

  std::size_t dim_ = 0;
  std::vector<double> features_;
  std::vector<double> responses_;
  std::vector<Role> roles_;
  std::vector<std::string> feature_names_;
  std::string target_name_ = "y";
  std::optional<Standardization> standardization_;
};

/// Row subset of a Dataset. Holds a pointer: the dataset must outlive it.
class DataView {
 public:
  DataView() = default;
  DataView(const Dataset& data, std::vector<std::size_t> rows, Role role)
      : data_(&data), rows_(std::move(rows)), role_(role) {}

  std::size_t size() const { return rows_.size(); }
  bool empty() const { return rows_.empty(); }
  std::size_t dim() const { return data_ ? data_->dim() : 0; }
  Role role() const { return role_; }

  std::size_t row_index(std::size_t i) const { return rows_[i]; }
  std::span<const double> x(std::size_t i) const { return data_->x(rows_[i]); }
  double y(std::size_t i) const { return data_->y(rows_[i]); }
  const Dataset& dataset() const { return *data_; }
  const std::vector<std::size_t>& rows() const { return rows_; }

 private:
  const Dataset* data_ = nullptr;
  std::vector<std::size_t> rows_;
  Role role_ = Role::none;
};

/// Heteroskedastic single-index benchmark:
///   X ~ U[0,1]^d,  Y = f(b'X) + e,  e ~ N(0, 1 + (b'X)^2),
///   f(t) = 2 sin(pi t) + pi t,  b = (1,...,1,0,...,0) with `signal` ones.
struct SyntheticSpec {
  std::size_t dim = 100;
  std::size_t signal = 5;
  std::uint64_t seed = 0;

  void validate() const;
  double index(std::span<const double> x) const;  // b'x
  static double link(double t);                   // f(t)
  static double noise_sd(double t);               // sqrt(1 + t^2)
};

/// Draws n rows. Uniforms for each row come first (d of them), then one normal.
Dataset gen_synthetic(const SyntheticSpec& spec, std::size_t n);

/// Analytic conditional quantiles at levels alpha/2, 1/2, 1 - alpha/2.
struct OracleTriple {
  double q_lo = 0.0;
  double q_med = 0.0;
  double q_hi = 0.0;
  PiTriple triple() const { return {q_lo, q_med, q_hi}; }
};

OracleTriple oracle_quantiles(std::span<const double> x, const SyntheticSpec& spec, double alpha);

/// Reads an RFC-4180 CSV with a header row. Empty `features` selects every
/// column other than the target. Any missing or non-numeric field is an
/// error naming its 1-based data row.
Dataset load_csv(const std::string& path, const std::string& target,
                 const std::vector<std::string>& features = {});

/// Writes features, target and (when assigned) a `role` column.
void write_csv(const Dataset& data, const std::string& path);

/// Reads a snapshot produced by write_csv, restoring roles.
Dataset load_snapshot(const std::string& path);

/// Seeded uniformly random partition into D1/D2/D3 with sizes
/// floor(n f1), floor(n f2) and the remainder.
Dataset split(const Dataset& data, std::array<double, 3> fractions, std::uint64_t seed);

/// Fits the per-feature standardization on D1 rows and applies it to every row.
Dataset standardize(const Dataset& data);

/// Applies previously fitted statistics to every row.
Dataset apply_standardization(const Dataset& data, const Standardization& stats);

}  // namespace pinet
