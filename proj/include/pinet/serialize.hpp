#pragma once

#include <json.hpp>

#include "pinet/calibrate.hpp"
#include "pinet/data.hpp"
#include "pinet/net.hpp"

namespace pinet {

using json = nlohmann::json;

/// Version stamped into every serialized artifact as `format_version`.
inline constexpr int kFormatVersion = 1;

/// Extended reals: finite values are JSON numbers, others the strings
/// "inf", "-inf", "nan".
json ext_to_json(double v);
double ext_from_json(const json& j);

/// Throws FormatError unless `doc` carries format_version == kFormatVersion
/// and, when given, the expected `kind`.
void check_version(const json& doc, const char* kind = nullptr);

json to_json(const PiNetwork& net);
PiNetwork pi_network_from_json(const json& doc);

json to_json(const GaussianNetwork& net);
GaussianNetwork gaussian_network_from_json(const json& doc);

json to_json(const Standardization& s);
Standardization standardization_from_json(const json& j);

json to_json(const SyntheticSpec& s);
SyntheticSpec synthetic_spec_from_json(const json& j);

json to_json(const ConformalCalibration& c);
ConformalCalibration conformal_from_json(const json& j);

json to_json(const FixedWidthCalibration& c);
FixedWidthCalibration fixed_width_from_json(const json& j);

json to_json(const PavSelection& s);
PavSelection pav_from_json(const json& j);

json read_json_file(const std::string& path);
void write_json_file(const json& doc, const std::string& path);

}  // namespace pinet
