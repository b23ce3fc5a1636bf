#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace pinet {

/// Shortest decimal text that parses back to the same double.
/// Non-finite values print as "inf", "-inf" and "nan".
std::string format_double(double v);

/// Parses a full field as a double (surrounding blanks allowed).
/// Accepts the non-finite spellings produced by format_double().
std::optional<double> parse_double(std::string_view text);

}  // namespace pinet
