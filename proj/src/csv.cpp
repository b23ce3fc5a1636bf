#include <fstream>
#include <sstream>

#include "pinet/data.hpp"
#include "pinet/error.hpp"
#include "pinet/numfmt.hpp"

namespace pinet {

namespace {

using Record = std::vector<std::string>;

// RFC-4180: comma separated, double-quoted fields may contain commas, quotes
// ("" escape) and line breaks. CRLF and LF both end a record.
std::vector<Record> parse_records(const std::string& text) {
  std::vector<Record> records;
  Record current;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  std::size_t i = 0;

  auto end_field = [&] {
    current.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    // a bare blank line is not a record
    if (!(current.size() == 1 && current[0].empty())) records.push_back(std::move(current));
    current.clear();
  };

  while (i < text.size()) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"' && !field_started) {
      quoted = true;
      field_started = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') {
      end_record();
      ++i;
    } else if (c == '\n') {
      end_record();
    } else {
      field += c;
      field_started = true;
    }
    ++i;
  }
  if (quoted) throw ParseError("unterminated quoted field", records.size());
  if (field_started || !field.empty() || !current.empty()) end_record();
  return records;
}

std::vector<Record> read_records(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path + "'", 0);
  std::ostringstream ss;
  ss << in.rdbuf();
  std::string text = ss.str();
  if (text.rfind("\xEF\xBB\xBF", 0) == 0) text.erase(0, 3);  // UTF-8 BOM
  auto records = parse_records(text);
  if (records.empty()) throw ParseError("'" + path + "' is empty", 0);
  return records;
}

std::size_t column_of(const Record& header, const std::string& name) {
  for (std::size_t j = 0; j < header.size(); ++j)
    if (header[j] == name) return j;
  throw ParseError("missing column '" + name + "'", 0);
}

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

struct Parsed {
  Dataset data;
  std::vector<Role> roles;
};

Parsed parse_table(const std::string& path, const std::string& target,
                   const std::vector<std::string>& features, bool with_roles) {
  const auto records = read_records(path);
  const Record& header = records.front();
  if (records.size() == 1) throw ParseError("'" + path + "' has a header but no data rows", 0);

  const std::size_t target_col = column_of(header, target);
  const std::size_t role_col = with_roles ? column_of(header, "role") : header.size();
  std::vector<std::size_t> cols;
  std::vector<std::string> names;
  if (features.empty()) {
    for (std::size_t j = 0; j < header.size(); ++j) {
      if (j == target_col || j == role_col) continue;
      cols.push_back(j);
      names.push_back(header[j]);
    }
  } else {
    for (const auto& f : features) {
      cols.push_back(column_of(header, f));
      names.push_back(f);
    }
  }
  if (cols.empty()) throw ParseError("no feature columns", 0);

  std::vector<double> x;
  std::vector<double> y;
  std::vector<Role> roles;
  const std::size_t n = records.size() - 1;
  x.reserve(n * cols.size());
  y.reserve(n);
  for (std::size_t r = 1; r < records.size(); ++r) {
    const Record& rec = records[r];
    if (rec.size() != header.size())
      throw ParseError("expected " + std::to_string(header.size()) + " fields, found " +
                           std::to_string(rec.size()),
                       r);
    auto number = [&](std::size_t col) {
      const auto v = parse_double(rec[col]);
      if (!v || !std::isfinite(*v)) {
        const std::string what = rec[col].empty() ? "missing value" : "non-numeric value '" + rec[col] + "'";
        throw ParseError(what + " in column '" + header[col] + "'", r);
      }
      return *v;
    };
    for (std::size_t c : cols) x.push_back(number(c));
    y.push_back(number(target_col));
    if (with_roles) {
      try {
        roles.push_back(parse_role(rec[role_col]));
      } catch (const DomainError& e) {
        throw ParseError(e.what(), r);
      }
    }
  }
  return {Dataset(cols.size(), std::move(x), std::move(y), std::move(names), target), std::move(roles)};
}

}  // namespace

Dataset load_csv(const std::string& path, const std::string& target,
                 const std::vector<std::string>& features) {
  return parse_table(path, target, features, false).data;
}

Dataset load_snapshot(const std::string& path) {
  const auto records = read_records(path);
  const Record& header = records.front();
  // Target is the last column before `role`.
  const std::size_t role_col = column_of(header, "role");
  if (role_col == 0) throw FormatError("snapshot: no target column before 'role'");
  auto parsed = parse_table(path, header[role_col - 1], {}, true);
  const bool any = std::any_of(parsed.roles.begin(), parsed.roles.end(),
                               [](Role r) { return r != Role::none; });
  if (any) parsed.data.assign_roles(std::move(parsed.roles));
  return std::move(parsed.data);
}

void write_csv(const Dataset& data, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write '" + path + "'");
  for (const auto& name : data.feature_names()) out << quote_if_needed(name) << ',';
  out << quote_if_needed(data.target_name());
  if (data.has_roles()) out << ",role";
  out << '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (double v : data.x(i)) out << format_double(v) << ',';
    out << format_double(data.y(i));
    if (data.has_roles()) out << ',' << role_name(data.role(i));
    out << '\n';
  }
}

}  // namespace pinet
