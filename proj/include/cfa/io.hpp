#pragma once

// CSV datasets and JSON schema files.

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cfa/error.hpp"
#include "cfa/sfm.hpp"

namespace cfa {

using json = nlohmann::json;

/// Shortest round-trip text for a double ("NA" for non-finite).
inline std::string format_double(double v) {
  if (!std::isfinite(v)) return "NA";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline bool is_missing_token(std::string_view s) {
  if (s.empty()) return true;
  if (s.size() != 2) return false;
  return std::tolower(static_cast<unsigned char>(s[0])) == 'n' &&
         std::tolower(static_cast<unsigned char>(s[1])) == 'a';
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') cur += '"', ++i;
        else quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

inline Role parse_role(const std::string& s) {
  if (s == "protected") return Role::Protected;
  if (s == "confounder") return Role::Confounder;
  if (s == "mediator") return Role::Mediator;
  if (s == "outcome") return Role::Outcome;
  throw Error(ErrorCode::InvalidSchema, "unknown role '" + s + "'");
}

inline Kind parse_kind(const std::string& s) {
  if (s == "binary") return Kind::Binary;
  if (s == "categorical") return Kind::Categorical;
  if (s == "continuous") return Kind::Continuous;
  throw Error(ErrorCode::InvalidSchema, "unknown kind '" + s + "'");
}

}  // namespace detail

inline SfmSchema schema_from_json(const json& j) {
  try {
    std::vector<VariableSpec> vars;
    for (const auto& v : j.at("variables")) {
      VariableSpec spec;
      spec.name = v.at("name").get<std::string>();
      spec.role = detail::parse_role(v.at("role").get<std::string>());
      spec.kind = detail::parse_kind(v.at("kind").get<std::string>());
      if (spec.kind == Kind::Categorical) {
        spec.levels = v.at("levels").get<std::vector<std::string>>();
        spec.reference = v.value("reference", spec.levels.empty() ? "" : spec.levels.front());
      }
      vars.push_back(std::move(spec));
    }
    return SfmSchema(std::move(vars), j.value("x0", "0"), j.value("x1", "1"));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidSchema, e.what());
  }
}

inline json schema_to_json(const SfmSchema& s) {
  json vars = json::array();
  for (const auto& v : s.variables()) {
    json e = {{"name", v.name}, {"role", role_name(v.role)}, {"kind", kind_name(v.kind)}};
    if (v.kind == Kind::Categorical) {
      e["levels"] = v.levels;
      e["reference"] = v.reference;
    }
    vars.push_back(std::move(e));
  }
  return {{"x0", s.x0_label()}, {"x1", s.x1_label()}, {"variables", vars}};
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, path + ": " + e.what());
  }
}

inline SfmSchema read_schema(const std::string& path) { return schema_from_json(read_json_file(path)); }

/// Parses CSV text against a schema. Cell values that violate the schema
/// (e.g. binary "2", undeclared level) are kept so validate() can report them;
/// text that cannot be a number in a numeric column is a ParseError.
inline Dataset parse_csv(std::istream& in, const SfmSchema& schema) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::ParseError, "empty CSV");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  auto header = detail::split_csv_line(line);
  if (header.size() != schema.size())
    throw Error(ErrorCode::SchemaMismatch, "CSV has " + std::to_string(header.size()) +
                                               " columns, schema declares " +
                                               std::to_string(schema.size()));
  std::vector<std::size_t> to_schema(header.size());
  std::vector<bool> seen(schema.size(), false);
  for (std::size_t c = 0; c < header.size(); ++c) {
    auto idx = schema.find(header[c]);
    if (!idx || seen[*idx])
      throw Error(ErrorCode::SchemaMismatch, "CSV header '" + header[c] + "' not in schema");
    seen[*idx] = true;
    to_schema[c] = *idx;
  }

  std::vector<Column> cols(schema.size());
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() && in.peek() == EOF) break;
    auto fields = detail::split_csv_line(line);
    if (fields.size() != header.size())
      throw Error(ErrorCode::ParseError, "row " + std::to_string(row + 1) + " has " +
                                             std::to_string(fields.size()) + " fields");
    for (std::size_t c = 0; c < fields.size(); ++c) {
      const auto& spec = schema.variable(to_schema[c]);
      auto& col = cols[to_schema[c]];
      const std::string& f = fields[c];
      if (is_missing_token(f)) {
        col.values.push_back(0.0);
        col.missing.push_back(1);
        continue;
      }
      col.missing.push_back(0);
      if (spec.kind == Kind::Categorical) {
        auto it = std::find(spec.levels.begin(), spec.levels.end(), f);
        if (it == spec.levels.end()) {
          col.undeclared[row] = f;
          col.values.push_back(-1.0);
        } else {
          col.values.push_back(static_cast<double>(it - spec.levels.begin()));
        }
        continue;
      }
      double v = 0.0;
      auto res = std::from_chars(f.data(), f.data() + f.size(), v);
      if (res.ec != std::errc() || res.ptr != f.data() + f.size())
        throw Error(ErrorCode::ParseError, "column '" + spec.name + "' row " +
                                               std::to_string(row + 1) + ": '" + f +
                                               "' is not numeric");
      col.values.push_back(v);
    }
    ++row;
  }
  return Dataset(schema, std::move(cols));
}

inline Dataset read_csv(const std::string& path, const SfmSchema& schema) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open '" + path + "'");
  return parse_csv(in, schema);
}

inline void write_csv(std::ostream& out, const Dataset& data) {
  const auto& schema = data.schema();
  for (std::size_t j = 0; j < schema.size(); ++j)
    out << (j ? "," : "") << detail::csv_field(schema.variable(j).name);
  out << "\n";
  for (std::size_t i = 0; i < data.n(); ++i) {
    for (std::size_t j = 0; j < schema.size(); ++j) {
      if (j) out << ",";
      if (data.is_missing(i, j)) {
        out << "NA";
        continue;
      }
      const auto& spec = schema.variable(j);
      double v = data.value(i, j);
      if (spec.kind == Kind::Categorical) out << detail::csv_field(spec.label(static_cast<int>(v)));
      else if (spec.kind == Kind::Binary) out << static_cast<int>(v);
      else out << format_double(v);
    }
    out << "\n";
  }
}

inline void write_csv(const std::string& path, const Dataset& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::ParseError, "cannot write '" + path + "'");
  write_csv(out, data);
}

}  // namespace cfa
