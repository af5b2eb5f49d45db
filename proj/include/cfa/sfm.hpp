#pragma once

// Standard Fairness Model data layer: schema, dataset container, role-aware
// design matrices, single imputation and fold assignment.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cfa/error.hpp"
#include "cfa/rng.hpp"

namespace cfa {

enum class Role { Protected, Confounder, Mediator, Outcome };
enum class Kind { Binary, Categorical, Continuous };

inline const char* role_name(Role r) {
  switch (r) {
    case Role::Protected: return "protected";
    case Role::Confounder: return "confounder";
    case Role::Mediator: return "mediator";
    case Role::Outcome: return "outcome";
  }
  return "?";
}

inline const char* kind_name(Kind k) {
  switch (k) {
    case Kind::Binary: return "binary";
    case Kind::Categorical: return "categorical";
    case Kind::Continuous: return "continuous";
  }
  return "?";
}

struct VariableSpec {
  std::string name;
  Role role = Role::Confounder;
  Kind kind = Kind::Continuous;
  std::vector<std::string> levels;  // categorical only, in declared order
  std::string reference;            // categorical only

  static VariableSpec binary(std::string name, Role role) {
    return {std::move(name), role, Kind::Binary, {}, {}};
  }
  static VariableSpec continuous(std::string name, Role role) {
    return {std::move(name), role, Kind::Continuous, {}, {}};
  }
  static VariableSpec categorical(std::string name, Role role,
                                  std::vector<std::string> levels,
                                  std::string reference) {
    return {std::move(name), role, Kind::Categorical, std::move(levels),
            std::move(reference)};
  }

  bool is_discrete() const { return kind != Kind::Continuous; }

  /// Number of distinct codes for a discrete variable.
  int cardinality() const {
    return kind == Kind::Binary ? 2 : static_cast<int>(levels.size());
  }

  int reference_code() const {
    if (kind != Kind::Categorical) return 0;
    auto it = std::find(levels.begin(), levels.end(), reference);
    return static_cast<int>(it - levels.begin());
  }

  /// Label for a discrete code ("0"/"1" for binaries).
  std::string label(int code) const {
    if (kind == Kind::Categorical) return levels.at(static_cast<std::size_t>(code));
    return std::to_string(code);
  }
};

class SfmSchema {
 public:
  SfmSchema() = default;
  SfmSchema(std::vector<VariableSpec> variables, std::string x0_label = "0",
            std::string x1_label = "1")
      : variables_(std::move(variables)),
        x0_label_(std::move(x0_label)),
        x1_label_(std::move(x1_label)) {
    check();
  }

  const std::vector<VariableSpec>& variables() const { return variables_; }
  const VariableSpec& variable(std::size_t i) const { return variables_.at(i); }
  std::size_t size() const { return variables_.size(); }
  const std::string& x0_label() const { return x0_label_; }
  const std::string& x1_label() const { return x1_label_; }

  /// Binary code of the comparison group x1.
  int x1_code() const { return x1_label_ == "1" ? 1 : 0; }

  std::optional<std::size_t> find(const std::string& name) const {
    for (std::size_t i = 0; i < variables_.size(); ++i)
      if (variables_[i].name == name) return i;
    return std::nullopt;
  }

  std::size_t index_of(const std::string& name) const {
    auto i = find(name);
    if (!i) throw Error(ErrorCode::UnknownDimension, "no variable named '" + name + "'");
    return *i;
  }

  std::vector<std::size_t> indices(Role role) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < variables_.size(); ++i)
      if (variables_[i].role == role) out.push_back(i);
    return out;
  }

  std::size_t protected_index() const { return indices(Role::Protected).front(); }
  std::size_t outcome_index() const { return indices(Role::Outcome).front(); }

 private:
  void check() const {
    std::set<std::string> names;
    int n_protected = 0, n_outcome = 0;
    for (const auto& v : variables_) {
      if (v.name.empty()) throw Error(ErrorCode::InvalidSchema, "empty variable name");
      if (!names.insert(v.name).second)
        throw Error(ErrorCode::InvalidSchema, "duplicate variable '" + v.name + "'");
      if (v.kind == Kind::Categorical) {
        std::set<std::string> lv(v.levels.begin(), v.levels.end());
        if (lv.size() < 2 || lv.size() != v.levels.size())
          throw Error(ErrorCode::InvalidSchema,
                      "categorical '" + v.name + "' needs >=2 distinct levels");
        if (!lv.count(v.reference))
          throw Error(ErrorCode::InvalidSchema,
                      "reference '" + v.reference + "' not a level of '" + v.name + "'");
      }
      if (v.role == Role::Protected) {
        ++n_protected;
        if (v.kind != Kind::Binary)
          throw Error(ErrorCode::InvalidSchema, "protected attribute must be binary");
      }
      if (v.role == Role::Outcome) {
        ++n_outcome;
        if (v.kind != Kind::Continuous)
          throw Error(ErrorCode::InvalidSchema, "outcome must be continuous");
      }
    }
    if (n_protected != 1)
      throw Error(ErrorCode::InvalidSchema, "exactly one protected attribute required");
    if (n_outcome != 1) throw Error(ErrorCode::InvalidSchema, "exactly one outcome required");
    auto ok = [](const std::string& s) { return s == "0" || s == "1"; };
    if (!ok(x0_label_) || !ok(x1_label_) || x0_label_ == x1_label_)
      throw Error(ErrorCode::InvalidSchema, "x0/x1 labels must be the distinct codes 0 and 1");
  }

  std::vector<VariableSpec> variables_;
  std::string x0_label_ = "0";
  std::string x1_label_ = "1";
};

/// One column of values. Discrete variables store their code (binary 0/1,
/// categorical level index); a categorical label outside the declared levels
/// is stored as -1 with the raw text kept for diagnostics.
struct Column {
  std::vector<double> values;
  std::vector<std::uint8_t> missing;
  std::map<std::size_t, std::string> undeclared;
};

struct Violation {
  std::string variable;
  long row = -1;  // -1 for column-level problems
  std::string rule;

  bool operator==(const Violation&) const = default;
};

class Dataset {
 public:
  Dataset() = default;
  Dataset(SfmSchema schema, std::size_t n) : schema_(std::move(schema)), n_(n) {
    columns_.resize(schema_.size());
    for (auto& c : columns_) {
      c.values.assign(n, 0.0);
      c.missing.assign(n, 0);
    }
  }
  Dataset(SfmSchema schema, std::vector<Column> columns)
      : schema_(std::move(schema)), columns_(std::move(columns)) {
    n_ = columns_.empty() ? 0 : columns_.front().values.size();
  }

  const SfmSchema& schema() const { return schema_; }
  std::size_t n() const { return n_; }
  const std::vector<Column>& columns() const { return columns_; }
  const Column& column(std::size_t j) const { return columns_.at(j); }
  Column& column(std::size_t j) { return columns_.at(j); }
  const Column& column(const std::string& name) const { return columns_.at(schema_.index_of(name)); }

  double value(std::size_t row, std::size_t j) const { return columns_[j].values[row]; }
  bool is_missing(std::size_t row, std::size_t j) const { return columns_[j].missing[row] != 0; }

  void set(std::size_t row, std::size_t j, double v) {
    columns_[j].values[row] = v;
    columns_[j].missing[row] = 0;
  }
  void set_missing(std::size_t row, std::size_t j) {
    columns_[j].values[row] = 0.0;
    columns_[j].missing[row] = 1;
  }

  bool complete() const {
    for (const auto& c : columns_)
      if (std::any_of(c.missing.begin(), c.missing.end(), [](auto m) { return m != 0; }))
        return false;
    return true;
  }

  /// 1 when row belongs to the comparison group x1.
  int group(std::size_t row) const {
    return static_cast<int>(value(row, schema_.protected_index())) == schema_.x1_code() ? 1 : 0;
  }

  double outcome(std::size_t row) const { return value(row, schema_.outcome_index()); }

  Dataset subset(const std::vector<std::size_t>& rows) const {
    std::vector<Column> cols(columns_.size());
    for (std::size_t j = 0; j < columns_.size(); ++j) {
      cols[j].values.reserve(rows.size());
      cols[j].missing.reserve(rows.size());
      for (std::size_t k = 0; k < rows.size(); ++k) {
        std::size_t r = rows[k];
        cols[j].values.push_back(columns_[j].values[r]);
        cols[j].missing.push_back(columns_[j].missing[r]);
        if (auto it = columns_[j].undeclared.find(r); it != columns_[j].undeclared.end())
          cols[j].undeclared[k] = it->second;
      }
    }
    Dataset out(schema_, std::move(cols));
    out.n_ = rows.size();
    return out;
  }

  bool operator==(const Dataset& o) const {
    if (n_ != o.n_ || columns_.size() != o.columns_.size()) return false;
    for (std::size_t j = 0; j < columns_.size(); ++j)
      if (columns_[j].values != o.columns_[j].values ||
          columns_[j].missing != o.columns_[j].missing)
        return false;
    return true;
  }

 private:
  SfmSchema schema_;
  std::size_t n_ = 0;
  std::vector<Column> columns_;
};

inline std::vector<Violation> validate(const Dataset& data) {
  std::vector<Violation> out;
  const auto& schema = data.schema();
  if (data.columns().size() != schema.size())
    out.push_back({"", -1, "column count does not match schema"});
  for (std::size_t j = 0; j < std::min(schema.size(), data.columns().size()); ++j) {
    const auto& spec = schema.variable(j);
    const auto& col = data.column(j);
    if (col.values.size() != data.n() || col.missing.size() != data.n()) {
      out.push_back({spec.name, -1, "column length differs from n"});
      continue;
    }
    for (std::size_t i = 0; i < data.n(); ++i) {
      if (col.missing[i]) continue;
      double v = col.values[i];
      switch (spec.kind) {
        case Kind::Binary:
          if (v != 0.0 && v != 1.0)
            out.push_back({spec.name, static_cast<long>(i),
                           "binary value must be 0 or 1 (got " + std::to_string(v) + ")"});
          break;
        case Kind::Categorical: {
          bool ok = v >= 0 && v < static_cast<double>(spec.levels.size()) && v == std::floor(v);
          if (!ok) {
            auto it = col.undeclared.find(i);
            std::string raw = it != col.undeclared.end() ? it->second : std::to_string(v);
            out.push_back({spec.name, static_cast<long>(i),
                           "value '" + raw + "' is not a declared level"});
          }
          break;
        }
        case Kind::Continuous:
          if (!std::isfinite(v))
            out.push_back({spec.name, static_cast<long>(i), "continuous value not finite"});
          break;
      }
    }
  }
  return out;
}

/// Dummy-coded design matrices for one role block.
struct DesignBlock {
  Eigen::MatrixXd values;
  std::vector<std::string> names;
  std::vector<std::size_t> source;  // schema index each column came from
};

struct DesignMatrices {
  Eigen::VectorXd x;  // 1 for group x1
  DesignBlock z;
  DesignBlock w;
  Eigen::VectorXd y;
};

namespace detail {

inline DesignBlock encode_role(const Dataset& data, Role role) {
  const auto& schema = data.schema();
  DesignBlock block;
  for (std::size_t j : schema.indices(role)) {
    const auto& spec = schema.variable(j);
    if (spec.kind == Kind::Categorical) {
      for (std::size_t l = 0; l < spec.levels.size(); ++l) {
        if (static_cast<int>(l) == spec.reference_code()) continue;
        block.names.push_back(spec.name + "=" + spec.levels[l]);
        block.source.push_back(j);
      }
    } else {
      block.names.push_back(spec.name);
      block.source.push_back(j);
    }
  }
  block.values.resize(static_cast<Eigen::Index>(data.n()),
                      static_cast<Eigen::Index>(block.names.size()));
  Eigen::Index c = 0;
  for (std::size_t j : schema.indices(role)) {
    const auto& spec = schema.variable(j);
    const auto& vals = data.column(j).values;
    if (spec.kind == Kind::Categorical) {
      int ref = spec.reference_code();
      for (int l = 0; l < static_cast<int>(spec.levels.size()); ++l) {
        if (l == ref) continue;
        for (std::size_t i = 0; i < data.n(); ++i)
          block.values(static_cast<Eigen::Index>(i), c) = static_cast<int>(vals[i]) == l ? 1.0 : 0.0;
        ++c;
      }
    } else {
      for (std::size_t i = 0; i < data.n(); ++i)
        block.values(static_cast<Eigen::Index>(i), c) = vals[i];
      ++c;
    }
  }
  return block;
}

}  // namespace detail

inline DesignMatrices encode(const Dataset& data) {
  if (!data.complete())
    throw Error(ErrorCode::MissingData,
                "dataset has missing cells; impute (--impute simple) or drop rows first");
  DesignMatrices m;
  auto n = static_cast<Eigen::Index>(data.n());
  m.x.resize(n);
  m.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    m.x(i) = data.group(static_cast<std::size_t>(i));
    m.y(i) = data.outcome(static_cast<std::size_t>(i));
  }
  m.z = detail::encode_role(data, Role::Confounder);
  m.w = detail::encode_role(data, Role::Mediator);
  return m;
}

/// Mean (continuous) or mode (discrete, ties to the earliest declared level)
/// imputation. Returns a new dataset.
inline Dataset simple_impute(const Dataset& data) {
  Dataset out = data;
  const auto& schema = data.schema();
  for (std::size_t j = 0; j < schema.size(); ++j) {
    const auto& spec = schema.variable(j);
    const auto& col = data.column(j);
    std::size_t observed = 0;
    double fill = 0.0;
    if (spec.kind == Kind::Continuous) {
      double sum = 0.0;
      for (std::size_t i = 0; i < data.n(); ++i)
        if (!col.missing[i]) sum += col.values[i], ++observed;
      if (observed) fill = sum / static_cast<double>(observed);
    } else {
      std::vector<std::size_t> counts(static_cast<std::size_t>(spec.cardinality()), 0);
      for (std::size_t i = 0; i < data.n(); ++i) {
        if (col.missing[i]) continue;
        ++observed;
        auto c = static_cast<long>(col.values[i]);
        if (c >= 0 && c < static_cast<long>(counts.size())) ++counts[static_cast<std::size_t>(c)];
      }
      fill = static_cast<double>(std::max_element(counts.begin(), counts.end()) - counts.begin());
    }
    if (observed == 0 && data.n() > 0)
      throw Error(ErrorCode::AllMissingColumn, "column '" + spec.name + "' has no observed value");
    for (std::size_t i = 0; i < data.n(); ++i)
      if (col.missing[i]) out.set(i, j, fill);
  }
  return out;
}

struct FoldAssignment {
  int k = 0;
  std::uint64_t seed = 0;
  std::vector<int> fold_of;

  std::vector<std::size_t> rows_in(int fold) const {
    std::vector<std::size_t> r;
    for (std::size_t i = 0; i < fold_of.size(); ++i)
      if (fold_of[i] == fold) r.push_back(i);
    return r;
  }
  std::vector<std::size_t> rows_not_in(int fold) const {
    std::vector<std::size_t> r;
    for (std::size_t i = 0; i < fold_of.size(); ++i)
      if (fold_of[i] != fold) r.push_back(i);
    return r;
  }
};

/// Random permutation dealt round-robin into k folds.
inline FoldAssignment assign_folds(std::size_t n, int k, std::uint64_t seed) {
  if (k < 2 || static_cast<std::size_t>(k) > n)
    throw Error(ErrorCode::BadFoldCount,
                "fold count " + std::to_string(k) + " outside [2, " + std::to_string(n) + "]");
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(seed, 0xf01d);
  for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
  FoldAssignment f{k, seed, std::vector<int>(n)};
  for (std::size_t i = 0; i < n; ++i) f.fold_of[perm[i]] = static_cast<int>(i % static_cast<std::size_t>(k));
  return f;
}

}  // namespace cfa
