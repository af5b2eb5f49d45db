#pragma once

#include <string>
#include <vector>

#include "cfa/error.hpp"
#include "cfa/sfm.hpp"

namespace cfa {

/// Mixed-radix stratum ids over the discrete confounders and mediators of a
/// dataset (last variable fastest).
struct StrataIndex {
  std::vector<std::size_t> z_id;
  std::vector<std::size_t> w_id;
  std::size_t n_z = 1;
  std::size_t n_w = 1;
  std::vector<std::size_t> z_vars, w_vars;
  SfmSchema schema;

  std::string z_label(std::size_t id) const { return label(z_vars, id); }
  std::string w_label(std::size_t id) const { return label(w_vars, id); }

 private:
  std::string label(const std::vector<std::size_t>& vars, std::size_t id) const {
    std::vector<std::string> parts(vars.size());
    for (std::size_t k = vars.size(); k-- > 0;) {
      const auto& v = schema.variable(vars[k]);
      auto card = static_cast<std::size_t>(v.cardinality());
      parts[k] = v.name + "=" + v.label(static_cast<int>(id % card));
      id /= card;
    }
    std::string out = "(";
    for (std::size_t k = 0; k < parts.size(); ++k) out += (k ? "," : "") + parts[k];
    return out + ")";
  }
};

inline StrataIndex build_strata(const Dataset& data) {
  const auto& schema = data.schema();
  StrataIndex s;
  s.schema = data.schema();
  s.z_vars = schema.indices(Role::Confounder);
  s.w_vars = schema.indices(Role::Mediator);
  for (auto j : s.z_vars)
    if (!schema.variable(j).is_discrete())
      throw Error(ErrorCode::InvalidData,
                  "stratified estimation needs discrete confounders; '" + schema.variable(j).name +
                      "' is continuous");
  for (auto j : s.w_vars)
    if (schema.variable(j).kind != Kind::Binary)
      throw Error(ErrorCode::InvalidData,
                  "stratified estimation needs binary mediators; '" + schema.variable(j).name +
                      "' is not");
  for (auto j : s.z_vars) s.n_z *= static_cast<std::size_t>(schema.variable(j).cardinality());
  s.n_w = std::size_t{1} << s.w_vars.size();
  s.z_id.assign(data.n(), 0);
  s.w_id.assign(data.n(), 0);
  for (std::size_t i = 0; i < data.n(); ++i) {
    std::size_t z = 0, w = 0;
    for (auto j : s.z_vars)
      z = z * static_cast<std::size_t>(schema.variable(j).cardinality()) +
          static_cast<std::size_t>(data.value(i, j));
    for (auto j : s.w_vars) w = w * 2 + static_cast<std::size_t>(data.value(i, j));
    s.z_id[i] = z;
    s.w_id[i] = w;
  }
  return s;
}

}  // namespace cfa
