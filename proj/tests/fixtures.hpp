#pragma once

// SCMs and constructed datasets shared by the unit tests and the acceptance
// gate.

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cfa/rng.hpp"
#include "cfa/sfm.hpp"
#include "cfa/synth.hpp"

namespace fixtures {

using namespace cfa;

/// tau(z) = beta everywhere: no x*z terms and no X -> W effect.
inline ScmSpec constant_effect(double beta = 1.0) {
  ScmSpec s;
  s.name = "constant-effect";
  s.seed = 11;
  ConfounderSpec z1{"z1", Kind::Binary, {}, {0.5, 0.5}};
  ConfounderSpec ses{"ses", Kind::Categorical, {"Q1", "Q2", "Q3"}, {0.3, 0.4, 0.3}};
  ConfounderSpec zc{"zc", Kind::Continuous, {}, {}, 0.0, 1.0};
  s.confounders = {z1, ses, zc};
  s.x_intercept = -0.3;
  s.x_z = {0.5, -0.3, 0.4, 0.3};
  s.mediators = {{"w1", 0.0, 0.0, {0.2, 0.1, -0.2, 0.3}, {}}};
  s.y = {0.0, beta, {0.5}, {0.4, -0.3, 0.6, 0.8}, {0, 0, 0, 0}, 1.0};
  return s;
}

/// tau(z) = -0.5 + z1, so the oracle gap between z1 = 1 and z1 = 0 is 1.0.
inline ScmSpec heterogeneous() {
  ScmSpec s = constant_effect(-0.5);
  s.name = "heterogeneous";
  s.y.xz = {1.0, 0, 0, 0};
  return s;
}

inline ScmSpec zero_effect() {
  ScmSpec s = constant_effect(0.0);
  s.name = "zero-effect";
  return s;
}

/// Two strata (about 4% mass each) where X is nearly deterministic.
inline ScmSpec adversarial() {
  ScmSpec s;
  s.name = "adversarial";
  s.seed = 5;
  ConfounderSpec g{"grp", Kind::Categorical, {"g0", "g1", "g2", "g3", "g4", "g5"},
                   {0.30, 0.30, 0.20, 0.12, 0.04, 0.04}};
  s.confounders = {g};
  const double l0 = std::log(0.3 / 0.7);
  auto logit = [](double p) { return std::log(p / (1 - p)); };
  s.x_intercept = l0;
  s.x_z = {logit(0.5) - l0, logit(0.6) - l0, logit(0.4) - l0, logit(0.0005) - l0, logit(0.9995) - l0};
  s.mediators = {{"w1", -0.2, 0.7, {0.1, 0.2, -0.1, 0.3, 0.0}, {}}};
  s.y = {0.0, -0.4, {0.6}, {0.2, -0.3, 0.4, 0.1, -0.2}, {0, 0, 0, 0, 0}, 1.0};
  return s;
}

/// Desk-1 with X randomized at 0.5 and no X -> W channel.
inline ScmSpec randomized_no_mediation() {
  ScmSpec s = desk_1();
  s.name = "randomized";
  s.x_intercept = 0.0;
  std::fill(s.x_z.begin(), s.x_z.end(), 0.0);
  for (auto& m : s.mediators) m.x = 0.0;
  return s;
}

struct Table1Row {
  std::string name;
  double p0, p1, smd;  // printed shares (as fractions) and printed SMD
  bool mediator = false;
};

struct Table1Column {
  double mean0, sd0, mean1, sd1, smd_cont;  // 9th-grade science identity row
  std::vector<Table1Row> rows;
};

inline Table1Column table1_science_identity() {
  return {0.127, 0.99, 0.067, 1.09, -0.058,
          {{"White", .574, .659, .178},          {"AI/AN/Pacific Isl.", .011, .011, .001},
           {"Asian", .082, .019, -.287},         {"Black", .092, .089, -.010},
           {"Hispanic/Latino", .158, .107, -.151}, {"Multiracial", .083, .113, .100},
           {"Male", .476, .692, .448},           {"Female", .524, .308, -.448},
           {"SES Q1", .154, .168, .037},         {"SES Q2", .160, .184, .063},
           {"SES Q3", .169, .189, .053},         {"SES Q4", .195, .179, -.039},
           {"SES Q5", .321, .278, -.093},        {"Don't know", .194, .267, .177},
           {"High School", .093, .164, .215},    {"Associate's", .054, .084, .116},
           {"Bachelor's", .179, .163, -.043},    {"Master's", .234, .172, -.153},
           {"PhD/Professional", .246, .148, -.247}, {"Science Club", .072, .046, -.109, true},
           {"Taking Algebra II", .389, .445, .114, true}, {"Taking Geometry", .130, .250, .309, true},
           {"Taking Pre-calculus", .268, .105, -.427, true}}};
}

inline Table1Column table1_stem_gpa() {
  return {0.112, 0.99, 0.080, 1.09, -0.031,
          {{"White", .568, .650, .171},          {"AI/AN/Pacific Isl.", .011, .014, .026},
           {"Asian", .081, .020, -.280},         {"Black", .094, .093, -.002},
           {"Hispanic/Latino", .162, .109, -.154}, {"Multiracial", .084, .112, .093},
           {"Male", .477, .703, .472},           {"Female", .523, .297, -.472},
           {"SES Q1", .165, .192, .070},         {"SES Q2", .159, .196, .099},
           {"SES Q3", .171, .178, .018},         {"SES Q4", .192, .173, -.049},
           {"SES Q5", .313, .260, -.116},        {"Don't know", .195, .274, .188},
           {"High School", .098, .176, .229},    {"Associate's", .055, .082, .107},
           {"Bachelor's", .178, .156, -.060},    {"Master's", .232, .163, -.173},
           {"PhD/Professional", .242, .148, -.238}, {"Science Club", .072, .045, -.113, true},
           {"Taking Algebra II", .398, .429, .064, true}, {"Taking Geometry", .134, .269, .341, true},
           {"Taking Pre-calculus", .254, .095, -.429, true}}};
}

/// Two-group dataset whose summaries equal the printed ones exactly. Group
/// sizes are multiples of 1000 so every printed share is an integer count;
/// each printed row becomes its own indicator column because the printed
/// race shares do not sum to exactly 100%.
inline Dataset table1_dataset(const Table1Column& col, std::size_t n0 = 12000, std::size_t n1 = 1000) {
  std::vector<VariableSpec> vars{VariableSpec::binary("adhd", Role::Protected),
                                 VariableSpec::continuous("science_identity_9", Role::Confounder)};
  for (const auto& r : col.rows) vars.push_back(VariableSpec::binary(r.name, r.mediator ? Role::Mediator : Role::Confounder));
  vars.push_back(VariableSpec::continuous("y", Role::Outcome));
  SfmSchema schema(std::move(vars));
  const std::size_t n = n0 + n1;
  Dataset d(schema, n);
  for (std::size_t i = 0; i < n; ++i) {
    const bool g1 = i >= n0;
    const std::size_t k = g1 ? i - n0 : i, ng = g1 ? n1 : n0;
    d.set(i, 0, g1 ? 1.0 : 0.0);
    // half at m + a, half at m - a gives mean m and sample sd exactly sd
    const double m = g1 ? col.mean1 : col.mean0, sd = g1 ? col.sd1 : col.sd0;
    const double a = sd * std::sqrt((static_cast<double>(ng) - 1) / static_cast<double>(ng));
    d.set(i, 1, k % 2 == 0 ? m + a : m - a);
    for (std::size_t r = 0; r < col.rows.size(); ++r) {
      const double p = g1 ? col.rows[r].p1 : col.rows[r].p0;
      const auto ones = static_cast<std::size_t>(std::llround(p * static_cast<double>(ng)));
      d.set(i, r + 2, k < ones ? 1.0 : 0.0);
    }
    d.set(i, col.rows.size() + 2, 0.0);
  }
  return d;
}

struct RegressionCase {
  Eigen::MatrixXd covariates;
  Eigen::VectorXd d, y;
};

/// y = beta d + e with e orthogonal to [1, d, covariates] and scaled so the
/// OLS t-statistic of d is exactly `t` at residual dof `dof`.
inline RegressionCase exact_t_case(double t, int dof, int k = 2, std::uint64_t seed = 1) {
  const Eigen::Index n = dof + k + 2;
  Rng rng(seed, 0x7e57);
  RegressionCase c{Eigen::MatrixXd(n, k), Eigen::VectorXd(n), Eigen::VectorXd(n)};
  Eigen::VectorXd e(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) c.covariates(i, j) = rng.normal();
    c.d(i) = (rng.uniform() < 0.4 ? 1.0 : 0.0) + 0.3 * c.covariates(i, 0);
    e(i) = rng.normal();
  }
  Eigen::MatrixXd full(n, k + 2), base(n, k + 1);
  full << Eigen::VectorXd::Ones(n), c.d, c.covariates;
  base << Eigen::VectorXd::Ones(n), c.covariates;
  e -= full * full.colPivHouseholderQr().solve(e);
  Eigen::VectorXd dres = c.d - base * base.colPivHouseholderQr().solve(c.d);
  const double beta = 0.5;
  e *= beta * dres.norm() * std::sqrt(static_cast<double>(dof)) / (t * e.norm());
  c.y = beta * c.d + 0.7 * c.covariates.col(1) + e;
  return c;
}

}  // namespace fixtures
