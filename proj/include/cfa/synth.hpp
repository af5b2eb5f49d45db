#pragma once

// Parametric structural causal models over the SFM graph Z -> X -> W -> Y,
// with exact (enumeration) and Monte-Carlo ground truth for every causal
// quantity the estimators target.

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cfa/error.hpp"
#include "cfa/io.hpp"
#include "cfa/logistic.hpp"
#include "cfa/parallel.hpp"
#include "cfa/rng.hpp"
#include "cfa/sfm.hpp"

namespace cfa {

struct ConfounderSpec {
  std::string name;
  Kind kind = Kind::Binary;
  std::vector<std::string> levels;  // categorical; levels[0] is the reference
  std::vector<double> probs;        // discrete marginals (independent mode)
  double mean = 0.0;                // continuous ~ N(mean, sd)
  double sd = 1.0;

  int cardinality() const { return kind == Kind::Binary ? 2 : static_cast<int>(levels.size()); }
};

struct MediatorSpec {
  std::string name;
  double intercept = 0.0;
  double x = 0.0;
  std::vector<double> z;  // over z features
  std::vector<double> w;  // over earlier mediators in chain order
};

struct OutcomeSpec {
  double intercept = 0.0;
  double x = 0.0;
  std::vector<double> w;
  std::vector<double> z;
  std::vector<double> xz;  // x * z-feature interactions
  double sigma = 1.0;
};

struct ScmSpec {
  std::string name;
  std::uint64_t seed = 1;
  std::string x_name = "x";
  std::string y_name = "y";
  std::vector<ConfounderSpec> confounders;
  /// Joint table over discrete strata (mixed radix, last confounder fastest).
  /// When absent, confounders are drawn independently.
  std::optional<std::vector<double>> z_table;
  double x_intercept = 0.0;
  std::vector<double> x_z;
  std::vector<MediatorSpec> mediators;  // chain order
  OutcomeSpec y;

  std::vector<std::string> z_feature_names() const {
    std::vector<std::string> out;
    for (const auto& c : confounders) {
      if (c.kind == Kind::Categorical)
        for (std::size_t l = 1; l < c.levels.size(); ++l) out.push_back(c.name + "=" + c.levels[l]);
      else
        out.push_back(c.name);
    }
    return out;
  }

  std::size_t n_z_features() const { return z_feature_names().size(); }

  bool enumerable() const {
    for (const auto& c : confounders)
      if (c.kind == Kind::Continuous) return false;
    return true;
  }

  /// Raw confounder values (codes or continuous values) -> encoded features.
  std::vector<double> z_features(const std::vector<double>& zraw) const {
    if (zraw.size() != confounders.size())
      throw Error(ErrorCode::UnknownStratum, "confounder vector has wrong length");
    std::vector<double> f;
    for (std::size_t j = 0; j < confounders.size(); ++j) {
      const auto& c = confounders[j];
      double v = zraw[j];
      if (c.kind == Kind::Continuous) {
        if (!std::isfinite(v)) throw Error(ErrorCode::UnknownStratum, "non-finite confounder");
        f.push_back(v);
        continue;
      }
      if (v != std::floor(v) || v < 0 || v >= c.cardinality())
        throw Error(ErrorCode::UnknownStratum,
                    "value " + std::to_string(v) + " outside support of '" + c.name + "'");
      if (c.kind == Kind::Binary) {
        f.push_back(v);
      } else {
        for (int l = 1; l < c.cardinality(); ++l) f.push_back(static_cast<int>(v) == l ? 1.0 : 0.0);
      }
    }
    return f;
  }

  double p_x1(const std::vector<double>& zf) const {
    double t = x_intercept;
    for (std::size_t k = 0; k < zf.size(); ++k) t += x_z[k] * zf[k];
    return sigmoid(t);
  }

  /// P(W_j = 1 | x, z, w_1..w_{j-1}).
  double p_w(std::size_t j, int x, const std::vector<double>& zf, const std::vector<int>& w) const {
    const auto& m = mediators[j];
    double t = m.intercept + m.x * x;
    for (std::size_t k = 0; k < zf.size(); ++k) t += m.z[k] * zf[k];
    for (std::size_t k = 0; k < j; ++k) t += m.w[k] * w[k];
    return sigmoid(t);
  }

  /// P(W = w | x, z) for a full binary mediator pattern.
  double p_w_joint(int x, const std::vector<double>& zf, const std::vector<int>& w) const {
    double p = 1.0;
    for (std::size_t j = 0; j < mediators.size(); ++j) {
      double pj = p_w(j, x, zf, w);
      p *= w[j] ? pj : 1.0 - pj;
    }
    return p;
  }

  /// E[Y | x, w, z].
  double mu(int x, const std::vector<int>& w, const std::vector<double>& zf) const {
    double t = y.intercept + y.x * x;
    for (std::size_t k = 0; k < w.size(); ++k) t += y.w[k] * w[k];
    for (std::size_t k = 0; k < zf.size(); ++k) t += (y.z[k] + x * y.xz[k]) * zf[k];
    return t;
  }

  SfmSchema schema() const {
    std::vector<VariableSpec> vars;
    vars.push_back(VariableSpec::binary(x_name, Role::Protected));
    for (const auto& c : confounders) {
      if (c.kind == Kind::Categorical)
        vars.push_back(VariableSpec::categorical(c.name, Role::Confounder, c.levels, c.levels.front()));
      else if (c.kind == Kind::Binary)
        vars.push_back(VariableSpec::binary(c.name, Role::Confounder));
      else
        vars.push_back(VariableSpec::continuous(c.name, Role::Confounder));
    }
    for (const auto& m : mediators) vars.push_back(VariableSpec::binary(m.name, Role::Mediator));
    vars.push_back(VariableSpec::continuous(y_name, Role::Outcome));
    return SfmSchema(std::move(vars));
  }

  std::size_t n_strata() const {
    std::size_t s = 1;
    for (const auto& c : confounders) s *= static_cast<std::size_t>(c.cardinality());
    return s;
  }

  /// Decodes a stratum index into raw confounder codes.
  std::vector<double> stratum_codes(std::size_t s) const {
    std::vector<double> codes(confounders.size());
    for (std::size_t j = confounders.size(); j-- > 0;) {
      auto card = static_cast<std::size_t>(confounders[j].cardinality());
      codes[j] = static_cast<double>(s % card);
      s /= card;
    }
    return codes;
  }

  double stratum_prob(std::size_t s) const {
    if (z_table) return (*z_table)[s];
    auto codes = stratum_codes(s);
    double p = 1.0;
    for (std::size_t j = 0; j < confounders.size(); ++j)
      p *= confounders[j].probs[static_cast<std::size_t>(codes[j])];
    return p;
  }

  void check() const {
    auto nz = n_z_features();
    auto fail = [](const std::string& m) { throw Error(ErrorCode::BadConfig, "scm: " + m); };
    for (const auto& c : confounders) {
      if (c.kind == Kind::Categorical && c.levels.size() < 2) fail(c.name + " needs >=2 levels");
      if (c.kind != Kind::Continuous && !z_table) {
        if (c.probs.size() != static_cast<std::size_t>(c.cardinality())) fail(c.name + " probs size");
        double s = 0;
        for (double p : c.probs) {
          if (p < 0) fail(c.name + " negative probability");
          s += p;
        }
        if (std::abs(s - 1.0) > 1e-9) fail(c.name + " probs must sum to 1");
      }
      if (c.kind == Kind::Continuous && !(c.sd >= 0)) fail(c.name + " sd < 0");
    }
    if (z_table) {
      if (!enumerable()) fail("z_table requires discrete confounders");
      if (z_table->size() != n_strata()) fail("z_table size mismatch");
      double s = 0;
      for (double p : *z_table) {
        if (p < 0) fail("negative z_table entry");
        s += p;
      }
      if (std::abs(s - 1.0) > 1e-9) fail("z_table must sum to 1");
    }
    if (x_z.size() != nz) fail("x_model coefficient count");
    for (std::size_t j = 0; j < mediators.size(); ++j) {
      if (mediators[j].z.size() != nz) fail(mediators[j].name + " z coefficient count");
      if (mediators[j].w.size() != j) fail(mediators[j].name + " needs one coefficient per earlier mediator");
    }
    if (y.w.size() != mediators.size() || y.z.size() != nz || y.xz.size() != nz)
      fail("y_model coefficient count");
    if (!(y.sigma >= 0)) fail("sigma < 0");
  }
};

/// Draws one row's confounders. Returns raw codes/values.
inline std::vector<double> draw_confounders(const ScmSpec& spec, Rng& rng) {
  std::vector<double> z(spec.confounders.size());
  if (spec.z_table) {
    double u = rng.uniform(), acc = 0.0;
    std::size_t s = 0, last = spec.z_table->size() - 1;
    for (; s < last; ++s) {
      acc += (*spec.z_table)[s];
      if (u < acc) break;
    }
    return spec.stratum_codes(s);
  }
  for (std::size_t j = 0; j < spec.confounders.size(); ++j) {
    const auto& c = spec.confounders[j];
    if (c.kind == Kind::Continuous) {
      z[j] = c.mean + c.sd * rng.normal();
      continue;
    }
    double u = rng.uniform(), acc = 0.0;
    int code = 0, last = c.cardinality() - 1;
    for (; code < last; ++code) {
      acc += c.probs[static_cast<std::size_t>(code)];
      if (u < acc) break;
    }
    z[j] = code;
  }
  return z;
}

/// n i.i.d. rows in topological order. Row i uses its own substream, so the
/// output depends only on (spec, n, seed).
inline Dataset sample(const ScmSpec& spec, std::size_t n, int threads = 1) {
  spec.check();
  SfmSchema schema = spec.schema();
  Dataset data(schema, n);
  const std::size_t nz = spec.confounders.size(), nw = spec.mediators.size();
  const std::size_t ycol = schema.outcome_index();
  parallel_for(n, threads, [&](std::size_t i) {
    Rng rng(spec.seed, i);
    auto zraw = draw_confounders(spec, rng);
    auto zf = spec.z_features(zraw);
    int x = rng.uniform() < spec.p_x1(zf) ? 1 : 0;
    std::vector<int> w(nw, 0);
    for (std::size_t j = 0; j < nw; ++j) w[j] = rng.uniform() < spec.p_w(j, x, zf, w) ? 1 : 0;
    double yv = spec.mu(x, w, zf) + spec.y.sigma * rng.normal();
    data.set(i, 0, x);
    for (std::size_t j = 0; j < nz; ++j) data.set(i, 1 + j, zraw[j]);
    for (std::size_t j = 0; j < nw; ++j) data.set(i, 1 + nz + j, w[j]);
    data.set(i, ycol, yv);
  });
  return data;
}

inline std::vector<int> mediator_pattern(std::size_t index, std::size_t m) {
  std::vector<int> w(m);
  for (std::size_t j = 0; j < m; ++j) w[j] = static_cast<int>((index >> j) & 1U);
  return w;
}

/// τ(z): z-conditional total effect, mediators flowing.
inline double oracle_cate(const ScmSpec& spec, const std::vector<double>& zraw) {
  auto zf = spec.z_features(zraw);
  const std::size_t m = spec.mediators.size();
  double t = 0.0;
  for (std::size_t p = 0; p < (std::size_t{1} << m); ++p) {
    auto w = mediator_pattern(p, m);
    t += spec.mu(1, w, zf) * spec.p_w_joint(1, zf, w) - spec.mu(0, w, zf) * spec.p_w_joint(0, zf, w);
  }
  return t;
}

/// ctf-DE(z): mediators held at their x0 distribution in both arms.
inline double oracle_ctf_de(const ScmSpec& spec, const std::vector<double>& zraw) {
  auto zf = spec.z_features(zraw);
  const std::size_t m = spec.mediators.size();
  double t = 0.0;
  for (std::size_t p = 0; p < (std::size_t{1} << m); ++p) {
    auto w = mediator_pattern(p, m);
    t += (spec.mu(1, w, zf) - spec.mu(0, w, zf)) * spec.p_w_joint(0, zf, w);
  }
  return t;
}

enum class OracleMethod { Exact, MonteCarlo };

struct StratumTruth {
  std::vector<double> codes;
  std::vector<std::string> labels;
  double p_z = 0, p_z_given_x0 = 0, p_z_given_x1 = 0;
  double tau = 0, ctf_de = 0;
};

struct GroundTruth {
  double tv = 0, x_de = 0, x_ie = 0, x_se = 0;
  double p_x1 = 0;
  double outcome_sd = 0;
  OracleMethod method = OracleMethod::Exact;
  std::size_t mc_reps = 0;
  std::array<double, 4> mc_se{};  // tv, x_de, x_ie, x_se
  std::vector<StratumTruth> strata;  // empty for non-enumerable specs
};

namespace detail {

inline std::vector<StratumTruth> strata_truth(const ScmSpec& spec) {
  std::vector<StratumTruth> out;
  if (!spec.enumerable()) return out;
  double px1 = 0.0;
  for (std::size_t s = 0; s < spec.n_strata(); ++s) {
    StratumTruth st;
    st.codes = spec.stratum_codes(s);
    for (std::size_t j = 0; j < st.codes.size(); ++j) {
      const auto& c = spec.confounders[j];
      int code = static_cast<int>(st.codes[j]);
      st.labels.push_back(c.kind == Kind::Categorical ? c.levels[static_cast<std::size_t>(code)]
                                                      : std::to_string(code));
    }
    auto zf = spec.z_features(st.codes);
    st.p_z = spec.stratum_prob(s);
    px1 += st.p_z * spec.p_x1(zf);
    st.tau = oracle_cate(spec, st.codes);
    st.ctf_de = oracle_ctf_de(spec, st.codes);
    out.push_back(std::move(st));
  }
  for (auto& st : out) {
    double e = spec.p_x1(spec.z_features(st.codes));
    st.p_z_given_x1 = st.p_z * e / px1;
    st.p_z_given_x0 = st.p_z * (1.0 - e) / (1.0 - px1);
  }
  return out;
}

inline GroundTruth exact_truth(const ScmSpec& spec) {
  GroundTruth gt;
  gt.method = OracleMethod::Exact;
  gt.strata = strata_truth(spec);
  const std::size_t m = spec.mediators.size();
  double px1 = 0.0;
  for (std::size_t s = 0; s < gt.strata.size(); ++s)
    px1 += gt.strata[s].p_z * spec.p_x1(spec.z_features(gt.strata[s].codes));
  gt.p_x1 = px1;

  // E[Y|x1], E[Y|x0], E[Y_{x1,W_x0}|x0], E[Y_{x1}|x0], plus E[Y], E[Y^2].
  double ey1 = 0, ey0 = 0, nested = 0, ey_x1_given_x0 = 0, ey = 0, ey2 = 0;
  for (const auto& st : gt.strata) {
    auto zf = spec.z_features(st.codes);
    double e = spec.p_x1(zf);
    for (std::size_t p = 0; p < (std::size_t{1} << m); ++p) {
      auto w = mediator_pattern(p, m);
      double mu1 = spec.mu(1, w, zf), mu0 = spec.mu(0, w, zf);
      double pw1 = spec.p_w_joint(1, zf, w), pw0 = spec.p_w_joint(0, zf, w);
      ey1 += mu1 * pw1 * st.p_z_given_x1;
      ey0 += mu0 * pw0 * st.p_z_given_x0;
      nested += mu1 * pw0 * st.p_z_given_x0;
      ey_x1_given_x0 += mu1 * pw1 * st.p_z_given_x0;
      double j1 = st.p_z * e * pw1, j0 = st.p_z * (1 - e) * pw0;
      ey += mu1 * j1 + mu0 * j0;
      ey2 += mu1 * mu1 * j1 + mu0 * mu0 * j0;
    }
  }
  gt.tv = ey1 - ey0;
  gt.x_de = nested - ey0;
  gt.x_ie = nested - ey_x1_given_x0;
  gt.x_se = ey_x1_given_x0 - ey1;
  gt.outcome_sd = std::sqrt(ey2 - ey * ey + spec.y.sigma * spec.y.sigma);
  return gt;
}

struct McAccumulator {
  // group x0: count, Y, Y^2, (Yx1Wx0 - Y), ^2, (Yx1Wx0 - Yx1), ^2, Yx1, Yx1^2
  // group x1: count, Y, Y^2
  std::array<double, 12> s{};
  void add(const McAccumulator& o) {
    for (std::size_t k = 0; k < s.size(); ++k) s[k] += o.s[k];
  }
};

inline GroundTruth monte_carlo_truth(const ScmSpec& spec, std::size_t reps, int threads) {
  const std::size_t block = 10000;
  const std::size_t n_blocks = (reps + block - 1) / block;
  std::vector<McAccumulator> acc(n_blocks);
  const std::size_t m = spec.mediators.size();
  const std::uint64_t mc_seed = spec.seed ^ 0x4d43u;
  parallel_for(n_blocks, threads, [&](std::size_t b) {
    McAccumulator a;
    std::vector<int> w_fact(m), w0(m), w1(m);
    for (std::size_t r = b * block; r < std::min(reps, (b + 1) * block); ++r) {
      Rng rng(mc_seed, r);
      auto zf = spec.z_features(draw_confounders(spec, rng));
      double ux = rng.uniform();
      std::vector<double> uw(m);
      for (auto& u : uw) u = rng.uniform();
      double noise = spec.y.sigma * rng.normal();
      int x = ux < spec.p_x1(zf) ? 1 : 0;
      // Same exogenous draws in every world.
      for (std::size_t j = 0; j < m; ++j) {
        w0[j] = uw[j] < spec.p_w(j, 0, zf, w0) ? 1 : 0;
        w1[j] = uw[j] < spec.p_w(j, 1, zf, w1) ? 1 : 0;
      }
      const auto& wf = x ? w1 : w0;
      double yf = spec.mu(x, wf, zf) + noise;
      if (x == 1) {
        a.s[9] += 1;
        a.s[10] += yf;
        a.s[11] += yf * yf;
        continue;
      }
      double y_x1_wx0 = spec.mu(1, w0, zf) + noise;
      double y_x1 = spec.mu(1, w1, zf) + noise;
      double de = y_x1_wx0 - yf, ie = y_x1_wx0 - y_x1;
      a.s[0] += 1;
      a.s[1] += yf;
      a.s[2] += yf * yf;
      a.s[3] += de;
      a.s[4] += de * de;
      a.s[5] += ie;
      a.s[6] += ie * ie;
      a.s[7] += y_x1;
      a.s[8] += y_x1 * y_x1;
    }
    acc[b] = a;
  });
  McAccumulator tot;
  for (const auto& a : acc) tot.add(a);
  const auto& s = tot.s;
  double n0 = s[0], n1 = s[9];
  auto mean = [](double sum, double n) { return sum / n; };
  auto var = [](double sum, double sq, double n) { return (sq - sum * sum / n) / (n - 1); };
  GroundTruth gt;
  gt.method = OracleMethod::MonteCarlo;
  gt.mc_reps = reps;
  gt.p_x1 = n1 / (n0 + n1);
  double my1 = mean(s[10], n1), my0 = mean(s[1], n0);
  double vy1 = var(s[10], s[11], n1), vy0 = var(s[1], s[2], n0);
  gt.tv = my1 - my0;
  gt.x_de = mean(s[3], n0);
  gt.x_ie = mean(s[5], n0);
  gt.x_se = mean(s[7], n0) - my1;
  gt.mc_se = {std::sqrt(vy1 / n1 + vy0 / n0), std::sqrt(var(s[3], s[4], n0) / n0),
              std::sqrt(var(s[5], s[6], n0) / n0),
              std::sqrt(var(s[7], s[8], n0) / n0 + vy1 / n1)};
  double ey = (s[1] + s[10]) / (n0 + n1);
  double ey2 = (s[2] + s[11]) / (n0 + n1);
  gt.outcome_sd = std::sqrt(ey2 - ey * ey);
  gt.strata = strata_truth(spec);
  return gt;
}

}  // namespace detail

inline GroundTruth oracle_decomposition(const ScmSpec& spec,
                                        OracleMethod method = OracleMethod::Exact,
                                        std::size_t reps = 1000000, int threads = 1) {
  spec.check();
  if (method == OracleMethod::Exact) {
    if (!spec.enumerable())
      throw Error(ErrorCode::NotEnumerable, "exact oracle needs discrete confounders");
    return detail::exact_truth(spec);
  }
  return detail::monte_carlo_truth(spec, reps, threads);
}

// ---------------------------------------------------------------------------
// JSON

namespace detail {

inline std::vector<double> coef_vector(const json& j, const std::vector<std::string>& names,
                                       const std::string& where) {
  std::vector<double> v(names.size(), 0.0);
  if (j.is_null()) return v;
  for (auto it = j.begin(); it != j.end(); ++it) {
    auto pos = std::find(names.begin(), names.end(), it.key());
    if (pos == names.end())
      throw Error(ErrorCode::BadConfig, where + ": unknown coefficient '" + it.key() + "'");
    v[static_cast<std::size_t>(pos - names.begin())] = it.value().get<double>();
  }
  return v;
}

inline json coef_object(const std::vector<double>& v, const std::vector<std::string>& names) {
  json o = json::object();
  for (std::size_t k = 0; k < v.size(); ++k) o[names[k]] = v[k];
  return o;
}

}  // namespace detail

inline ScmSpec scm_from_json(const json& j) {
  try {
    ScmSpec s;
    s.name = j.value("name", "");
    s.seed = j.value("seed", std::uint64_t{1});
    s.x_name = j.value("x_name", "x");
    s.y_name = j.value("y_name", "y");
    for (const auto& c : j.at("confounders")) {
      ConfounderSpec cs;
      cs.name = c.at("name").get<std::string>();
      cs.kind = detail::parse_kind(c.at("kind").get<std::string>());
      if (cs.kind == Kind::Categorical) cs.levels = c.at("levels").get<std::vector<std::string>>();
      if (cs.kind == Kind::Continuous) {
        cs.mean = c.value("mean", 0.0);
        cs.sd = c.value("sd", 1.0);
      } else if (c.contains("probs")) {
        cs.probs = c.at("probs").get<std::vector<double>>();
      }
      s.confounders.push_back(std::move(cs));
    }
    if (j.contains("z_table")) s.z_table = j.at("z_table").get<std::vector<double>>();
    auto zn = s.z_feature_names();
    const auto& xm = j.at("x_model");
    s.x_intercept = xm.value("intercept", 0.0);
    s.x_z = detail::coef_vector(xm.value("z", json()), zn, "x_model");
    std::vector<std::string> wn;
    for (const auto& m : j.value("mediators", json::array())) {
      MediatorSpec ms;
      ms.name = m.at("name").get<std::string>();
      ms.intercept = m.value("intercept", 0.0);
      ms.x = m.value("x", 0.0);
      ms.z = detail::coef_vector(m.value("z", json()), zn, ms.name);
      ms.w = detail::coef_vector(m.value("w", json()), wn, ms.name);
      wn.push_back(ms.name);
      s.mediators.push_back(std::move(ms));
    }
    const auto& ym = j.at("y_model");
    s.y.intercept = ym.value("intercept", 0.0);
    s.y.x = ym.value("x", 0.0);
    s.y.w = detail::coef_vector(ym.value("w", json()), wn, "y_model");
    s.y.z = detail::coef_vector(ym.value("z", json()), zn, "y_model");
    s.y.xz = detail::coef_vector(ym.value("xz", json()), zn, "y_model");
    s.y.sigma = ym.value("sigma", 1.0);
    s.check();
    return s;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::BadConfig, std::string("scm: ") + e.what());
  }
}

inline json scm_to_json(const ScmSpec& s) {
  auto zn = s.z_feature_names();
  json conf = json::array();
  for (const auto& c : s.confounders) {
    json e = {{"name", c.name}, {"kind", kind_name(c.kind)}};
    if (c.kind == Kind::Categorical) e["levels"] = c.levels;
    if (c.kind == Kind::Continuous) {
      e["mean"] = c.mean;
      e["sd"] = c.sd;
    } else if (!c.probs.empty()) {
      e["probs"] = c.probs;
    }
    conf.push_back(std::move(e));
  }
  json meds = json::array();
  std::vector<std::string> wn;
  for (const auto& m : s.mediators) {
    meds.push_back({{"name", m.name},
                    {"intercept", m.intercept},
                    {"x", m.x},
                    {"z", detail::coef_object(m.z, zn)},
                    {"w", detail::coef_object(m.w, wn)}});
    wn.push_back(m.name);
  }
  json j = {{"name", s.name},
            {"seed", s.seed},
            {"x_name", s.x_name},
            {"y_name", s.y_name},
            {"confounders", conf},
            {"x_model", {{"intercept", s.x_intercept}, {"z", detail::coef_object(s.x_z, zn)}}},
            {"mediators", meds},
            {"y_model",
             {{"intercept", s.y.intercept},
              {"x", s.y.x},
              {"w", detail::coef_object(s.y.w, wn)},
              {"z", detail::coef_object(s.y.z, zn)},
              {"xz", detail::coef_object(s.y.xz, zn)},
              {"sigma", s.y.sigma}}}};
  if (s.z_table) j["z_table"] = *s.z_table;
  return j;
}

inline json ground_truth_to_json(const GroundTruth& g) {
  json strata = json::array();
  for (const auto& st : g.strata)
    strata.push_back({{"labels", st.labels},
                      {"p_z", st.p_z},
                      {"p_z_given_x0", st.p_z_given_x0},
                      {"p_z_given_x1", st.p_z_given_x1},
                      {"tau", st.tau},
                      {"ctf_de", st.ctf_de}});
  json j = {{"method", g.method == OracleMethod::Exact ? "exact" : "monte_carlo"},
            {"tv", g.tv},
            {"x_de", g.x_de},
            {"x_ie", g.x_ie},
            {"x_se", g.x_se},
            {"p_x1", g.p_x1},
            {"outcome_sd", g.outcome_sd},
            {"strata", strata}};
  if (g.method == OracleMethod::MonteCarlo) {
    j["mc_reps"] = g.mc_reps;
    j["mc_se"] = {{"tv", g.mc_se[0]}, {"x_de", g.mc_se[1]}, {"x_ie", g.mc_se[2]}, {"x_se", g.mc_se[3]}};
  }
  return j;
}

// ---------------------------------------------------------------------------
// Reference specs

/// No effect of X anywhere: X independent of Z, W and Y ignore X.
inline ScmSpec null_1() {
  ScmSpec s;
  s.name = "null-1";
  s.seed = 11;
  s.confounders = {{"z1", Kind::Binary, {}, {0.5, 0.5}},
                   {"ses", Kind::Categorical, {"Q1", "Q2", "Q3"}, {0.3, 0.4, 0.3}}};
  s.x_intercept = std::log(0.3 / 0.7);
  s.x_z = {0, 0, 0};
  s.mediators = {{"w1", -0.2, 0.0, {0.5, 0.3, 0.6}, {}},
                 {"w2", 0.1, 0.0, {-0.3, 0.2, 0.4}, {0.8}}};
  s.y = {0.0, 0.0, {0.4, 0.3}, {0.5, 0.3, 0.6}, {0, 0, 0}, 0.7};
  return s;
}

/// Desk-scale reference: a binary and a 3-level confounder with a joint
/// table, confounded treatment with P(X=1) near 0.10, two chained binary
/// mediators and an outcome with x*z heterogeneity.
inline ScmSpec desk_1() {
  ScmSpec s;
  s.name = "desk-1";
  s.seed = 2024;
  s.confounders = {{"z1", Kind::Binary, {}, {}},
                   {"ses", Kind::Categorical, {"Q1", "Q2", "Q3"}, {}}};
  s.z_table = std::vector<double>{0.16, 0.18, 0.16, 0.19, 0.17, 0.14};
  s.x_intercept = -2.3;
  s.x_z = {0.6, -0.3, -0.5};
  s.mediators = {{"w1", -0.3, -0.8, {-0.2, 0.5, 1.0}, {}},
                 {"w2", -1.0, 0.6, {0.3, 0.2, 0.4}, {-0.5}}};
  s.y = {0.0, -0.4, {0.5, -0.3}, {-0.5, 0.6, 1.2}, {0.2, -0.2, -0.3}, 0.4};
  return s;
}

inline ScmSpec reference_spec(const std::string& name) {
  if (name == "null-1") return null_1();
  if (name == "desk-1") return desk_1();
  throw Error(ErrorCode::BadConfig, "unknown reference spec '" + name + "'");
}

}  // namespace cfa
