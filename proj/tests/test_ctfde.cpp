#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "cfa/ctfde.hpp"
#include "cfa/decomp.hpp"
#include "cfa/synth.hpp"
#include "fixtures.hpp"

using namespace cfa;

namespace {

/// Per (z1, ses) cell: the true value from `pick` and the estimate.
template <class Pick>
void expect_cells_match_oracle(const ScmSpec& spec, const CtfDeHeatmap& h, Pick pick, double k) {
  auto g = oracle_decomposition(spec);
  ASSERT_EQ(h.cells.size(), g.strata.size());
  for (const auto& cell : h.cells) {
    auto it = std::find_if(g.strata.begin(), g.strata.end(), [&](const StratumTruth& s) {
      return s.labels[0] == cell.level1 && s.labels[1] == cell.level2;
    });
    ASSERT_NE(it, g.strata.end());
    const auto& st = *it;
    ASSERT_TRUE(cell.estimate.has_value());
    EXPECT_LE(std::abs(cell.estimate->estimate - pick(st)), k * cell.estimate->se)
        << cell.level1 << "," << cell.level2 << " est " << cell.estimate->estimate << " truth " << pick(st);
  }
}

}  // namespace

TEST(CtfDe, Desk1CellsMatchEnumerationOracle) {
  auto spec = desk_1();
  auto d = sample(spec, 100000);
  auto fits = cross_fit(d, assign_folds(d.n(), 10, 1), {});
  auto r = ctf_de_report(d, fits, {{"z1", "ses"}});
  expect_cells_match_oracle(spec, r.heatmaps[0], [](const StratumTruth& s) { return s.ctf_de; }, 4);

  // aggregation: P(z | x0)-weighted cells against the decomposition's x_de
  auto dec = debiased_decomposition(d, fits);
  const auto& sch = d.schema();
  const auto a = *sch.find("z1"), b = *sch.find("ses");
  double agg = 0, var = 0;
  for (const auto& cell : r.heatmaps[0].cells) {
    std::size_t n0 = 0;
    for (std::size_t i = 0; i < d.n(); ++i)
      if (!d.group(i) && sch.variable(a).label(static_cast<int>(d.value(i, a))) == cell.level1 &&
          sch.variable(b).label(static_cast<int>(d.value(i, b))) == cell.level2)
        ++n0;
    double w = static_cast<double>(n0) / static_cast<double>(dec.n0);
    agg += w * cell.estimate->estimate;
    var += w * w * cell.estimate->se * cell.estimate->se;
  }
  EXPECT_LE(std::abs(agg - dec.x_de.estimate), 4 * std::sqrt(var + dec.x_de.se * dec.x_de.se));
}

TEST(CtfDe, NoMediatedChannelMatchesCate) {
  auto spec = desk_1();
  for (auto& m : spec.mediators) m.x = 0;
  auto d = sample(spec, 50000);
  auto r = ctf_de_report(d, cross_fit(d, assign_folds(d.n(), 10, 2), {}), {{"z1", "ses"}});
  expect_cells_match_oracle(spec, r.heatmaps[0], [](const StratumTruth& s) { return s.tau; }, 4);
}

TEST(CtfDe, NullSpecOverallIsZero) {
  auto d = sample(null_1(), 5000);
  auto r = ctf_de_report(d, cross_fit(d, assign_folds(d.n(), 10, 3), {}));
  EXPECT_LE(std::abs(r.overall.estimate), 4 * r.overall.se);
}

TEST(CtfDe, ReducesToDifferenceInMeansUnderBalancedRandomization) {
  // every (z, w) cell holds the same number of x0 and x1 rows
  SfmSchema schema({VariableSpec::binary("x", Role::Protected), VariableSpec::binary("z", Role::Confounder),
                    VariableSpec::binary("w", Role::Mediator), VariableSpec::continuous("y", Role::Outcome)});
  const int counts[2][2] = {{40, 60}, {90, 30}};
  std::size_t n = 0;
  for (auto& row : counts)
    for (int c : row) n += 2 * static_cast<std::size_t>(c);
  Dataset d(schema, n);
  Rng rng(8, 8);
  std::size_t i = 0;
  for (int z = 0; z < 2; ++z)
    for (int w = 0; w < 2; ++w)
      for (int x = 0; x < 2; ++x)
        for (int k = 0; k < counts[z][w]; ++k, ++i) {
          d.set(i, 0, x);
          d.set(i, 1, z);
          d.set(i, 2, w);
          d.set(i, 3, 0.3 * x + 0.5 * z - 0.2 * w + rng.normal());
        }
  auto ps = ctf_de_pseudo_outcomes(d, saturated_fits(d));
  EXPECT_NEAR(ctf_de_overall(ps.psi).estimate, tv_empirical(d).estimate, 1e-6);
}

TEST(CtfDe, CellBookkeeping) {
  auto d = sample(desk_1(), 3000);
  auto ps = ctf_de_pseudo_outcomes(d, saturated_fits(d));
  auto h = ctf_de_by_cell(ps.psi, d, "z1", "ses");
  std::size_t total = 0;
  for (const auto& c : h.cells) {
    total += c.n;
    EXPECT_EQ(c.small, c.n < 30);
  }
  EXPECT_EQ(total, d.n());
  try {
    ctf_de_by_cell(ps.psi, d, "z1", "w1");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnknownDimension);
  }
}

TEST(CtfDe, SingleCellAndEmptyCell) {
  SfmSchema schema({VariableSpec::binary("x", Role::Protected),
                    VariableSpec::binary("site", Role::Confounder),
                    VariableSpec::categorical("g", Role::Confounder, {"a", "b", "c"}, "a"),
                    VariableSpec::continuous("y", Role::Outcome)});
  Dataset d(schema, 50);
  Eigen::VectorXd psi(50);
  for (std::size_t i = 0; i < 50; ++i) {
    d.set(i, 0, static_cast<double>(i % 2));
    d.set(i, 1, 0);               // site level "1" stays empty
    d.set(i, 2, i < 20 ? 0 : 1);  // so does level "c"
    psi(static_cast<Eigen::Index>(i)) = std::sin(static_cast<double>(i));
  }
  auto one = ctf_de_by_cell(psi, d, "site", "site");
  ASSERT_EQ(one.cells.size(), 4u);
  EXPECT_TRUE(*one.cells[0].estimate == ctf_de_overall(psi));
  for (std::size_t c = 1; c < 4; ++c) EXPECT_FALSE(one.cells[c].estimate.has_value());
  auto g = ctf_de_by_cell(psi, d, "site", "g");
  ASSERT_EQ(g.cells.size(), 6u);
  EXPECT_EQ(g.cells[2].n, 0u);
  EXPECT_TRUE(g.cells[2].small);
  EXPECT_FALSE(g.cells[2].estimate.has_value());
}

TEST(CtfDe, LocationInvarianceAndDeterminism) {
  auto d = sample(desk_1(), 5000);
  Dataset shifted = d;
  auto yj = d.schema().outcome_index();
  for (std::size_t i = 0; i < d.n(); ++i) shifted.set(i, yj, d.value(i, yj) + 4.0);
  auto a = ctf_de_pseudo_outcomes(d, saturated_fits(d)).psi;
  auto b = ctf_de_pseudo_outcomes(shifted, saturated_fits(shifted)).psi;
  EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_EQ(a, ctf_de_pseudo_outcomes(d, saturated_fits(d)).psi);
}
