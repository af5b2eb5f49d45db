#include <gtest/gtest.h>

#include <sstream>

#include "cfa/io.hpp"
#include "cfa/sfm.hpp"

using namespace cfa;

namespace {

SfmSchema small_schema() {
  return SfmSchema({VariableSpec::binary("x", Role::Protected),
                    VariableSpec::categorical("ses", Role::Confounder, {"Q1", "Q2", "Q3"}, "Q1"),
                    VariableSpec::binary("w", Role::Mediator),
                    VariableSpec::continuous("y", Role::Outcome)});
}

Dataset small_data(std::size_t n = 10) {
  Dataset d(small_schema(), n);
  for (std::size_t i = 0; i < n; ++i) {
    d.set(i, 0, static_cast<double>(i % 2));
    d.set(i, 1, static_cast<double>(i % 3));
    d.set(i, 2, static_cast<double>((i / 2) % 2));
    d.set(i, 3, 0.5 * static_cast<double>(i));
  }
  return d;
}

}  // namespace

TEST(Schema, RejectsInvalidDeclarations) {
  EXPECT_THROW(SfmSchema({VariableSpec::continuous("x", Role::Protected),
                          VariableSpec::continuous("y", Role::Outcome)}),
               Error);
  EXPECT_THROW(SfmSchema({VariableSpec::binary("x", Role::Protected)}), Error);
  EXPECT_THROW(SfmSchema({VariableSpec::binary("x", Role::Protected), VariableSpec::binary("x", Role::Mediator),
                          VariableSpec::continuous("y", Role::Outcome)}),
               Error);
  EXPECT_THROW(SfmSchema({VariableSpec::binary("x", Role::Protected),
                          VariableSpec::categorical("c", Role::Confounder, {"a", "b"}, "z"),
                          VariableSpec::continuous("y", Role::Outcome)}),
               Error);
  EXPECT_THROW(SfmSchema({VariableSpec::binary("x", Role::Protected),
                          VariableSpec::categorical("c", Role::Confounder, {"a"}, "a"),
                          VariableSpec::continuous("y", Role::Outcome)}),
               Error);
}

TEST(Validate, WellFormedIsClean) { EXPECT_TRUE(validate(small_data()).empty()); }

TEST(Validate, BinaryValueTwoIsOneViolation) {
  auto d = small_data();
  d.set(3, 2, 2.0);
  auto v = validate(d);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].variable, "w");
  EXPECT_EQ(v[0].row, 3);
}

TEST(Validate, UndeclaredCategoricalLevel) {
  std::istringstream in("x,ses,w,y\n0,Q1,0,1.0\n1,Q6,1,2.0\n");
  auto d = parse_csv(in, small_schema());
  auto v = validate(d);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].variable, "ses");
  EXPECT_EQ(v[0].row, 1);
  EXPECT_NE(v[0].rule.find("Q6"), std::string::npos);
}

TEST(Encode, ReferenceDummyCoding) {
  auto d = small_data(3);
  auto m = encode(d);
  ASSERT_EQ(m.z.values.cols(), 2);
  EXPECT_EQ(m.z.names[0], "ses=Q2");
  EXPECT_EQ(m.z.names[1], "ses=Q3");
  EXPECT_EQ(m.z.values.row(0), Eigen::RowVector2d(0, 0));
  EXPECT_EQ(m.z.values.row(1), Eigen::RowVector2d(1, 0));
  EXPECT_EQ(m.z.values.row(2), Eigen::RowVector2d(0, 1));
  EXPECT_EQ(m.w.values.cols(), 1);
}

TEST(Encode, SixLevelCategoricalGivesFiveColumns) {
  SfmSchema s({VariableSpec::binary("x", Role::Protected),
               VariableSpec::categorical("race", Role::Confounder,
                                         {"Asian", "Black", "Hispanic", "Multiracial", "Other", "White"}, "White"),
               VariableSpec::continuous("y", Role::Outcome)});
  Dataset d(s, 6);
  for (std::size_t i = 0; i < 6; ++i) d.set(i, 1, static_cast<double>(i));
  auto m = encode(d);
  EXPECT_EQ(m.z.values.cols(), 5);
  EXPECT_EQ(m.z.values.row(5).sum(), 0.0);  // reference row
  for (Eigen::Index i = 0; i < 6; ++i) EXPECT_LE(m.z.values.row(i).sum(), 1.0);
}

TEST(Encode, NoConfoundersGivesEmptyZ) {
  SfmSchema s({VariableSpec::binary("x", Role::Protected), VariableSpec::continuous("y", Role::Outcome)});
  Dataset d(s, 4);
  auto m = encode(d);
  EXPECT_EQ(m.z.values.cols(), 0);
  EXPECT_EQ(m.z.values.rows(), 4);
}

TEST(Encode, MissingCellThrows) {
  auto d = small_data();
  d.set_missing(2, 3);
  try {
    encode(d);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingData);
  }
}

TEST(Impute, MeanAndMode) {
  SfmSchema s({VariableSpec::binary("x", Role::Protected), VariableSpec::continuous("y", Role::Outcome)});
  Dataset d(s, 4);
  d.set(0, 1, 1.0);
  d.set_missing(1, 1);
  d.set(2, 1, 3.0);
  d.set(3, 1, 2.0);
  d.set(0, 0, 0);
  d.set(1, 0, 0);
  d.set(2, 0, 1);
  d.set_missing(3, 0);
  auto out = simple_impute(d);
  EXPECT_DOUBLE_EQ(out.value(1, 1), 2.0);
  EXPECT_EQ(out.value(3, 0), 0.0);
  EXPECT_TRUE(out.complete());
  EXPECT_TRUE(d.is_missing(1, 1));  // input untouched
  EXPECT_EQ(simple_impute(out), out);  // idempotent
}

TEST(Impute, TiesGoToFirstDeclaredLevel) {
  SfmSchema s({VariableSpec::binary("x", Role::Protected), VariableSpec::continuous("y", Role::Outcome)});
  Dataset d(s, 3);
  d.set(0, 0, 1);
  d.set(1, 0, 0);
  d.set_missing(2, 0);
  EXPECT_EQ(simple_impute(d).value(2, 0), 0.0);
}

TEST(Impute, AllMissingColumn) {
  auto d = small_data(3);
  for (std::size_t i = 0; i < 3; ++i) d.set_missing(i, 3);
  try {
    simple_impute(d);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::AllMissingColumn);
  }
}

TEST(Folds, BalancedAndDeterministic) {
  auto f = assign_folds(10, 5, 7);
  std::vector<int> sizes(5, 0);
  for (int k : f.fold_of) ++sizes[static_cast<std::size_t>(k)];
  for (int s : sizes) EXPECT_EQ(s, 2);
  EXPECT_EQ(assign_folds(10, 5, 7).fold_of, f.fold_of);
  EXPECT_NE(assign_folds(10, 5, 8).fold_of, f.fold_of);

  auto loo = assign_folds(10, 10, 1);
  std::vector<int> seen(10, 0);
  for (int k : loo.fold_of) ++seen[static_cast<std::size_t>(k)];
  for (int s : seen) EXPECT_EQ(s, 1);

  for (std::size_t n : {7u, 101u, 1000u}) {
    auto g = assign_folds(n, 3, 99);
    std::vector<int> c(3, 0);
    for (int k : g.fold_of) ++c[static_cast<std::size_t>(k)];
    EXPECT_LE(*std::max_element(c.begin(), c.end()) - *std::min_element(c.begin(), c.end()), 1);
  }
}

TEST(Folds, BadCounts) {
  EXPECT_THROW(assign_folds(10, 1, 0), Error);
  EXPECT_THROW(assign_folds(10, 11, 0), Error);
}

TEST(Csv, RoundTripAndMissingTokens) {
  std::istringstream in("\xEF\xBB\xBFx,ses,w,y\n0,Q2,1,1.5\n1,NA,0,\n1,Q3,na,-2\n");
  auto d = parse_csv(in, small_schema());
  ASSERT_EQ(d.n(), 3u);
  EXPECT_TRUE(d.is_missing(1, 1));
  EXPECT_TRUE(d.is_missing(1, 3));
  EXPECT_TRUE(d.is_missing(2, 2));
  EXPECT_EQ(d.value(0, 1), 1.0);
  std::ostringstream out;
  write_csv(out, d);
  std::istringstream back(out.str());
  EXPECT_EQ(parse_csv(back, small_schema()), d);
}

TEST(Csv, HeaderMismatchAndBadNumber) {
  std::istringstream a("x,ses,w,outcome\n0,Q1,1,0\n");
  EXPECT_THROW(parse_csv(a, small_schema()), Error);
  std::istringstream reordered("x,ses,y,w\n0,Q1,1.5,0\n");
  EXPECT_EQ(parse_csv(reordered, small_schema()).value(0, 3), 1.5);
  std::istringstream b("x,ses,w,y\n0,Q1,0,abc\n");
  EXPECT_THROW(parse_csv(b, small_schema()), Error);
}

TEST(Schema, JsonRoundTrip) {
  auto s = small_schema();
  auto back = schema_from_json(schema_to_json(s));
  EXPECT_EQ(schema_to_json(back), schema_to_json(s));
}
