#include <cmath>
#include <fstream>

#include <gtest/gtest.h>

#include "test_support.hpp"
#include "twincbr/data_model.hpp"
#include "twincbr/errors.hpp"

namespace twincbr {
namespace {

using testing::numeric_base;

CaseBase parse(std::string_view text, CsvOptions opts = {}) {
  return parse_tabular_csv(text, opts);
}

TEST(TabularCsv, InfersNumericColumnAndFirstAppearanceLabels) {
  const auto base = parse("x,label\n1,A\n2,B\n3,A\n");
  ASSERT_EQ(base.size(), 3u);
  EXPECT_EQ(base.schema().class_labels, (std::vector<std::string>{"A", "B"}));
  EXPECT_EQ(base.schema().features[0].kind, FeatureKind::kNumeric);
  EXPECT_EQ(base.schema().features[0].min, 1.0);
  EXPECT_EQ(base.schema().features[0].max, 3.0);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(base[i].id, static_cast<int>(i));
  EXPECT_EQ(base[1].label, 1);
}

TEST(TabularCsv, MixedColumnIsCategorical) {
  const auto base = parse("colour,label\n1.5,A\nred,B\n");
  EXPECT_EQ(base.schema().features[0].kind, FeatureKind::kCategorical);
  EXPECT_EQ(base.schema().features[0].categories,
            (std::vector<std::string>{"1.5", "red"}));
  EXPECT_EQ(base[1].values[0], 1.0);
}

TEST(TabularCsv, Errors) {
  EXPECT_THROW(parse("x,label\n"), DataError);
  try {
    parse("x,label\n");
  } catch (const DataError& e) {
    EXPECT_STREQ(e.what(), "empty dataset");
  }
  EXPECT_THROW(parse("x,y\n1,2\n"), DataError);
  EXPECT_THROW(parse("x,label\n1,A\n2\n"), DataError);
}

TEST(TabularCsv, QuotedFields) {
  const auto base = parse("name,x,label\n\"a, b\",1,A\n\"say \"\"hi\"\"\",2,B\n");
  EXPECT_EQ(base.schema().features[0].categories[0], "a, b");
  EXPECT_EQ(base.schema().features[0].categories[1], "say \"hi\"");
}

TEST(TabularCsv, SchemaHintOverridesInferenceAndRejectsNonConforming) {
  const auto dir = testing::scratch_dir("schema_hint");
  const auto hint = dir / "hint.json";
  std::ofstream(hint)
      << R"({"features":[{"name":"code","kind":"categorical"},)"
      << R"({"name":"x","kind":"numeric"}],"label":"y"})";
  CsvOptions opts;
  opts.schema_hint = hint;
  const auto base = parse("code,x,y\n1,0.5,A\n2,0.7,B\n", opts);
  EXPECT_EQ(base.schema().features[0].kind, FeatureKind::kCategorical);
  EXPECT_EQ(base.schema().label_name, "y");
  EXPECT_THROW(parse("code,x,y\n1,abc,A\n", opts), DataError);
}

TEST(TabularCsv, RoundTripIsIdentical) {
  const auto base = parse("x,c,label\n1.25,red,A\n-3e-7,blue,B\n0.1,red,B\n");
  const auto again =
      parse(format_tabular_csv(base.schema(), base.cases()), CsvOptions{});
  EXPECT_EQ(base, again);
  const auto blobs = testing::two_blobs(20, 3);
  EXPECT_EQ(blobs, parse(format_tabular_csv(blobs.schema(), blobs.cases())));
}

TEST(Scaler, DefinitionEndpointsAndDegenerate) {
  const auto base = numeric_base({{0.0, 3.0}, {10.0, 3.0}}, {0, 1});
  EXPECT_DOUBLE_EQ(base.scaler().normalize(0, 5.0), 0.5);
  EXPECT_DOUBLE_EQ(base.scaler().normalize(0, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(base.scaler().normalize(0, 10.0), 1.0);
  EXPECT_DOUBLE_EQ(base.scaler().normalize(1, 3.0), 0.0);
  // Out-of-range queries are not clipped.
  EXPECT_DOUBLE_EQ(base.scaler().normalize(0, 15.0), 1.5);
  EXPECT_DOUBLE_EQ(base.scaler().normalize(0, -5.0), -0.5);
  EXPECT_FALSE(base.scaler().ranges()[1] == std::nullopt);
}

TEST(Scaler, TrainingValuesLandInUnitInterval) {
  const auto base = synth_imbalanced(95, 5, 11);
  for (const auto& c : base.cases()) {
    for (double v : base.normalize(c.values)) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(Distance, Examples) {
  // Normalized differences [3, 4] on unit ranges.
  const auto base = numeric_base({{0.0, 0.0}, {1.0, 1.0}}, {0, 1});
  const std::vector<double> a{0.0, 0.0};
  const std::vector<double> b{3.0, 4.0};
  EXPECT_DOUBLE_EQ(distance(base, a, b), 5.0);
  EXPECT_DOUBLE_EQ(distance(base, a, a), 0.0);
  const std::vector<double> w{4.0, 0.0};
  EXPECT_DOUBLE_EQ(distance(base, a, b, w), 6.0);
  const std::vector<double> bad{1.0};
  EXPECT_THROW(distance(base, a, b, bad), DataError);

  const auto cat = parse("c,label\nA,x\nB,y\n");
  EXPECT_DOUBLE_EQ(distance(cat, cat[0].values, cat[1].values), 1.0);
}

TEST(Distance, SemiMetricOnRandomPairs) {
  const auto base = parse(
      "x,c,z,label\n0,a,1,A\n10,b,2,B\n5,a,3,A\n7,c,4,B\n2,b,5,A\n");
  Rng rng(5);
  for (int t = 0; t < 200; ++t) {
    const auto& p = base[rng.index(base.size())].values;
    const auto& q = base[rng.index(base.size())].values;
    const double d = distance(base, p, q);
    EXPECT_GE(d, 0.0);
    EXPECT_DOUBLE_EQ(d, distance(base, q, p));
    EXPECT_EQ(distance(base, p, p), 0.0);
    EXPECT_EQ(diff_features(base, p, q, 0.1), diff_features(base, q, p, 0.1));
  }
}

TEST(DiffFeatures, Examples) {
  const auto base = parse("n,c,m,label\n1.0,A,5,x\n1.0,B,5,y\n0,A,0,x\n2,B,10,y\n");
  EXPECT_EQ(diff_features(base, base[0].values, base[1].values, 0.1),
            (std::vector<std::size_t>{1}));
  EXPECT_TRUE(diff_features(base, base[0].values, base[0].values, 0.1).empty());
  // 0.50 vs 0.55 normalized on feature m (range [0,10]).
  std::vector<double> p = base[0].values;
  std::vector<double> q = base[0].values;
  p[2] = 5.0;
  q[2] = 5.5;
  EXPECT_TRUE(diff_features(base, p, q, 0.1).empty());
  q[2] = 6.5;
  EXPECT_EQ(diff_features(base, p, q, 0.1), (std::vector<std::size_t>{2}));
}

TEST(CaseBase, ValidationRejectsBadCases) {
  FeatureSchema schema;
  schema.label_name = "label";
  schema.class_labels = {"a", "b"};
  schema.features = {Feature{.name = "x"}};
  EXPECT_THROW(CaseBase(schema, {Case{.id = 1, .values = {1}}, Case{.id = 1, .values = {2}}}),
               DataError);
  EXPECT_THROW(CaseBase(schema, {Case{.id = -1, .values = {1}}}), DataError);
  EXPECT_THROW(CaseBase(schema, {Case{.id = 0, .values = {1, 2}}}), DataError);
  EXPECT_THROW(CaseBase(schema, {Case{.id = 0, .values = {NAN}}}), DataError);
  EXPECT_THROW(CaseBase(schema, {Case{.id = 0, .values = {1}, .label = 2}}),
               DataError);
  auto dup = schema;
  dup.features.push_back(Feature{.name = "x"});
  EXPECT_THROW(dup.validate(), DataError);
  auto clash = schema;
  clash.label_name = "x";
  EXPECT_THROW(clash.validate(), DataError);
}

TEST(CaseBase, LookupAndExtension) {
  const auto base = numeric_base({{0.0}, {1.0}, {2.0}}, {0, 1, 0});
  EXPECT_EQ(base.at_id(2).values[0], 2.0);
  EXPECT_EQ(base.find(7), nullptr);
  EXPECT_THROW(base.at_id(7), DataError);
  EXPECT_EQ(base.next_id(), 3);
  const std::vector<Case> extra{Case{.id = 3, .values = {4.0}, .label = 1}};
  const auto bigger = base.with_cases(extra);
  EXPECT_EQ(bigger.size(), 4u);
  EXPECT_EQ(bigger.schema().features[0].max, 4.0);
  EXPECT_DOUBLE_EQ(bigger.scaler().normalize(0, 2.0), 0.5);
  EXPECT_EQ(base.class_counts(), (std::vector<std::size_t>{2, 1}));
}

TEST(CaseBase, ConformToRemapsOrders) {
  const auto ref = parse("c,label\nred,A\nblue,B\n");
  const auto other = parse("c,label\nblue,B\nred,A\nblue,A\n");
  const auto fixed = conform_to(other, ref.schema());
  EXPECT_EQ(fixed.schema().class_labels, ref.schema().class_labels);
  EXPECT_EQ(fixed[0].label, 1);
  EXPECT_EQ(fixed[0].values[0], 1.0);
  EXPECT_EQ(fixed[1].values[0], 0.0);
  EXPECT_THROW(conform_to(parse("c,label\nred,Z\n"), ref.schema()), DataError);
  EXPECT_THROW(conform_to(parse("c,label\ngreen,A\n"), ref.schema()), DataError);
  EXPECT_THROW(conform_to(parse("d,label\nred,A\n"), ref.schema()), DataError);
}

TEST(TimeSeriesTsv, FormatAndErrors) {
  const auto ds = parse_timeseries_tsv("1\t0.5\t0.7\n");
  ASSERT_EQ(ds.size(), 1u);
  EXPECT_EQ(ds.class_labels, (std::vector<std::string>{"1"}));
  EXPECT_EQ(ds.instances[0].values, (std::vector<double>{0.5, 0.7}));
  EXPECT_THROW(parse_timeseries_tsv("1\t0.5\t0.7\n2\t0.1\n"), DataError);
  EXPECT_THROW(parse_timeseries_tsv(""), DataError);
  EXPECT_THROW(parse_timeseries_tsv("1\tx\n"), DataError);
  EXPECT_THROW(parse_timeseries_tsv("1\n"), DataError);
}

TEST(TimeSeriesTsv, RoundTripAndCaseBaseView) {
  const auto ds = synth_series(3, 16, 4);
  const auto again = parse_timeseries_tsv(format_timeseries_tsv(ds));
  ASSERT_EQ(again.size(), ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    EXPECT_EQ(again.instances[i].values, ds.instances[i].values);
    EXPECT_EQ(again.class_labels[again.instances[i].label],
              ds.class_labels[ds.instances[i].label]);
  }
  const auto base = ds.to_casebase();
  EXPECT_EQ(base.schema().size(), 16u);
  EXPECT_EQ(base.schema().features[3].name, "t3");
  EXPECT_EQ(ds.mean_signal().size(), 16u);
}

TEST(Synth, DeterminismAndCounts) {
  const auto a = synth_blobs(10, 2, {{0, 0}, {5, 5}}, 0.5, 7);
  const auto b = synth_blobs(10, 2, {{0, 0}, {5, 5}}, 0.5, 7);
  EXPECT_EQ(format_tabular_csv(a.schema(), a.cases()),
            format_tabular_csv(b.schema(), b.cases()));
  EXPECT_EQ(a.size(), 20u);

  const auto imb = synth_imbalanced(95, 5, 3);
  EXPECT_EQ(imb.size(), 100u);
  EXPECT_EQ(imb.class_counts(), (std::vector<std::size_t>{95, 5}));

  const auto ts = synth_series(5, 32, 3);
  EXPECT_EQ(ts.size(), 10u);
  for (const auto& inst : ts.instances) EXPECT_EQ(inst.values.size(), 32u);

  const auto shifted = synth_imbalanced(10, 2, 3, 100);
  EXPECT_EQ(shifted[0].id, 100);
}

}  // namespace
}  // namespace twincbr
