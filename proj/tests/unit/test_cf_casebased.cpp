#include <gtest/gtest.h>

#include "oracles.hpp"
#include "test_support.hpp"
#include "twincbr/cf_casebased.hpp"
#include "twincbr/errors.hpp"

namespace twincbr {
namespace {

// Class 1 iff the third input exceeds 6; raw values, no encoding.
MlpModel third_feature_model() {
  return MlpModel({testing::dense(3, 2, {0, 0, 0, 0, 0, 1}, {0.0, -6.0})},
                  Head::kSoftmax);
}

CaseBase small_base() {
  return testing::numeric_base({{1, 2, 5},     // id0, labelled 1, predicted 0
                                {1, 2, 3.1},   // id1
                                {1, 2, 9},     // id2
                                {0, 0, 0},     // id3
                                {5, 5, 5}},    // id4
                               {1, 0, 1, 0, 1});
}

TEST(MineExplanationCases, SingleDifferenceExample) {
  const auto base = testing::numeric_base({{1, 2}, {1, 9}}, {0, 1});
  const auto xcs = mine_explanation_cases(base, 0.1);
  ASSERT_EQ(xcs.size(), 1u);
  EXPECT_EQ(xcs[0].first, 0);
  EXPECT_EQ(xcs[0].second, 1);
  EXPECT_EQ(xcs[0].diff, (std::vector<std::size_t>{1}));
  EXPECT_EQ(xcs[0].first_class, 0);
  EXPECT_EQ(xcs[0].second_class, 1);
}

TEST(MineExplanationCases, IdenticalAndThreeWayPairsExcluded) {
  const auto same = testing::numeric_base({{1, 1, 1}, {1, 1, 1}}, {0, 1});
  EXPECT_TRUE(mine_explanation_cases(same, 0.1).empty());
  const auto three = testing::numeric_base({{0, 0, 0}, {1, 1, 1}}, {0, 1});
  EXPECT_TRUE(mine_explanation_cases(three, 0.1).empty());
  EXPECT_EQ(mine_explanation_cases(three, 0.1, 3).size(), 1u);
  EXPECT_THROW(mine_explanation_cases(three, 1.5), ExplanationError);
}

TEST(MineExplanationCases, MatchesDoubleLoop) {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    Rng rng(seed);
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    for (int i = 0; i < 150; ++i) {
      rows.push_back({static_cast<double>(rng.index(4)), static_cast<double>(rng.index(4)),
                      static_cast<double>(rng.index(4)), static_cast<double>(rng.index(4))});
      labels.push_back(static_cast<int>(rng.index(3)));
    }
    std::vector<Case> cases = testing::numeric_base(rows, labels, 3).cases();
    rng.shuffle(cases);
    const CaseBase base(testing::numeric_base(rows, labels, 3).schema(), cases);
    const auto got = mine_explanation_cases(base, 0.1);
    const auto want = oracle::brute_pairs(base, 0.1, 2);
    ASSERT_EQ(got.size(), want.size());
    ASSERT_FALSE(got.empty());
    for (std::size_t i = 0; i < got.size(); ++i) {
      EXPECT_EQ(got[i].first, want[i].first);
      EXPECT_EQ(got[i].second, want[i].second);
      EXPECT_EQ(got[i].diff, want[i].diff);
      EXPECT_NE(got[i].first_class, got[i].second_class);
    }
  }
}

TEST(GenerateCf, AdaptsWithTheDonorValue) {
  const auto base = small_base();
  const auto model = third_feature_model();
  const auto xcs = mine_explanation_cases(base, 0.1);
  ASSERT_EQ(xcs.size(), 2u);  // (0,1) and (1,2)
  const std::vector<double> query{1, 2, 3};
  const auto cf = generate_cf(query, model, base, xcs);
  // (0,1) ranks first but its candidate [1,2,5] stays in class 0.
  EXPECT_EQ(cf.attempts, 2u);
  EXPECT_TRUE(cf.valid);
  EXPECT_EQ(cf.provenance, CfProvenance::kExplanationCase);
  EXPECT_EQ(cf.instance, (std::vector<double>{1, 2, 9}));
  EXPECT_EQ(cf.changed_features, (std::vector<std::size_t>{2}));
  EXPECT_EQ(cf.donor_id, 2);
  EXPECT_EQ(cf.query_class, 0);
  EXPECT_EQ(cf.instance_class, 1);
}

TEST(GenerateCf, FallsBackToNearestUnlikeCase) {
  const auto base = small_base();
  const auto model = third_feature_model();
  const auto xcs = mine_explanation_cases(base, 0.1);
  const auto cf = generate_cf(std::vector<double>{1, 2, 3}, model, base, xcs,
                              CaseBasedOptions{.max_attempts = 1});
  EXPECT_EQ(cf.provenance, CfProvenance::kNunFallback);
  EXPECT_EQ(cf.attempts, 1u);
  EXPECT_EQ(cf.donor_id, 2);
  EXPECT_TRUE(cf.valid);

  const auto no_xcs = generate_cf(std::vector<double>{1, 2, 3}, model, base, {});
  EXPECT_EQ(no_xcs.provenance, CfProvenance::kNunFallback);
  EXPECT_EQ(no_xcs.instance, base.at_id(2).values);
}

TEST(GenerateCf, Errors) {
  const auto base = small_base();
  const auto model = third_feature_model();
  const auto xcs = mine_explanation_cases(base, 0.1);
  EXPECT_THROW(generate_cf(std::vector<double>{1, 2, 3}, model, base, xcs,
                           CaseBasedOptions{.target_class = 0}),
               ExplanationError);
  // A model that always answers class 0 leaves nothing to flip to.
  const MlpModel constant({testing::dense(3, 2, {0, 0, 0, 0, 0, 0}, {1.0, 0.0})},
                          Head::kSoftmax);
  EXPECT_THROW(generate_cf(std::vector<double>{1, 2, 3}, constant, base, xcs),
               ExplanationError);
}

TEST(GenerateCf, AcceptedCandidatesKeepDonorValuesVerbatim) {
  const auto base = synth_imbalanced(80, 40, 5);
  const auto model = fit_model(base, {8}, TrainConfig{.epochs = 80, .seed = 4}).model;
  const auto xcs = mine_explanation_cases(base, 0.1);
  ASSERT_FALSE(xcs.empty());
  int adapted = 0;
  for (const auto& c : base.cases()) {
    const auto cf = generate_cf(c.values, model, base, xcs,
                                CaseBasedOptions{.query_id = c.id});
    EXPECT_EQ(cf.valid, predict_class(model, cf.instance) != cf.query_class);
    EXPECT_EQ(cf.changed_features, diff_features(base, c.values, cf.instance, 0.1));
    if (cf.provenance != CfProvenance::kExplanationCase) continue;
    ++adapted;
    EXPECT_TRUE(cf.valid);
    EXPECT_LE(cf.changed_features.size(), 2u);
    const Case& donor = base.at_id(*cf.donor_id);
    for (std::size_t f = 0; f < c.values.size(); ++f) {
      if (cf.instance[f] != c.values[f]) {
        EXPECT_EQ(cf.instance[f], donor.values[f]);
      }
    }
  }
  EXPECT_GT(adapted, 0);
}

TEST(Wachter, CrossesHandBuiltBoundary) {
  // Class 1 iff x > 0.
  const MlpModel model({testing::dense(1, 2, {0.0, 1.0}, {0.0, 0.0})}, Head::kSoftmax);
  const auto base = testing::numeric_base({{-1.0}, {1.0}}, {0, 1});
  const auto cf = wachter_cf(std::vector<double>{-1.0}, model, base, 1);
  EXPECT_TRUE(cf.valid);
  EXPECT_EQ(cf.provenance, CfProvenance::kWachter);
  EXPECT_GT(cf.instance[0], 0.0);
  EXPECT_LT(cf.instance[0], 0.5);
  EXPECT_GT(cf.attempts, 0u);

  const auto none = wachter_cf(std::vector<double>{-1.0}, model, base, 1,
                               WachterOptions{.max_iters = 0});
  EXPECT_FALSE(none.valid);
  EXPECT_EQ(none.instance, none.query);

  const auto already = wachter_cf(std::vector<double>{0.5}, model, base, 1);
  EXPECT_TRUE(already.valid);
  EXPECT_EQ(already.attempts, 0u);
  EXPECT_TRUE(already.changed_features.empty());
  EXPECT_THROW(wachter_cf(std::vector<double>{0.5}, model, base, 4), ExplanationError);
}

TEST(Wachter, CategoricalInputsStayFrozen) {
  std::string csv = "x,colour,label\n";
  for (int i = 0; i < 20; ++i) {
    csv += std::to_string(i) + (i % 2 ? ",red," : ",blue,") + (i < 10 ? "lo\n" : "hi\n");
  }
  const auto base = parse_tabular_csv(csv, CsvOptions{});
  const auto model = fit_model(base, {6}, TrainConfig{.epochs = 150, .seed = 1}).model;
  const auto& q = base[1].values;
  const int from = predict_class(model, q);
  const auto cf = wachter_cf(q, model, base, 1 - from);
  EXPECT_EQ(cf.instance[1], q[1]);
  if (cf.valid) EXPECT_EQ(predict_class(model, cf.instance), 1 - from);
}

}  // namespace
}  // namespace twincbr
