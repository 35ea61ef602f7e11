#include <memory>

#include <gtest/gtest.h>

#include "test_support.hpp"
#include "twincbr/errors.hpp"
#include "twincbr/factual.hpp"
#include "twincbr/retrieval.hpp"

namespace twincbr {
namespace {

class FactualTest : public ::testing::Test {
 protected:
  void SetUp() override {
    base_ = std::make_unique<CaseBase>(testing::two_blobs(60, 21, 2.0, 1.0));
    model_ = std::make_unique<MlpModel>(
        fit_model(*base_, {6}, TrainConfig{.epochs = 60, .seed = 2}).model);
  }
  std::unique_ptr<CaseBase> base_;
  std::unique_ptr<MlpModel> model_;
};

TEST_F(FactualTest, NeighboursShareThePredictedClassEvenWhenWrong) {
  int misclassified = 0;
  for (const auto& c : base_->cases()) {
    const int pred = predict_class(*model_, c.values);
    if (pred != c.label) ++misclassified;
    const auto r = explain_factual(*model_, *base_, c.values,
                                   FactualOptions{.k = 3, .exclude_id = c.id});
    EXPECT_EQ(r.predicted_class, pred);
    for (const auto& n : r.neighbors) {
      EXPECT_EQ(n.predicted_class, pred);
      EXPECT_EQ(predict_class(*model_, base_->at_id(n.case_id).values), pred);
      EXPECT_NE(n.case_id, c.id);
      EXPECT_EQ(n.input_attribution.size(), 2u);
    }
  }
  // The overlapping blobs guarantee the misclassified path was exercised.
  EXPECT_GT(misclassified, 0);
}

TEST_F(FactualTest, InSampleQueryWithoutExclusionIsAtDistanceZero) {
  const auto& c = (*base_)[5];
  const auto r = explain_factual(*model_, *base_, c.values, FactualOptions{.k = 1});
  ASSERT_EQ(r.neighbors.size(), 1u);
  EXPECT_EQ(r.neighbors[0].distance, 0.0);
}

TEST(Factual, FewerThanKAndNoCaseInClass) {
  // Identity hidden layer; class 1 iff second input wins.
  MlpModel model({testing::dense(2, 2, {1, 0, 0, 1}, {0, 0}),
                  testing::dense(2, 2, {1, 0, 0, 1}, {0, 0})},
                 Head::kSoftmax);
  const auto base = testing::numeric_base(
      {{1.0, 0.0}, {0.9, 0.1}, {0.0, 1.0}}, {0, 0, 1});
  const auto r = explain_factual(model, base, std::vector<double>{0.8, 0.0},
                                 FactualOptions{.k = 3});
  EXPECT_EQ(r.neighbors.size(), 2u);

  const auto zeros = testing::numeric_base({{1.0, 0.0}, {0.9, 0.1}}, {0, 0});
  EXPECT_THROW(explain_factual(model, zeros, std::vector<double>{0.0, 1.0},
                               FactualOptions{.k = 1}),
               ExplanationError);
}

TEST_F(FactualTest, PermutationInvariant) {
  std::vector<Case> shuffled = base_->cases();
  Rng rng(4);
  rng.shuffle(shuffled);
  const CaseBase permuted(base_->schema(), shuffled);
  for (std::size_t i = 0; i < base_->size(); i += 7) {
    const auto& q = (*base_)[i].values;
    const auto a = explain_factual(*model_, *base_, q, FactualOptions{.k = 4});
    const auto b = explain_factual(*model_, permuted, q, FactualOptions{.k = 4});
    ASSERT_EQ(a.neighbors.size(), b.neighbors.size());
    for (std::size_t n = 0; n < a.neighbors.size(); ++n) {
      EXPECT_EQ(a.neighbors[n].case_id, b.neighbors[n].case_id);
    }
  }
}

CaseBase regression_base(std::vector<double> xs) {
  FeatureSchema schema;
  schema.features = {Feature{.name = "week"}};
  schema.label_name = "yield";
  schema.task = Task::kRegression;
  std::vector<Case> cases;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    cases.push_back(Case{.id = static_cast<std::int64_t>(i),
                         .values = {xs[i]},
                         .outcome = 100.0 + 3.0 * xs[i]});
  }
  return CaseBase(schema, cases);
}

TEST(FactualRegression, SingletonVerbatimAndDuplicate) {
  MlpModel model({testing::dense(1, 3, {1.0, -1.0, 0.5}, {0.0, 0.2, 0.1}),
                  testing::dense(3, 1, {1.0, 1.0, 1.0}, {0.0})},
                 Head::kLinear);
  const auto one = regression_base({4.0});
  const auto r1 = explain_factual_regression(model, one, std::vector<double>{9.0},
                                             FactualOptions{.k = 2});
  ASSERT_EQ(r1.neighbors.size(), 1u);
  EXPECT_EQ(r1.neighbors[0].case_id, 0);
  EXPECT_EQ(r1.neighbors[0].outcome, 112.0);

  const auto many = regression_base({1.0, 2.0, 3.0, 4.0});
  const auto r2 = explain_factual_regression(model, many, std::vector<double>{3.0},
                                             FactualOptions{.k = 1});
  EXPECT_EQ(r2.neighbors[0].distance, 0.0);
  EXPECT_EQ(r2.neighbors[0].outcome, many.at_id(r2.neighbors[0].case_id).outcome);
  EXPECT_DOUBLE_EQ(r2.predicted, forward_values(model, std::vector<double>{3.0}).logits[0]);
  EXPECT_THROW(explain_factual_regression(model, one, std::vector<double>{1.0},
                                          FactualOptions{.k = 0}),
               ExplanationError);
}

}  // namespace
}  // namespace twincbr
