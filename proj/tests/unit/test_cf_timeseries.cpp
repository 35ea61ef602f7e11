#include <algorithm>
#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "test_support.hpp"
#include "twincbr/cf_timeseries.hpp"
#include "twincbr/errors.hpp"

namespace twincbr {
namespace {

// Class 1 iff the sum is non-negative.
std::vector<double> sum_sign(std::span<const double> s) {
  const double total = std::accumulate(s.begin(), s.end(), 0.0);
  return total >= 0 ? std::vector<double>{0.0, 1.0} : std::vector<double>{1.0, 0.0};
}

// Smooth detector of a bump over timesteps 10..14.
std::vector<double> bump_detector(std::span<const double> s) {
  double inside = 0.0;
  for (std::size_t t = 10; t <= 14; ++t) inside += s[t];
  const double p = 1.0 / (1.0 + std::exp(-5.0 * (inside - 2.5)));
  return {1.0 - p, p};
}

TimeSeriesDataset dataset_of(std::vector<std::vector<double>> rows) {
  TimeSeriesDataset d;
  d.class_labels = {"neg", "pos"};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    d.instances.push_back(TimeSeriesInstance{
        .id = static_cast<std::int64_t>(i), .values = rows[i], .label = 0});
  }
  return d;
}

TEST(NativeGuide, SumSignExample) {
  const SeriesClassifier classify = sum_sign;
  const auto data = dataset_of({{-1, -1, -1, -1}, {2, 2, 2, 2}});
  const auto preds = predict_all(classify, data);
  const ImportanceMap uniform{.values = {1, 1, 1, 1}};
  const auto r = native_guide_cf(std::vector<double>{1, 1, 1, 1}, classify, data,
                                 preds, uniform);
  EXPECT_EQ(r.counterfactual, (std::vector<double>{-1, -1, -1, 1}));
  EXPECT_EQ(r.window_begin, 0u);
  EXPECT_EQ(r.window_end, 2u);
  EXPECT_EQ(r.nun_id, 0);
  EXPECT_TRUE(r.valid);
  EXPECT_LT(r.distance_to_counterfactual, r.distance_to_nun);
}

TEST(NativeGuide, SeedAloneCanFlipAndFullLengthEqualsNun) {
  const SeriesClassifier classify = sum_sign;
  const auto data = dataset_of({{-9, 0, 0, 0}, {1, -5, 1, 1}});
  const auto preds = predict_all(classify, data);
  // Tied maximum at t=1 and t=2 seeds the lower index.
  const ImportanceMap imp{.values = {0.1, 0.5, 0.5, 0.0}};
  const auto one = native_guide_cf(std::vector<double>{1, 1, 1, 1}, classify, data,
                                   preds, imp);
  EXPECT_EQ(one.nun_id, 1);  // nearer than id 0
  EXPECT_EQ(one.window_begin, 1u);
  EXPECT_EQ(one.window_end, 1u);
  EXPECT_EQ(one.evaluations, 1u);

  const auto far = dataset_of({{-1, -1, -1, -1}});
  const auto full = native_guide_cf(std::vector<double>{3, 3, 3, 3}, classify,
                                    far, predict_all(classify, far),
                                    ImportanceMap{.values = {0, 0, 0, 1}});
  EXPECT_EQ(full.counterfactual, far.instances[0].values);
  EXPECT_TRUE(full.valid);
  EXPECT_EQ(full.window_begin, 0u);
  EXPECT_EQ(full.window_end, 3u);
  EXPECT_DOUBLE_EQ(full.distance_to_counterfactual, full.distance_to_nun);

  const auto alike = dataset_of({{1, 1, 1, 1}});
  EXPECT_THROW(native_guide_cf(std::vector<double>{1, 1, 1, 1}, classify, alike,
                               predict_all(classify, alike), imp),
               ExplanationError);
}

TEST(Occlusion, BumpClassifierPeaksInsideTheBump) {
  std::vector<double> series(30, 0.0);
  for (std::size_t t = 10; t <= 14; ++t) series[t] = 1.0;
  const std::vector<double> baseline(30, 0.0);
  const auto map = occlusion_importance(bump_detector, series, baseline, 3);
  ASSERT_EQ(map.values.size(), 30u);
  const auto top = std::max_element(map.values.begin(), map.values.end()) - map.values.begin();
  EXPECT_GE(top, 10);
  EXPECT_LE(top, 14);
  for (std::size_t t = 0; t < 30; ++t) {
    EXPECT_GE(map.values[t], 0.0);
    if (t < 8 || t > 16) EXPECT_EQ(map.values[t], 0.0) << t;
  }
}

TEST(Occlusion, ConstantClassifierAndFullWindow) {
  const SeriesClassifier constant = [](std::span<const double>) {
    return std::vector<double>{0.3, 0.7};
  };
  const std::vector<double> s{1, 2, 3, 4, 5};
  const std::vector<double> zero(5, 0.0);
  for (double v : occlusion_importance(constant, s, zero, 2).values) EXPECT_EQ(v, 0.0);

  std::vector<double> bumped(30, 0.0);
  for (std::size_t t = 10; t <= 14; ++t) bumped[t] = 1.0;
  const auto full = occlusion_importance(bump_detector, bumped, std::vector<double>(30, 0.0), 30);
  const double drop = bump_detector(bumped)[1] - bump_detector(std::vector<double>(30, 0.0))[1];
  for (double v : full.values) EXPECT_DOUBLE_EQ(v, drop);

  EXPECT_THROW(occlusion_importance(constant, s, zero, 0), ExplanationError);
  EXPECT_THROW(occlusion_importance(constant, s, zero, 6), ExplanationError);
  EXPECT_EQ(default_occlusion_window(64), 6u);
  EXPECT_EQ(default_occlusion_window(5), 1u);
}

// Windows visited by right-then-left growth from `seed`, clamped at bounds.
std::vector<std::pair<std::size_t, std::size_t>> growth_sequence(std::size_t seed,
                                                                 std::size_t length) {
  std::vector<std::pair<std::size_t, std::size_t>> out{{seed, seed}};
  std::size_t lo = seed;
  std::size_t hi = seed;
  bool right = true;
  while (hi - lo + 1 < length) {
    if ((right && hi + 1 < length) || lo == 0) {
      ++hi;
    } else {
      --lo;
    }
    right = !right;
    out.emplace_back(lo, hi);
  }
  return out;
}

TEST(NativeGuide, TrainedModelProperties) {
  const auto data = synth_series(40, 32, 6);
  const auto model =
      fit_model(data.to_casebase(), {12}, TrainConfig{.epochs = 60, .seed = 2}).model;
  const auto classify = classifier_of(model);
  const auto preds = predict_all(classify, data);
  const auto baseline = data.mean_signal();
  int checked = 0;
  for (std::size_t i = 0; i < data.size(); i += 3) {
    const auto& q = data.instances[i].values;
    const auto imp = occlusion_importance(classify, q, baseline, default_occlusion_window(32));
    const auto r = native_guide_cf(q, classify, data, preds, imp);
    ++checked;
    ASSERT_TRUE(r.valid);
    EXPECT_EQ(argmax(classify(r.counterfactual)), r.nun_class);
    EXPECT_NE(r.nun_class, r.query_class);
    EXPECT_LE(r.distance_to_counterfactual, r.distance_to_nun + 1e-12);
    const auto& guide = data.find(r.nun_id)->values;
    for (std::size_t t = 0; t < q.size(); ++t) {
      if (t < r.window_begin || t > r.window_end) {
        EXPECT_EQ(r.counterfactual[t], q[t]);
      } else {
        EXPECT_EQ(r.counterfactual[t], guide[t]);
      }
    }
    // First flipping window of the growth sequence.
    const auto seed = static_cast<std::size_t>(argmax(imp.values));
    for (const auto& [lo, hi] : growth_sequence(seed, q.size())) {
      std::vector<double> cand = q;
      for (std::size_t t = lo; t <= hi; ++t) cand[t] = guide[t];
      if (argmax(classify(cand)) == r.nun_class) {
        EXPECT_EQ(lo, r.window_begin);
        EXPECT_EQ(hi, r.window_end);
        break;
      }
    }
  }
  EXPECT_GT(checked, 0);
}

}  // namespace
}  // namespace twincbr
