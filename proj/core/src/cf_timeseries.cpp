#include "twincbr/cf_timeseries.hpp"

#include <algorithm>
#include <cmath>

#include "twincbr/errors.hpp"

namespace twincbr {

SeriesClassifier classifier_of(const MlpModel& model) {
  return [model](std::span<const double> series) {
    return forward_values(model, series).probs;
  };
}

std::vector<int> predict_all(const SeriesClassifier& classify,
                             const TimeSeriesDataset& dataset) {
  std::vector<int> out;
  out.reserve(dataset.size());
  for (const auto& inst : dataset.instances) {
    out.push_back(argmax(classify(inst.values)));
  }
  return out;
}

double euclidean(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return std::sqrt(sum);
}

std::size_t default_occlusion_window(std::size_t length) {
  return std::max<std::size_t>(1, length / 10);
}

ImportanceMap occlusion_importance(const SeriesClassifier& classify,
                                   std::span<const double> series,
                                   std::span<const double> baseline,
                                   std::size_t window) {
  const std::size_t length = series.size();
  if (window < 1 || window > length) {
    throw ExplanationError("occlusion window must lie in [1, " +
                           std::to_string(length) + "]");
  }
  if (baseline.size() != length) {
    throw ExplanationError("baseline signal length mismatch");
  }
  const auto base_probs = classify(series);
  const auto cls = static_cast<std::size_t>(argmax(base_probs));

  std::vector<double> total(length, 0.0);
  std::vector<std::size_t> covered(length, 0);
  std::vector<double> occluded(series.begin(), series.end());
  for (std::size_t start = 0; start + window <= length; ++start) {
    std::copy(baseline.begin() + start, baseline.begin() + start + window,
              occluded.begin() + start);
    const double drop = std::max(0.0, base_probs[cls] - classify(occluded)[cls]);
    std::copy(series.begin() + start, series.begin() + start + window,
              occluded.begin() + start);
    for (std::size_t t = start; t < start + window; ++t) {
      total[t] += drop;
      ++covered[t];
    }
  }
  ImportanceMap map;
  map.values.resize(length);
  for (std::size_t t = 0; t < length; ++t) {
    map.values[t] = total[t] / static_cast<double>(covered[t]);
  }
  return map;
}

NativeGuideResult native_guide_cf(std::span<const double> query,
                                  const SeriesClassifier& classify,
                                  const TimeSeriesDataset& dataset,
                                  std::span<const int> predictions,
                                  const ImportanceMap& importance,
                                  const NativeGuideOptions& options) {
  const std::size_t length = query.size();
  if (length == 0) throw ExplanationError("empty query series");
  if (importance.values.size() != length) {
    throw ExplanationError("importance map length mismatch");
  }
  if (predictions.size() != dataset.size()) {
    throw ExplanationError("one prediction per dataset instance is required");
  }
  NativeGuideResult r;
  r.query_class = argmax(classify(query));

  const TimeSeriesInstance* guide = nullptr;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& inst = dataset.instances[i];
    if (predictions[i] == r.query_class) continue;
    if (options.exclude_id && inst.id == *options.exclude_id) continue;
    if (inst.values.size() != length) {
      throw ExplanationError("dataset series length differs from the query");
    }
    const double d = euclidean(query, inst.values);
    if (guide == nullptr || d < r.distance_to_nun ||
        (d == r.distance_to_nun && inst.id < guide->id)) {
      guide = &inst;
      r.distance_to_nun = d;
      r.nun_class = predictions[i];
    }
  }
  if (guide == nullptr) {
    throw ExplanationError("no instance is predicted unlike the query");
  }
  r.nun_id = guide->id;

  const auto seed = static_cast<std::size_t>(argmax(importance.values));
  std::size_t lo = seed;
  std::size_t hi = seed;
  std::vector<double> candidate(query.begin(), query.end());
  candidate[seed] = guide->values[seed];
  bool right_turn = options.grow_right_first;
  while (true) {
    ++r.evaluations;
    if (argmax(classify(candidate)) == r.nun_class) {
      r.valid = true;
      break;
    }
    if (lo == 0 && hi == length - 1) {
      // Full window equals the NUN; only a non-deterministic classifier could
      // get here.
      break;
    }
    bool grow_right = right_turn;
    if (grow_right && hi == length - 1) grow_right = false;
    if (!grow_right && lo == 0) grow_right = true;
    if (grow_right) {
      ++hi;
      candidate[hi] = guide->values[hi];
    } else {
      --lo;
      candidate[lo] = guide->values[lo];
    }
    right_turn = !right_turn;
  }
  r.window_begin = lo;
  r.window_end = hi;
  r.distance_to_counterfactual = euclidean(query, candidate);
  r.counterfactual = std::move(candidate);
  return r;
}

}  // namespace twincbr
