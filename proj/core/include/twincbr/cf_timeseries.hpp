#ifndef TWINCBR_CF_TIMESERIES_HPP_
#define TWINCBR_CF_TIMESERIES_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "twincbr/data_model.hpp"
#include "twincbr/neural_twin.hpp"

namespace twincbr {

// Black-box classifier over raw series: returns class probabilities.
using SeriesClassifier =
    std::function<std::vector<double>(std::span<const double>)>;

// Wraps a trained network (copied) as a SeriesClassifier.
SeriesClassifier classifier_of(const MlpModel& model);

std::vector<int> predict_all(const SeriesClassifier& classify,
                             const TimeSeriesDataset& dataset);

struct ImportanceMap {
  std::vector<double> values;
  std::string method = "occlusion";
};

// Slides a window of width `window` over the series, replacing it with the
// baseline signal, and records the (floored at zero) drop in the
// predicted-class probability. Each timestep gets the mean drop of the windows
// covering it.
ImportanceMap occlusion_importance(const SeriesClassifier& classify,
                                   std::span<const double> series,
                                   std::span<const double> baseline,
                                   std::size_t window);

std::size_t default_occlusion_window(std::size_t length);

struct NativeGuideOptions {
  std::optional<std::int64_t> exclude_id;
  // Growth alternates right-then-left from the seed (left-then-right if false).
  bool grow_right_first = true;
};

struct NativeGuideResult {
  std::vector<double> counterfactual;
  std::size_t window_begin = 0;  // inclusive
  std::size_t window_end = 0;    // inclusive
  std::int64_t nun_id = 0;
  int query_class = 0;
  int nun_class = 0;
  bool valid = false;
  double distance_to_counterfactual = 0.0;
  double distance_to_nun = 0.0;
  std::size_t evaluations = 0;
};

// Copies an ever-growing window of the nearest unlike neighbour into the query,
// seeded at the most important timestep, until the prediction becomes the
// NUN's class. `predictions` holds the classifier's label for every dataset
// instance. Throws ExplanationError when no instance is predicted unlike the
// query.
NativeGuideResult native_guide_cf(std::span<const double> query,
                                  const SeriesClassifier& classify,
                                  const TimeSeriesDataset& dataset,
                                  std::span<const int> predictions,
                                  const ImportanceMap& importance,
                                  const NativeGuideOptions& options = {});

double euclidean(std::span<const double> a, std::span<const double> b);

}  // namespace twincbr

#endif  // TWINCBR_CF_TIMESERIES_HPP_
