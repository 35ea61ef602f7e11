#ifndef TWINCBR_TESTS_ORACLES_HPP_
#define TWINCBR_TESTS_ORACLES_HPP_

// Independent reference implementations: plain loops over raw data, sharing
// no code with the library beyond the data types.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "twincbr/data_model.hpp"

namespace twincbr::oracle {

struct Hit {
  std::int64_t id;
  double distance;
};

// Weighted Euclidean over slots; categorical slots compare by equality.
inline double slot_distance(const std::vector<double>& a,
                            const std::vector<double>& b,
                            const std::vector<bool>& categorical = {},
                            const std::vector<double>& weights = {}) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    if (!categorical.empty() && categorical[i]) d = a[i] == b[i] ? 0.0 : 1.0;
    const double w = weights.empty() ? 1.0 : weights[i];
    sum += w * d * d;
  }
  return std::sqrt(sum);
}

// Full sort by (distance, id), then truncate.
inline std::vector<Hit> brute_knn(const std::vector<std::int64_t>& ids,
                                  const std::vector<std::vector<double>>& vectors,
                                  const std::vector<int>& classes,
                                  const std::vector<double>& query, std::size_t k,
                                  std::optional<int> class_filter = {},
                                  std::optional<std::int64_t> exclude = {},
                                  const std::vector<bool>& categorical = {},
                                  const std::vector<double>& weights = {}) {
  std::vector<Hit> all;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (class_filter && classes[i] != *class_filter) continue;
    if (exclude && ids[i] == *exclude) continue;
    all.push_back({ids[i], slot_distance(vectors[i], query, categorical, weights)});
  }
  std::sort(all.begin(), all.end(), [](const Hit& x, const Hit& y) {
    if (x.distance != y.distance) return x.distance < y.distance;
    return x.id < y.id;
  });
  if (all.size() > k) all.resize(k);
  return all;
}

// Scaled vector of a case, computed from the schema's observed ranges.
inline std::vector<double> scaled(const FeatureSchema& schema,
                                  const std::vector<double>& values) {
  std::vector<double> out(values.size());
  for (std::size_t f = 0; f < values.size(); ++f) {
    const auto& feat = schema.features[f];
    if (!feat.numeric()) {
      out[f] = values[f];
    } else if (feat.max > feat.min) {
      out[f] = (values[f] - feat.min) / (feat.max - feat.min);
    } else {
      out[f] = 0.0;
    }
  }
  return out;
}

inline std::vector<bool> categorical_mask(const FeatureSchema& schema) {
  std::vector<bool> mask;
  for (const auto& f : schema.features) mask.push_back(!f.numeric());
  return mask;
}

// Pairs of stored cases with different labels differing in 1..max_diff
// features, by a double loop over ids.
struct Pair {
  std::int64_t first;
  std::int64_t second;
  std::vector<std::size_t> diff;
};

inline std::vector<Pair> brute_pairs(const CaseBase& base, double tau,
                                     std::size_t max_diff) {
  std::vector<const Case*> order;
  for (const auto& c : base.cases()) order.push_back(&c);
  std::sort(order.begin(), order.end(),
            [](const Case* a, const Case* b) { return a->id < b->id; });
  const auto& schema = base.schema();
  std::vector<Pair> out;
  for (std::size_t i = 0; i < order.size(); ++i) {
    for (std::size_t j = i + 1; j < order.size(); ++j) {
      if (order[i]->label == order[j]->label) continue;
      const auto a = scaled(schema, order[i]->values);
      const auto b = scaled(schema, order[j]->values);
      std::vector<std::size_t> diff;
      for (std::size_t f = 0; f < a.size(); ++f) {
        const bool differs = schema.features[f].numeric()
                                 ? std::abs(a[f] - b[f]) > tau
                                 : a[f] != b[f];
        if (differs) diff.push_back(f);
      }
      if (!diff.empty() && diff.size() <= max_diff) {
        out.push_back({order[i]->id, order[j]->id, diff});
      }
    }
  }
  return out;
}

}  // namespace twincbr::oracle

#endif  // TWINCBR_TESTS_ORACLES_HPP_
