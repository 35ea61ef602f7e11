#include "twincbr/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "twincbr/errors.hpp"

namespace twincbr {

std::string_view to_string(Space space) {
  switch (space) {
    case Space::kFeature:
      return "feature";
    case Space::kContribution:
      return "contribution";
    case Space::kLatent:
      return "latent";
  }
  return "feature";
}

VectorIndex::VectorIndex(Space space, std::vector<std::int64_t> ids,
                         std::vector<std::vector<double>> vectors,
                         std::vector<int> classes, std::vector<bool> categorical,
                         std::vector<double> weights)
    : space_(space),
      ids_(std::move(ids)),
      vectors_(std::move(vectors)),
      classes_(std::move(classes)),
      categorical_(std::move(categorical)),
      weights_(std::move(weights)) {
  if (ids_.size() != vectors_.size() || ids_.size() != classes_.size()) {
    throw DataError("index ids, vectors and classes differ in length");
  }
  width_ = vectors_.empty() ? 0 : vectors_.front().size();
  for (const auto& v : vectors_) {
    if (v.size() != width_) throw DataError("index vectors differ in width");
  }
  if (!categorical_.empty() && categorical_.size() != width_) {
    throw DataError("categorical mask width mismatch");
  }
  if (!weights_.empty() && weights_.size() != width_) {
    throw DataError("weight vector has " + std::to_string(weights_.size()) +
                    " entries, expected " + std::to_string(width_));
  }
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (!positions_.emplace(ids_[i], i).second) {
      throw DataError("duplicate id " + std::to_string(ids_[i]) + " in index");
    }
  }
}

std::optional<std::size_t> VectorIndex::position(std::int64_t id) const {
  const auto it = positions_.find(id);
  if (it == positions_.end()) return std::nullopt;
  return it->second;
}

double VectorIndex::distance(std::span<const double> a,
                             std::span<const double> b) const {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d;
    if (!categorical_.empty() && categorical_[i]) {
      d = a[i] == b[i] ? 0.0 : 1.0;
    } else {
      d = a[i] - b[i];
    }
    sum += (weights_.empty() ? 1.0 : weights_[i]) * d * d;
  }
  return std::sqrt(sum);
}

std::vector<NeighborResult> knn(const VectorIndex& index,
                                std::span<const double> query,
                                const KnnQuery& options) {
  if (options.k == 0) throw ExplanationError("k must be >= 1");
  if (!index.empty() && query.size() != index.width()) {
    throw ModelError("query has " + std::to_string(query.size()) +
                     " entries, index vectors have " +
                     std::to_string(index.width()));
  }
  std::vector<NeighborResult> all;
  all.reserve(index.size());
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (options.class_filter && index.classes()[i] != *options.class_filter) {
      continue;
    }
    if (options.exclude_id && index.ids()[i] == *options.exclude_id) continue;
    all.push_back({index.ids()[i], index.distance(query, index.vectors()[i]),
                   index.space()});
  }
  if (all.empty()) throw ExplanationError("no candidates left after filtering");
  const auto less = [](const NeighborResult& a, const NeighborResult& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    return a.case_id < b.case_id;
  };
  const std::size_t k = std::min(options.k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k),
                    all.end(), less);
  all.resize(k);
  return all;
}

std::vector<double> feature_vector(const CaseBase& base,
                                   std::span<const double> values) {
  return base.normalize(values);
}

std::vector<double> contribution_vector(const MlpModel& model,
                                        std::span<const double> values) {
  return contributions(model, model.encode(values)).values;
}

std::vector<double> latent_vector(const MlpModel& model,
                                  std::span<const double> values) {
  return forward_values(model, values).penultimate;
}

namespace {

std::vector<std::int64_t> ids_of(const CaseBase& base) {
  std::vector<std::int64_t> ids;
  ids.reserve(base.size());
  for (const auto& c : base.cases()) ids.push_back(c.id);
  return ids;
}

}  // namespace

VectorIndex build_feature_index(const CaseBase& base, const MlpModel* model,
                                std::span<const double> weights) {
  std::vector<std::vector<double>> vectors;
  std::vector<int> classes;
  for (const auto& c : base.cases()) {
    vectors.push_back(feature_vector(base, c.values));
    classes.push_back(model != nullptr ? predict_class(*model, c.values)
                                       : c.label);
  }
  std::vector<bool> categorical;
  for (const auto& f : base.schema().features) categorical.push_back(!f.numeric());
  if (!weights.empty() && weights.size() != base.schema().size()) {
    throw DataError("weight vector has " + std::to_string(weights.size()) +
                    " entries, expected " +
                    std::to_string(base.schema().size()));
  }
  return VectorIndex(Space::kFeature, ids_of(base), std::move(vectors),
                     std::move(classes), std::move(categorical),
                     {weights.begin(), weights.end()});
}

VectorIndex build_contribution_index(const MlpModel& model,
                                     const CaseBase& base) {
  std::vector<std::vector<double>> vectors;
  std::vector<int> classes;
  for (const auto& c : base.cases()) {
    auto contrib = contributions(model, model.encode(c.values));
    classes.push_back(contrib.predicted_class);
    vectors.push_back(std::move(contrib.values));
  }
  return VectorIndex(Space::kContribution, ids_of(base), std::move(vectors),
                     std::move(classes));
}

VectorIndex build_latent_index(const MlpModel& model, const CaseBase& base) {
  std::vector<std::vector<double>> vectors;
  std::vector<int> classes;
  for (const auto& c : base.cases()) {
    auto pass = forward_values(model, c.values);
    classes.push_back(argmax(pass.logits));
    vectors.push_back(std::move(pass.penultimate));
  }
  return VectorIndex(Space::kLatent, ids_of(base), std::move(vectors),
                     std::move(classes));
}

NeighborResult nun(const VectorIndex& feature_index,
                   std::span<const double> normalized_query, int query_class) {
  std::optional<NeighborResult> best;
  for (std::size_t i = 0; i < feature_index.size(); ++i) {
    if (feature_index.classes()[i] == query_class) continue;
    const double d =
        feature_index.distance(normalized_query, feature_index.vectors()[i]);
    const std::int64_t id = feature_index.ids()[i];
    if (!best || d < best->distance ||
        (d == best->distance && id < best->case_id)) {
      best = NeighborResult{id, d, feature_index.space()};
    }
  }
  if (!best) {
    throw ExplanationError(
        "no nearest unlike neighbour: every case is predicted in the query's "
        "class");
  }
  return *best;
}

NeighborResult nun(std::span<const double> query_values, const CaseBase& base,
                   const MlpModel& model) {
  const auto index = build_feature_index(base, &model);
  return nun(index, feature_vector(base, query_values),
             predict_class(model, query_values));
}

int majority_class(std::span<const int> neighbour_classes) {
  if (neighbour_classes.empty()) throw ExplanationError("no neighbours to vote");
  std::map<int, std::size_t> votes;
  std::size_t top = 0;
  for (int c : neighbour_classes) top = std::max(top, ++votes[c]);
  for (int c : neighbour_classes) {
    if (votes[c] == top) return c;
  }
  return neighbour_classes.front();
}

double twin_fidelity(const MlpModel& model, const CaseBase& train,
                     std::span<const Case> eval,
                     const FidelityOptions& options) {
  if (options.k == 0) throw ExplanationError("k must be >= 1");
  if (eval.empty()) throw ExplanationError("empty evaluation set");
  VectorIndex index = [&] {
    switch (options.space) {
      case Space::kContribution:
        return build_contribution_index(model, train);
      case Space::kLatent:
        return build_latent_index(model, train);
      case Space::kFeature:
        break;
    }
    return build_feature_index(train, &model);
  }();
  std::size_t agree = 0;
  for (const auto& c : eval) {
    std::vector<double> query;
    switch (options.space) {
      case Space::kContribution:
        query = contribution_vector(model, c.values);
        break;
      case Space::kLatent:
        query = latent_vector(model, c.values);
        break;
      case Space::kFeature:
        query = feature_vector(train, c.values);
        break;
    }
    KnnQuery q{.k = options.k};
    if (options.exclude_self) q.exclude_id = c.id;
    const auto neighbours = knn(index, query, q);
    std::vector<int> classes;
    for (const auto& n : neighbours) {
      classes.push_back(index.classes()[*index.position(n.case_id)]);
    }
    if (majority_class(classes) == predict_class(model, c.values)) ++agree;
  }
  return static_cast<double>(agree) / static_cast<double>(eval.size());
}

}  // namespace twincbr
