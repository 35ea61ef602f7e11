#ifndef TWINCBR_RETRIEVAL_HPP_
#define TWINCBR_RETRIEVAL_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "twincbr/data_model.hpp"
#include "twincbr/neural_twin.hpp"

namespace twincbr {

enum class Space { kFeature, kContribution, kLatent };
std::string_view to_string(Space space);

struct NeighborResult {
  std::int64_t case_id = 0;
  double distance = 0.0;
  Space space = Space::kFeature;

  bool operator==(const NeighborResult&) const = default;
};

// One vector per case, searched by exhaustive scan. `classes` holds the class
// each entry answers to for filtering (model-predicted when a model built the
// index). Feature-space indexes mark categorical slots, which compare by 0/1
// overlap; optional weights scale each squared term.
class VectorIndex {
 public:
  VectorIndex(Space space, std::vector<std::int64_t> ids,
              std::vector<std::vector<double>> vectors, std::vector<int> classes,
              std::vector<bool> categorical = {},
              std::vector<double> weights = {});

  Space space() const { return space_; }
  std::size_t size() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }
  std::size_t width() const { return width_; }
  const std::vector<std::int64_t>& ids() const { return ids_; }
  const std::vector<std::vector<double>>& vectors() const { return vectors_; }
  const std::vector<int>& classes() const { return classes_; }

  std::optional<std::size_t> position(std::int64_t id) const;
  double distance(std::span<const double> a, std::span<const double> b) const;

 private:
  Space space_;
  std::vector<std::int64_t> ids_;
  std::vector<std::vector<double>> vectors_;
  std::vector<int> classes_;
  std::vector<bool> categorical_;
  std::vector<double> weights_;
  std::unordered_map<std::int64_t, std::size_t> positions_;
  std::size_t width_ = 0;
};

struct KnnQuery {
  std::size_t k = 1;
  std::optional<int> class_filter;
  std::optional<std::int64_t> exclude_id;
};

// The k nearest entries, ascending by (distance, case_id). Fewer than k only
// when the filtered index is smaller; throws ExplanationError when empty.
std::vector<NeighborResult> knn(const VectorIndex& index,
                                std::span<const double> query,
                                const KnnQuery& options);

// Normalized feature vectors. Classes are model predictions when `model` is
// given, ground-truth labels otherwise.
VectorIndex build_feature_index(const CaseBase& base,
                                const MlpModel* model = nullptr,
                                std::span<const double> weights = {});
// Each case's contributions towards its own predicted class.
VectorIndex build_contribution_index(const MlpModel& model,
                                     const CaseBase& base);
// Penultimate activations.
VectorIndex build_latent_index(const MlpModel& model, const CaseBase& base);

// Query vectors in the same spaces.
std::vector<double> feature_vector(const CaseBase& base,
                                   std::span<const double> values);
std::vector<double> contribution_vector(const MlpModel& model,
                                        std::span<const double> values);
std::vector<double> latent_vector(const MlpModel& model,
                                  std::span<const double> values);

// Nearest case whose predicted class differs from `query_class`.
NeighborResult nun(const VectorIndex& feature_index,
                   std::span<const double> normalized_query, int query_class);
NeighborResult nun(std::span<const double> query_values, const CaseBase& base,
                   const MlpModel& model);

struct FidelityOptions {
  std::size_t k = 3;
  Space space = Space::kContribution;
  bool exclude_self = false;
};

// Fraction of eval cases where the majority predicted class among the k
// nearest training neighbours equals the model's prediction. Majority ties go
// to the class of the nearest tied neighbour.
double twin_fidelity(const MlpModel& model, const CaseBase& train,
                     std::span<const Case> eval, const FidelityOptions& options);

// Majority vote over neighbour classes (listed nearest first).
int majority_class(std::span<const int> neighbour_classes);

}  // namespace twincbr

#endif  // TWINCBR_RETRIEVAL_HPP_
