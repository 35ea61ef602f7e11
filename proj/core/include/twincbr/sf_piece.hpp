#ifndef TWINCBR_SF_PIECE_HPP_
#define TWINCBR_SF_PIECE_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "twincbr/data_model.hpp"
#include "twincbr/neural_twin.hpp"
#include "twincbr/retrieval.hpp"

namespace twincbr {

// Two-part model of rectified activations per (class, latent feature): the
// probability of a positive activation and the mean/std of the positive part.
struct HurdleStats {
  std::size_t num_classes = 0;
  std::size_t width = 0;
  std::vector<std::vector<double>> p_pos;   // [class][feature]
  std::vector<std::vector<double>> mu_pos;  // 0 when no positive sample
  std::vector<std::vector<double>> sd_pos;  // population std
  std::vector<std::size_t> counts;          // samples per class

  bool usable(int cls) const;
  // Hurdle expectation p_pos * mu_pos.
  double expected(int cls, std::size_t feature) const;
};

HurdleStats fit_hurdle(std::span<const std::vector<double>> latents,
                       std::span<const int> classes, std::size_t num_classes);
// Penultimate activations of every training case, partitioned by predicted
// class.
HurdleStats fit_hurdle(const MlpModel& model, const CaseBase& base);

enum class ExceptionReason {
  kZeroWhereUsuallyPositive,
  kPositiveWhereUsuallyZero,
  kTailValue,
};
std::string_view to_string(ExceptionReason reason);

struct ExceptionalFeature {
  std::size_t index = 0;
  double observed = 0.0;
  double score = 0.0;  // probability of the observation under the target class
  double expected = 0.0;
  ExceptionReason reason = ExceptionReason::kTailValue;
};

// Latent features whose value is improbable (score < alpha) for the target
// class, sorted ascending by score then index. alpha must lie in [0, 0.5);
// alpha == 0 yields no features.
std::vector<ExceptionalFeature> exceptional_features(
    const HurdleStats& stats, std::span<const double> latent, int target,
    double alpha);

struct PerturbationStep {
  std::size_t feature = 0;
  double before = 0.0;
  double after = 0.0;
  int predicted_class = 0;
};

struct PieceResult {
  int query_class = 0;
  int target_class = 0;
  std::vector<double> query_latent;
  std::vector<ExceptionalFeature> exceptional;
  std::vector<PerturbationStep> trace;

  std::vector<double> semifactual_latent;
  NeighborResult semifactual_case;
  // True when the first perturbation already flips, so the semi-factual is the
  // unmodified query latent.
  bool semifactual_degenerate = false;

  std::optional<std::vector<double>> counterfactual_latent;
  std::optional<NeighborResult> counterfactual_case;
  std::optional<std::size_t> steps_to_flip;
};

struct PieceOptions {
  double alpha = 0.05;
};

// Sets exceptional features to their expected target-class values one at a
// time (most exceptional first), re-evaluating the output head after each.
// The first state predicted `target` is the counterfactual; the last state
// still predicted the query's class before it is the semi-factual. Both are
// realized as nearest training cases in latent space.
PieceResult generate_sf_cf(const MlpModel& model, const HurdleStats& stats,
                           const VectorIndex& latent_index,
                           std::span<const double> query, int target,
                           const PieceOptions& options = {});

// Training case whose penultimate activation is nearest the given latent.
NeighborResult realize_case(std::span<const double> latent,
                            const VectorIndex& latent_index);
const Case& realize_case(std::span<const double> latent, const CaseBase& base,
                         const MlpModel& model);

}  // namespace twincbr

#endif  // TWINCBR_SF_PIECE_HPP_
