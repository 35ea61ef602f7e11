#ifndef TWINCBR_AUGMENTATION_HPP_
#define TWINCBR_AUGMENTATION_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "twincbr/cf_casebased.hpp"
#include "twincbr/data_model.hpp"
#include "twincbr/metrics_report.hpp"
#include "twincbr/neural_twin.hpp"

namespace twincbr {

struct CfAugmentOptions {
  double tau = kDefaultMatchTolerance;
  // Candidates tried per source case over all cycles.
  std::size_t max_attempts = 50;
};

struct CfSynthetic {
  Case synthetic;
  std::int64_t source_id = 0;
  std::int64_t donor_id = 0;
  std::vector<std::size_t> changed_features;
};

// Case-based counterfactuals pushed across the boundary into target_class.
// Sources are the non-target cases, nearest to their unlike neighbour first;
// each cycle gives every source one more model-validated candidate. Duplicates
// (of each other or of stored cases) are dropped. Ids continue from
// base.next_id(). Throws ExplanationError when no explanation case crosses
// into target_class and no case is predicted target_class.
std::vector<CfSynthetic> cf_augment(const CaseBase& base, const MlpModel& model,
                                    std::span<const ExplanationCase> xcs,
                                    int target_class, std::size_t n_needed,
                                    const CfAugmentOptions& options = {});
std::vector<CfSynthetic> cf_augment(const CaseBase& base, const MlpModel& model,
                                    int target_class, std::size_t n_needed,
                                    const CfAugmentOptions& options = {});

struct SmoteSynthetic {
  Case synthetic;
  std::int64_t base_id = 0;
  std::int64_t neighbor_id = 0;
  double gap = 0.0;
};

// Numeric features interpolate x + gap * (z - x) towards one of the k nearest
// same-class neighbours; categoricals copy x. Needs >= 2 target-class cases.
std::vector<SmoteSynthetic> smote(const CaseBase& base, int target_class,
                                  std::size_t k, std::size_t n_needed,
                                  std::uint64_t seed);

// Shared helpers for callers that want plain cases.
std::vector<Case> synthetic_cases(std::span<const CfSynthetic> items);
std::vector<Case> synthetic_cases(std::span<const SmoteSynthetic> items);

// Cases needed to bring target_class level with the largest class.
std::size_t balancing_count(const CaseBase& base, int target_class);

struct ModelSpec {
  std::vector<std::size_t> hidden{8};
  TrainConfig train;
};

struct EvalRow {
  std::string name;
  std::size_t train_size = 0;
  ClassificationScores scores;
};

// Trains one fresh model per training set (base first, then each variant)
// with the same spec and scores it on the holdout. Throws DataError on a schema
// mismatch or when the holdout shares case ids with a training set. Up to
// `threads` runs train concurrently; results do not depend on it.
std::vector<EvalRow> retrain_eval(
    const CaseBase& base,
    std::span<const std::pair<std::string, CaseBase>> variants,
    const CaseBase& holdout, const ModelSpec& spec, std::size_t threads = 1);

}  // namespace twincbr

#endif  // TWINCBR_AUGMENTATION_HPP_
