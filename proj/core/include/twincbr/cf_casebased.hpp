#ifndef TWINCBR_CF_CASEBASED_HPP_
#define TWINCBR_CF_CASEBASED_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "twincbr/data_model.hpp"
#include "twincbr/neural_twin.hpp"

namespace twincbr {

// A native counterfactual: two stored cases with different labels that differ
// in one or two features. `first` < `second`.
struct ExplanationCase {
  std::int64_t first = 0;
  std::int64_t second = 0;
  std::vector<std::size_t> diff;
  int first_class = 0;
  int second_class = 0;

  bool operator==(const ExplanationCase&) const = default;
};

// Exhaustive pair scan ordered by (first, second). Labels are ground truth.
std::vector<ExplanationCase> mine_explanation_cases(
    const CaseBase& base, double tau = kDefaultMatchTolerance,
    std::size_t max_diff = 2);

enum class CfProvenance { kExplanationCase, kWachter, kNunFallback };
std::string_view to_string(CfProvenance provenance);

struct Counterfactual {
  std::vector<double> query;
  std::optional<std::int64_t> query_id;
  int query_class = 0;
  std::vector<double> instance;
  std::vector<std::size_t> changed_features;
  // Requested target, or the instance's predicted class when none was given.
  int target_class = 0;
  int instance_class = 0;
  bool valid = false;
  CfProvenance provenance = CfProvenance::kExplanationCase;
  std::optional<std::size_t> xc_index;
  std::optional<std::int64_t> donor_id;
  // Candidates tried (case-based) or gradient steps taken (Wachter).
  std::size_t attempts = 0;
};

// One adaptation of the query by an explanation case: the query with the xc's
// difference features overwritten by the donor member's values.
struct CfCandidate {
  std::size_t xc_index = 0;
  std::int64_t like_id = 0;
  std::int64_t donor_id = 0;
  double distance = 0.0;  // query to the like member
  std::vector<double> values;
};

// Explanation cases usable for a query predicted `query_class`: one member
// labelled query_class (the like member), the other labelled differently (or
// `target` when given). Ordered by distance to the like member, then
// (first, second).
std::vector<CfCandidate> rank_candidates(
    std::span<const double> query, const CaseBase& base,
    std::span<const ExplanationCase> xcs, int query_class,
    std::optional<int> target = {});

struct CaseBasedOptions {
  double tau = kDefaultMatchTolerance;
  std::size_t max_attempts = 50;
  std::optional<int> target_class;
  std::optional<std::int64_t> query_id;
};

// Tries candidates nearest first and accepts the first the model predicts out
// of the query's class (into target_class when set). After max_attempts, or
// when candidates run out, falls back to the nearest unlike neighbour.
// Throws ExplanationError when neither route exists.
Counterfactual generate_cf(std::span<const double> query, const MlpModel& model,
                           const CaseBase& base,
                           std::span<const ExplanationCase> xcs,
                           const CaseBasedOptions& options = {});

struct WachterOptions {
  double lambda_init = 0.1;
  double lambda_growth = 2.0;
  std::size_t lambda_every = 100;
  double step = 0.05;
  std::size_t max_iters = 5000;
  double tau = kDefaultMatchTolerance;
};

// Gradient descent on lambda * (p_target(x') - 1)^2 + ||x' - x||^2 over the
// encoded numeric inputs; categorical inputs stay frozen. A result that never
// reaches target_class comes back with valid == false.
Counterfactual wachter_cf(std::span<const double> query, const MlpModel& model,
                          const CaseBase& base, int target_class,
                          const WachterOptions& options = {});

}  // namespace twincbr

#endif  // TWINCBR_CF_CASEBASED_HPP_
