#ifndef TWINCBR_FACTUAL_HPP_
#define TWINCBR_FACTUAL_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "twincbr/data_model.hpp"
#include "twincbr/neural_twin.hpp"
#include "twincbr/retrieval.hpp"

namespace twincbr {

struct FactualNeighbor {
  std::int64_t case_id = 0;
  double distance = 0.0;
  int predicted_class = 0;
  std::vector<double> contributions;
  // Auxiliary gradient x input attribution, per feature, for display.
  std::vector<double> input_attribution;
};

struct FactualExplanation {
  int predicted_class = 0;
  std::vector<double> query_contributions;
  std::vector<double> query_attribution;
  std::vector<FactualNeighbor> neighbors;
};

struct FactualOptions {
  std::size_t k = 1;
  // Set for in-sample queries so a case is not explained by itself.
  std::optional<std::int64_t> exclude_id;
};

// Nearest contribution-space training cases restricted to the query's
// predicted class. Throws ExplanationError when no training case is predicted
// in that class.
FactualExplanation explain_factual(const MlpModel& model, const CaseBase& base,
                                   const VectorIndex& contribution_index,
                                   std::span<const double> query,
                                   const FactualOptions& options);
FactualExplanation explain_factual(const MlpModel& model, const CaseBase& base,
                                   std::span<const double> query,
                                   const FactualOptions& options);

struct RegressionNeighbor {
  std::int64_t case_id = 0;
  double distance = 0.0;
  double outcome = 0.0;  // stored value, never re-predicted
};

struct RegressionFactual {
  double predicted = 0.0;
  std::vector<RegressionNeighbor> neighbors;
};

// Regression heads have no class to weight by; neighbours are searched in
// penultimate-activation space.
RegressionFactual explain_factual_regression(const MlpModel& model,
                                             const CaseBase& base,
                                             std::span<const double> query,
                                             const FactualOptions& options);

}  // namespace twincbr

#endif  // TWINCBR_FACTUAL_HPP_
