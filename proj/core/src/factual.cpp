#include "twincbr/factual.hpp"

#include "twincbr/errors.hpp"

namespace twincbr {

FactualExplanation explain_factual(const MlpModel& model, const CaseBase& base,
                                   const VectorIndex& contribution_index,
                                   std::span<const double> query,
                                   const FactualOptions& options) {
  const auto x = model.encode(query);
  const auto contrib = contributions(model, x);

  FactualExplanation out;
  out.predicted_class = contrib.predicted_class;
  out.query_contributions = contrib.values;
  out.query_attribution = gradient_times_input(model, query);

  std::vector<NeighborResult> hits;
  try {
    hits = knn(contribution_index, contrib.values,
               KnnQuery{.k = options.k,
                        .class_filter = contrib.predicted_class,
                        .exclude_id = options.exclude_id});
  } catch (const ExplanationError&) {
    throw ExplanationError("no training case is predicted in class " +
                           std::to_string(contrib.predicted_class));
  }
  for (const auto& hit : hits) {
    const auto pos = *contribution_index.position(hit.case_id);
    const Case& c = base.at_id(hit.case_id);
    out.neighbors.push_back(FactualNeighbor{
        .case_id = hit.case_id,
        .distance = hit.distance,
        .predicted_class = contribution_index.classes()[pos],
        .contributions = contribution_index.vectors()[pos],
        .input_attribution = gradient_times_input(model, c.values),
    });
  }
  return out;
}

FactualExplanation explain_factual(const MlpModel& model, const CaseBase& base,
                                   std::span<const double> query,
                                   const FactualOptions& options) {
  return explain_factual(model, base, build_contribution_index(model, base),
                         query, options);
}

RegressionFactual explain_factual_regression(const MlpModel& model,
                                             const CaseBase& base,
                                             std::span<const double> query,
                                             const FactualOptions& options) {
  if (base.empty()) throw ExplanationError("empty case base");
  const auto pass = forward_values(model, query);
  const auto index = build_latent_index(model, base);
  RegressionFactual out;
  out.predicted = pass.logits.front();
  for (const auto& hit :
       knn(index, pass.penultimate,
           KnnQuery{.k = options.k, .exclude_id = options.exclude_id})) {
    out.neighbors.push_back(RegressionNeighbor{
        .case_id = hit.case_id,
        .distance = hit.distance,
        .outcome = base.at_id(hit.case_id).outcome,
    });
  }
  return out;
}

}  // namespace twincbr
