#include "twincbr/cf_casebased.hpp"

#include <algorithm>
#include <cmath>

#include "twincbr/errors.hpp"
#include "twincbr/retrieval.hpp"

namespace twincbr {

std::string_view to_string(CfProvenance provenance) {
  switch (provenance) {
    case CfProvenance::kExplanationCase:
      return "explanation_case";
    case CfProvenance::kWachter:
      return "wachter";
    case CfProvenance::kNunFallback:
      return "nun_fallback";
  }
  return "explanation_case";
}

std::vector<ExplanationCase> mine_explanation_cases(const CaseBase& base,
                                                    double tau,
                                                    std::size_t max_diff) {
  if (!(tau >= 0.0 && tau < 1.0)) {
    throw ExplanationError("match tolerance must lie in [0, 1)");
  }
  std::vector<ExplanationCase> out;
  const auto& cases = base.cases();
  for (std::size_t i = 0; i < cases.size(); ++i) {
    for (std::size_t j = i + 1; j < cases.size(); ++j) {
      const Case& a = cases[i];
      const Case& b = cases[j];
      if (a.label == b.label) continue;
      auto diff = diff_features(base, a.values, b.values, tau);
      if (diff.empty() || diff.size() > max_diff) continue;
      const bool a_first = a.id < b.id;
      const Case& lo = a_first ? a : b;
      const Case& hi = a_first ? b : a;
      out.push_back(ExplanationCase{.first = lo.id,
                                    .second = hi.id,
                                    .diff = std::move(diff),
                                    .first_class = lo.label,
                                    .second_class = hi.label});
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) {
    return std::pair(x.first, x.second) < std::pair(y.first, y.second);
  });
  return out;
}

std::vector<CfCandidate> rank_candidates(std::span<const double> query,
                                         const CaseBase& base,
                                         std::span<const ExplanationCase> xcs,
                                         int query_class,
                                         std::optional<int> target) {
  std::vector<CfCandidate> out;
  std::vector<std::pair<std::int64_t, std::int64_t>> keys;
  for (std::size_t k = 0; k < xcs.size(); ++k) {
    const auto& xc = xcs[k];
    std::int64_t like_id;
    std::int64_t donor_id;
    int donor_class;
    if (xc.first_class == query_class) {
      like_id = xc.first;
      donor_id = xc.second;
      donor_class = xc.second_class;
    } else if (xc.second_class == query_class) {
      like_id = xc.second;
      donor_id = xc.first;
      donor_class = xc.first_class;
    } else {
      continue;
    }
    if (target && donor_class != *target) continue;
    const Case& like = base.at_id(like_id);
    const Case& donor = base.at_id(donor_id);
    CfCandidate cand{.xc_index = k,
                     .like_id = like_id,
                     .donor_id = donor_id,
                     .distance = distance(base, query, like.values),
                     .values = {query.begin(), query.end()}};
    for (std::size_t f : xc.diff) cand.values[f] = donor.values[f];
    out.push_back(std::move(cand));
  }
  std::sort(out.begin(), out.end(), [&](const auto& a, const auto& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    const auto& xa = xcs[a.xc_index];
    const auto& xb = xcs[b.xc_index];
    return std::pair(xa.first, xa.second) < std::pair(xb.first, xb.second);
  });
  return out;
}

Counterfactual generate_cf(std::span<const double> query, const MlpModel& model,
                           const CaseBase& base,
                           std::span<const ExplanationCase> xcs,
                           const CaseBasedOptions& options) {
  Counterfactual cf;
  cf.query.assign(query.begin(), query.end());
  cf.query_id = options.query_id;
  cf.query_class = predict_class(model, query);
  if (options.target_class && *options.target_class == cf.query_class) {
    throw ExplanationError("query is already predicted in the target class");
  }
  const auto accepts = [&](int predicted) {
    return predicted != cf.query_class &&
           (!options.target_class || predicted == *options.target_class);
  };

  const auto candidates =
      rank_candidates(query, base, xcs, cf.query_class, options.target_class);
  for (const auto& cand : candidates) {
    if (cf.attempts >= options.max_attempts) break;
    ++cf.attempts;
    const int predicted = predict_class(model, cand.values);
    if (!accepts(predicted)) continue;
    cf.instance = cand.values;
    cf.instance_class = predicted;
    cf.target_class = options.target_class.value_or(predicted);
    cf.valid = true;
    cf.provenance = CfProvenance::kExplanationCase;
    cf.xc_index = cand.xc_index;
    cf.donor_id = cand.donor_id;
    cf.changed_features = diff_features(base, query, cf.instance, options.tau);
    return cf;
  }

  // Fallback: copy the nearest case predicted out of (or into) the class.
  const auto index = build_feature_index(base, &model);
  const auto normalized = feature_vector(base, query);
  NeighborResult neighbour;
  try {
    if (options.target_class) {
      neighbour = knn(index, normalized,
                      KnnQuery{.k = 1, .class_filter = options.target_class})
                      .front();
    } else {
      neighbour = nun(index, normalized, cf.query_class);
    }
  } catch (const ExplanationError&) {
    throw ExplanationError(
        "no counterfactual exists: no usable explanation case and no "
        "unlike-class case");
  }
  const Case& donor = base.at_id(neighbour.case_id);
  cf.instance = donor.values;
  cf.instance_class = predict_class(model, cf.instance);
  cf.target_class = options.target_class.value_or(cf.instance_class);
  cf.valid = accepts(cf.instance_class);
  cf.provenance = CfProvenance::kNunFallback;
  cf.donor_id = donor.id;
  cf.changed_features = diff_features(base, query, cf.instance, options.tau);
  return cf;
}

Counterfactual wachter_cf(std::span<const double> query, const MlpModel& model,
                          const CaseBase& base, int target_class,
                          const WachterOptions& options) {
  if (model.head() != Head::kSoftmax) {
    throw ModelError("counterfactuals need a classification head");
  }
  if (target_class < 0 ||
      static_cast<std::size_t>(target_class) >= model.num_outputs()) {
    throw ExplanationError("target class out of range");
  }
  Counterfactual cf;
  cf.query.assign(query.begin(), query.end());
  cf.query_class = predict_class(model, query);
  cf.target_class = target_class;
  cf.provenance = CfProvenance::kWachter;
  cf.instance = cf.query;
  cf.instance_class = cf.query_class;
  if (cf.query_class == target_class) {
    cf.valid = true;
    return cf;
  }

  const auto& enc = model.encoding();
  const auto origin = model.encode(query);
  std::vector<bool> free(origin.size(), enc.identity());
  std::vector<bool> frozen_feature(query.size(), true);
  if (!enc.identity()) {
    for (std::size_t f = 0; f < enc.feature_count(); ++f) {
      const auto& slot = enc.slots()[f];
      if (slot.kind == FeatureKind::kNumeric && slot.range.max > slot.range.min) {
        free[enc.offset(f)] = true;
        frozen_feature[f] = false;
      }
    }
  } else {
    std::fill(frozen_feature.begin(), frozen_feature.end(), false);
  }
  const auto to_values = [&](const std::vector<double>& x) {
    auto values = enc.decode(x);
    for (std::size_t f = 0; f < values.size(); ++f) {
      if (frozen_feature[f]) values[f] = query[f];
    }
    return values;
  };

  auto x = origin;
  double lambda = options.lambda_init;
  const auto t = static_cast<std::size_t>(target_class);
  for (std::size_t it = 1; it <= options.max_iters; ++it) {
    const auto probs = forward(model, x).probs;
    const double pt = probs[t];
    // d p_t / d logit_c = p_t (delta_tc - p_c)
    std::vector<double> upstream(probs.size());
    for (std::size_t c = 0; c < probs.size(); ++c) {
      upstream[c] = pt * ((c == t ? 1.0 : 0.0) - probs[c]);
    }
    const auto grad_p = backprop_to_input(model, x, upstream);
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (!free[i]) continue;
      const double g = 2.0 * lambda * (pt - 1.0) * grad_p[i] +
                       2.0 * (x[i] - origin[i]);
      x[i] -= options.step * g;
    }
    cf.attempts = it;
    auto values = to_values(x);
    const int predicted = predict_class(model, values);
    if (predicted == target_class) {
      cf.instance = std::move(values);
      cf.instance_class = predicted;
      cf.valid = true;
      break;
    }
    if (options.lambda_every > 0 && it % options.lambda_every == 0) {
      lambda *= options.lambda_growth;
    }
    if (it == options.max_iters) {
      cf.instance = std::move(values);
      cf.instance_class = predicted;
    }
  }
  cf.changed_features = diff_features(base, query, cf.instance, options.tau);
  return cf;
}

}  // namespace twincbr
