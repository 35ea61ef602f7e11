#include "twincbr/sf_piece.hpp"

#include <algorithm>
#include <cmath>

#include "twincbr/errors.hpp"

namespace twincbr {

bool HurdleStats::usable(int cls) const {
  return cls >= 0 && static_cast<std::size_t>(cls) < num_classes &&
         counts[cls] > 0;
}

double HurdleStats::expected(int cls, std::size_t feature) const {
  return p_pos[cls][feature] * mu_pos[cls][feature];
}

HurdleStats fit_hurdle(std::span<const std::vector<double>> latents,
                       std::span<const int> classes, std::size_t num_classes) {
  if (latents.size() != classes.size()) {
    throw ExplanationError("one class per latent vector is required");
  }
  HurdleStats s;
  s.num_classes = num_classes;
  s.width = latents.empty() ? 0 : latents.front().size();
  s.p_pos.assign(num_classes, std::vector<double>(s.width, 0.0));
  s.mu_pos = s.p_pos;
  s.sd_pos = s.p_pos;
  s.counts.assign(num_classes, 0);

  std::vector<std::vector<std::size_t>> positives(
      num_classes, std::vector<std::size_t>(s.width, 0));
  for (std::size_t i = 0; i < latents.size(); ++i) {
    const auto c = static_cast<std::size_t>(classes[i]);
    if (c >= num_classes) throw ExplanationError("class index out of range");
    if (latents[i].size() != s.width) {
      throw ExplanationError("latent vectors differ in width");
    }
    ++s.counts[c];
    for (std::size_t j = 0; j < s.width; ++j) {
      if (latents[i][j] > 0.0) {
        ++positives[c][j];
        s.mu_pos[c][j] += latents[i][j];
      }
    }
  }
  for (std::size_t c = 0; c < num_classes; ++c) {
    for (std::size_t j = 0; j < s.width; ++j) {
      const auto pos = positives[c][j];
      if (s.counts[c] > 0) {
        s.p_pos[c][j] = static_cast<double>(pos) / static_cast<double>(s.counts[c]);
      }
      if (pos > 0) s.mu_pos[c][j] /= static_cast<double>(pos);
    }
  }
  for (std::size_t i = 0; i < latents.size(); ++i) {
    const auto c = static_cast<std::size_t>(classes[i]);
    for (std::size_t j = 0; j < s.width; ++j) {
      if (latents[i][j] > 0.0) {
        const double d = latents[i][j] - s.mu_pos[c][j];
        s.sd_pos[c][j] += d * d;
      }
    }
  }
  for (std::size_t c = 0; c < num_classes; ++c) {
    for (std::size_t j = 0; j < s.width; ++j) {
      if (positives[c][j] > 0) {
        s.sd_pos[c][j] =
            std::sqrt(s.sd_pos[c][j] / static_cast<double>(positives[c][j]));
      }
    }
  }
  return s;
}

HurdleStats fit_hurdle(const MlpModel& model, const CaseBase& base) {
  if (model.head() != Head::kSoftmax) {
    throw ModelError("hurdle statistics need a classification head");
  }
  std::vector<std::vector<double>> latents;
  std::vector<int> classes;
  latents.reserve(base.size());
  for (const auto& c : base.cases()) {
    auto pass = forward_values(model, c.values);
    classes.push_back(argmax(pass.logits));
    latents.push_back(std::move(pass.penultimate));
  }
  auto stats = fit_hurdle(latents, classes, model.num_outputs());
  if (base.empty()) stats.width = model.latent_width();
  return stats;
}

std::string_view to_string(ExceptionReason reason) {
  switch (reason) {
    case ExceptionReason::kZeroWhereUsuallyPositive:
      return "zero-where-usually-positive";
    case ExceptionReason::kPositiveWhereUsuallyZero:
      return "positive-where-usually-zero";
    case ExceptionReason::kTailValue:
      return "tail-value";
  }
  return "tail-value";
}

std::vector<ExceptionalFeature> exceptional_features(
    const HurdleStats& stats, std::span<const double> latent, int target,
    double alpha) {
  if (!(alpha >= 0.0 && alpha < 0.5)) {
    throw ExplanationError("alpha must lie in [0, 0.5)");
  }
  if (!stats.usable(target)) {
    throw ExplanationError("no training case is predicted in class " +
                           std::to_string(target) +
                           "; its statistics are unusable");
  }
  if (latent.size() != stats.width) {
    throw ExplanationError("latent width does not match the statistics");
  }
  std::vector<ExceptionalFeature> out;
  for (std::size_t j = 0; j < stats.width; ++j) {
    const double a = latent[j];
    const double p = stats.p_pos[target][j];
    ExceptionalFeature f{.index = j,
                         .observed = a,
                         .expected = stats.expected(target, j)};
    if (a <= 0.0) {
      f.score = 1.0 - p;
      f.reason = ExceptionReason::kZeroWhereUsuallyPositive;
    } else if (p < alpha) {
      f.score = p;
      f.reason = ExceptionReason::kPositiveWhereUsuallyZero;
    } else {
      const double mu = stats.mu_pos[target][j];
      const double sd = stats.sd_pos[target][j];
      if (sd > 0.0) {
        f.score = std::erfc(std::abs(a - mu) / (sd * std::sqrt(2.0)));
      } else {
        f.score = a == mu ? 1.0 : 0.0;
      }
      f.reason = ExceptionReason::kTailValue;
    }
    if (f.score < alpha) out.push_back(f);
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& x, const auto& y) {
    return x.score < y.score;
  });
  return out;
}

NeighborResult realize_case(std::span<const double> latent,
                            const VectorIndex& latent_index) {
  if (latent_index.empty()) throw ExplanationError("empty case base");
  return knn(latent_index, latent, KnnQuery{.k = 1}).front();
}

const Case& realize_case(std::span<const double> latent, const CaseBase& base,
                         const MlpModel& model) {
  if (base.empty()) throw ExplanationError("empty case base");
  const auto index = build_latent_index(model, base);
  return base.at_id(realize_case(latent, index).case_id);
}

PieceResult generate_sf_cf(const MlpModel& model, const HurdleStats& stats,
                           const VectorIndex& latent_index,
                           std::span<const double> query, int target,
                           const PieceOptions& options) {
  const auto pass = forward_values(model, query);
  PieceResult r;
  r.query_class = argmax(pass.logits);
  r.target_class = target;
  if (r.query_class == target) {
    throw ExplanationError("query is already predicted in the target class");
  }
  r.query_latent = pass.penultimate;
  r.exceptional = exceptional_features(stats, r.query_latent, target,
                                       options.alpha);

  auto state = r.query_latent;
  r.semifactual_latent = state;
  for (std::size_t step = 0; step < r.exceptional.size(); ++step) {
    const auto& f = r.exceptional[step];
    PerturbationStep s{.feature = f.index, .before = state[f.index]};
    state[f.index] = f.expected;
    s.after = state[f.index];
    s.predicted_class = argmax(head_logits(model, state));
    r.trace.push_back(s);
    if (s.predicted_class == target) {
      r.counterfactual_latent = state;
      r.steps_to_flip = step + 1;
      break;
    }
    if (s.predicted_class == r.query_class) r.semifactual_latent = state;
  }
  r.semifactual_degenerate = r.steps_to_flip == std::size_t{1};
  r.semifactual_case = realize_case(r.semifactual_latent, latent_index);
  if (r.counterfactual_latent) {
    r.counterfactual_case = realize_case(*r.counterfactual_latent, latent_index);
  }
  return r;
}

}  // namespace twincbr
