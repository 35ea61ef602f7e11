#include "twincbr/augmentation.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <limits>
#include <set>
#include <thread>

#include "twincbr/errors.hpp"
#include "twincbr/random.hpp"
#include "twincbr/retrieval.hpp"

namespace twincbr {
namespace {

struct Source {
  const Case* c = nullptr;
  double nun_distance = std::numeric_limits<double>::infinity();
  std::vector<CfCandidate> candidates;
  std::size_t cursor = 0;
};

bool compatible(const FeatureSchema& a, const FeatureSchema& b) {
  if (a.size() != b.size() || a.class_labels != b.class_labels ||
      a.task != b.task) {
    return false;
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a.features[i].name != b.features[i].name ||
        a.features[i].kind != b.features[i].kind) {
      return false;
    }
    if (!a.features[i].numeric() &&
        a.features[i].categories != b.features[i].categories) {
      return false;
    }
  }
  return true;
}

void check_disjoint(const CaseBase& train, const CaseBase& holdout,
                    const std::string& name) {
  for (const auto& c : holdout.cases()) {
    if (train.find(c.id) != nullptr) {
      throw DataError("holdout shares case id " + std::to_string(c.id) +
                      " with training set '" + name + "'");
    }
  }
}

}  // namespace

std::vector<CfSynthetic> cf_augment(const CaseBase& base, const MlpModel& model,
                                    std::span<const ExplanationCase> xcs,
                                    int target_class, std::size_t n_needed,
                                    const CfAugmentOptions& options) {
  if (n_needed == 0) throw ExplanationError("n_needed must be at least 1");
  if (target_class < 0 ||
      static_cast<std::size_t>(target_class) >= base.schema().num_classes()) {
    throw ExplanationError("target class out of range");
  }
  const bool crossing = std::any_of(xcs.begin(), xcs.end(), [&](const auto& xc) {
    return (xc.first_class == target_class) != (xc.second_class == target_class);
  });
  const auto index = build_feature_index(base, &model);
  const bool any_target = std::find(index.classes().begin(),
                                    index.classes().end(),
                                    target_class) != index.classes().end();
  if (!crossing && !any_target) {
    throw ExplanationError(
        "cannot augment: no explanation case crosses into the target class and "
        "no case is predicted in it");
  }

  std::vector<Source> sources;
  for (const auto& c : base.cases()) {
    if (c.label == target_class) continue;
    Source s{.c = &c};
    const auto q = feature_vector(base, c.values);
    try {
      s.nun_distance = nun(index, q, predict_class(model, c.values)).distance;
    } catch (const ExplanationError&) {
    }
    s.candidates = rank_candidates(c.values, base, xcs, c.label, target_class);
    sources.push_back(std::move(s));
  }
  std::stable_sort(sources.begin(), sources.end(),
                   [](const Source& a, const Source& b) {
                     if (a.nun_distance != b.nun_distance) {
                       return a.nun_distance < b.nun_distance;
                     }
                     return a.c->id < b.c->id;
                   });

  std::set<std::vector<double>> seen;
  for (const auto& c : base.cases()) seen.insert(c.values);

  std::vector<CfSynthetic> out;
  std::int64_t next_id = base.next_id();
  bool progress = true;
  while (out.size() < n_needed && progress) {
    progress = false;
    for (auto& s : sources) {
      if (out.size() >= n_needed) break;
      const std::size_t limit =
          std::min(s.candidates.size(), options.max_attempts);
      while (s.cursor < limit) {
        const auto& cand = s.candidates[s.cursor++];
        if (predict_class(model, cand.values) != target_class) continue;
        if (!seen.insert(cand.values).second) continue;
        CfSynthetic syn;
        syn.synthetic = Case{.id = next_id++,
                             .values = cand.values,
                             .label = target_class};
        syn.source_id = s.c->id;
        syn.donor_id = cand.donor_id;
        syn.changed_features =
            diff_features(base, s.c->values, cand.values, options.tau);
        out.push_back(std::move(syn));
        progress = true;
        break;
      }
    }
  }
  return out;
}

std::vector<CfSynthetic> cf_augment(const CaseBase& base, const MlpModel& model,
                                    int target_class, std::size_t n_needed,
                                    const CfAugmentOptions& options) {
  const auto xcs = mine_explanation_cases(base, options.tau);
  return cf_augment(base, model, xcs, target_class, n_needed, options);
}

std::vector<SmoteSynthetic> smote(const CaseBase& base, int target_class,
                                  std::size_t k, std::size_t n_needed,
                                  std::uint64_t seed) {
  if (k == 0) throw DataError("smote needs k >= 1");
  std::vector<const Case*> members;
  for (const auto& c : base.cases()) {
    if (c.label == target_class) members.push_back(&c);
  }
  if (members.size() < 2) {
    throw DataError("smote needs at least 2 cases of the target class");
  }
  const std::size_t kk = std::min(k, members.size() - 1);

  // Neighbour lists, nearest first with id tie-break.
  std::vector<std::vector<std::size_t>> neighbours(members.size());
  for (std::size_t i = 0; i < members.size(); ++i) {
    std::vector<std::pair<double, std::size_t>> order;
    order.reserve(members.size() - 1);
    for (std::size_t j = 0; j < members.size(); ++j) {
      if (j == i) continue;
      order.emplace_back(
          distance(base, members[i]->values, members[j]->values), j);
    }
    std::sort(order.begin(), order.end(), [&](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first < b.first;
      return members[a.second]->id < members[b.second]->id;
    });
    for (std::size_t r = 0; r < kk; ++r) neighbours[i].push_back(order[r].second);
  }

  const auto& features = base.schema().features;
  Rng rng(seed);
  std::vector<SmoteSynthetic> out;
  out.reserve(n_needed);
  std::int64_t next_id = base.next_id();
  for (std::size_t n = 0; n < n_needed; ++n) {
    const std::size_t xi = rng.index(members.size());
    const std::size_t zi = neighbours[xi][rng.index(neighbours[xi].size())];
    const double gap = rng.uniform();
    const Case& x = *members[xi];
    const Case& z = *members[zi];
    SmoteSynthetic syn;
    syn.synthetic.id = next_id++;
    syn.synthetic.label = target_class;
    syn.synthetic.values = x.values;
    for (std::size_t f = 0; f < features.size(); ++f) {
      if (features[f].numeric()) {
        syn.synthetic.values[f] = x.values[f] + gap * (z.values[f] - x.values[f]);
      }
    }
    syn.base_id = x.id;
    syn.neighbor_id = z.id;
    syn.gap = gap;
    out.push_back(std::move(syn));
  }
  return out;
}

std::vector<Case> synthetic_cases(std::span<const CfSynthetic> items) {
  std::vector<Case> out;
  out.reserve(items.size());
  for (const auto& s : items) out.push_back(s.synthetic);
  return out;
}

std::vector<Case> synthetic_cases(std::span<const SmoteSynthetic> items) {
  std::vector<Case> out;
  out.reserve(items.size());
  for (const auto& s : items) out.push_back(s.synthetic);
  return out;
}

std::size_t balancing_count(const CaseBase& base, int target_class) {
  const auto counts = base.class_counts();
  if (target_class < 0 || static_cast<std::size_t>(target_class) >= counts.size()) {
    throw DataError("target class out of range");
  }
  const std::size_t largest = *std::max_element(counts.begin(), counts.end());
  return largest - counts[target_class];
}

std::vector<EvalRow> retrain_eval(
    const CaseBase& base,
    std::span<const std::pair<std::string, CaseBase>> variants,
    const CaseBase& holdout, const ModelSpec& spec, std::size_t threads) {
  if (!compatible(base.schema(), holdout.schema())) {
    throw DataError("holdout schema does not match the base schema");
  }
  check_disjoint(base, holdout, "base");
  for (const auto& [name, variant] : variants) {
    if (!compatible(base.schema(), variant.schema())) {
      throw DataError("variant '" + name + "' schema does not match the base");
    }
    check_disjoint(variant, holdout, name);
  }

  std::vector<int> actual;
  actual.reserve(holdout.size());
  for (const auto& c : holdout.cases()) actual.push_back(c.label);
  const std::size_t num_classes = base.schema().num_classes();

  auto run = [&](const std::string& name, const CaseBase& train) {
    const auto model = fit_model(train, spec.hidden, spec.train).model;
    std::vector<int> predicted;
    predicted.reserve(holdout.size());
    for (const auto& c : holdout.cases()) {
      predicted.push_back(predict_class(model, c.values));
    }
    return EvalRow{.name = name,
                   .train_size = train.size(),
                   .scores = score_classification(predicted, actual, num_classes)};
  };

  std::vector<std::pair<std::string, const CaseBase*>> jobs{{"base", &base}};
  for (const auto& [name, variant] : variants) jobs.emplace_back(name, &variant);
  std::vector<EvalRow> rows(jobs.size());
  std::vector<std::exception_ptr> failures(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        rows[i] = run(jobs[i].first, *jobs[i].second);
      } catch (...) {
        failures[i] = std::current_exception();
      }
    }
  };
  const std::size_t n_threads =
      std::clamp<std::size_t>(threads, 1, jobs.size());
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
  return rows;
}

}  // namespace twincbr
