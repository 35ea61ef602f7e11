#include "twincbr/metrics_report.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "twincbr/errors.hpp"

namespace twincbr {
namespace {

std::optional<double> mean_pair_distance(const CaseBase& base,
                                         std::span<const ExplanationCase> xcs) {
  if (xcs.empty()) return std::nullopt;
  double sum = 0.0;
  for (const auto& xc : xcs) {
    sum += distance(base, base.at_id(xc.first).values,
                    base.at_id(xc.second).values);
  }
  return sum / static_cast<double>(xcs.size());
}

}  // namespace

MetricsContext::MetricsContext(const MlpModel& model, const CaseBase& base,
                               std::span<const ExplanationCase> xcs, double tau)
    : model_(model),
      base_(base),
      index_(build_feature_index(base, &model)),
      mean_native_(mean_pair_distance(base, xcs)),
      tau_(tau) {}

ExplanationMetrics MetricsContext::evaluate(
    std::span<const double> query, std::span<const double> instance) const {
  ExplanationMetrics m;
  m.proximity = distance(base_, query, instance);
  m.sparsity = diff_features(base_, query, instance, tau_).size();
  const int instance_class = predict_class(model_, instance);
  m.valid = instance_class != predict_class(model_, query);
  try {
    m.plausibility = knn(index_, feature_vector(base_, instance),
                         KnnQuery{.k = 1, .class_filter = instance_class})
                         .front()
                         .distance;
  } catch (const ExplanationError&) {
    m.plausibility.reset();
  }
  if (mean_native_ && *mean_native_ > 0.0) {
    m.relative_cf_distance = m.proximity / *mean_native_;
  }
  return m;
}

ExplanationMetrics evaluate_explanation(std::span<const double> query,
                                        std::span<const double> instance,
                                        const MlpModel& model,
                                        const CaseBase& base,
                                        std::span<const ExplanationCase> xcs,
                                        double tau) {
  return MetricsContext(model, base, xcs, tau).evaluate(query, instance);
}

std::optional<double> diversity(std::span<const std::vector<double>> instances,
                                const CaseBase& base) {
  if (instances.size() < 2) return std::nullopt;
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    for (std::size_t j = i + 1; j < instances.size(); ++j) {
      sum += distance(base, instances[i], instances[j]);
      ++pairs;
    }
  }
  return sum / static_cast<double>(pairs);
}

ClassificationScores score_classification(std::span<const int> predicted,
                                          std::span<const int> actual,
                                          std::size_t num_classes) {
  if (predicted.size() != actual.size()) {
    throw DataError("predicted and actual label counts differ");
  }
  ClassificationScores s;
  s.confusion.assign(num_classes, std::vector<std::size_t>(num_classes, 0));
  std::size_t correct = 0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    ++s.confusion.at(actual[i]).at(predicted[i]);
    if (actual[i] == predicted[i]) ++correct;
  }
  s.accuracy = actual.empty() ? 0.0
                              : static_cast<double>(correct) /
                                    static_cast<double>(actual.size());
  s.recall.assign(num_classes, 0.0);
  s.precision.assign(num_classes, 0.0);
  s.f1.assign(num_classes, 0.0);
  for (std::size_t c = 0; c < num_classes; ++c) {
    std::size_t row = 0;
    std::size_t col = 0;
    for (std::size_t k = 0; k < num_classes; ++k) {
      row += s.confusion[c][k];
      col += s.confusion[k][c];
    }
    const double tp = static_cast<double>(s.confusion[c][c]);
    if (row > 0) s.recall[c] = tp / static_cast<double>(row);
    if (col > 0) s.precision[c] = tp / static_cast<double>(col);
    if (s.recall[c] + s.precision[c] > 0.0) {
      s.f1[c] = 2.0 * s.recall[c] * s.precision[c] /
                (s.recall[c] + s.precision[c]);
    }
    s.macro_f1 += s.f1[c];
  }
  if (num_classes > 0) s.macro_f1 /= static_cast<double>(num_classes);
  return s;
}

// ---------------------------------------------------------------------------

std::string version_string() {
  return "twincbr " + std::string(kToolVersion) + " (report schema " +
         std::string(kReportSchemaVersion) + ")";
}

std::string fingerprint(const nlohmann::json& doc) {
  std::uint64_t hash = 1469598103934665603ULL;
  for (unsigned char ch : doc.dump()) {
    hash ^= ch;
    hash *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(hash));
  return buf;
}

nlohmann::json make_report(std::string_view kind, nlohmann::json body,
                           const Provenance& provenance) {
  if (!body.is_object()) throw DataError("report body must be a JSON object");
  for (const char* key :
       {"schema_version", "kind", "tool_version", "generated_at", "provenance"}) {
    if (body.contains(key)) {
      throw DataError(std::string("report body uses reserved key '") + key + "'");
    }
  }
  nlohmann::json report = std::move(body);
  report["schema_version"] = kReportSchemaVersion;
  report["kind"] = kind;
  report["tool_version"] = kToolVersion;
  const auto now = std::chrono::system_clock::now();
  report["generated_at"] = std::chrono::duration_cast<std::chrono::seconds>(
                               now.time_since_epoch())
                               .count();
  report["provenance"] = {
      {"seed", provenance.seed},
      {"config", provenance.config},
      {"config_hash", fingerprint(provenance.config)},
      {"model_fingerprint", provenance.model_fingerprint},
  };
  return report;
}

nlohmann::json strip_volatile(nlohmann::json report) {
  report.erase("generated_at");
  return report;
}

void emit_report(const nlohmann::json& report,
                 const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write report to '" + path.string() + "'");
  out << report.dump(2) << '\n';
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

nlohmann::json read_report(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open report '" + path.string() + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed report '" + path.string() + "': " + e.what());
  }
}

nlohmann::json to_json(const ExplanationMetrics& m) {
  nlohmann::json j{{"proximity", m.proximity},
                   {"sparsity", m.sparsity},
                   {"valid", m.valid}};
  j["plausibility"] = m.plausibility ? nlohmann::json(*m.plausibility)
                                     : nlohmann::json(nullptr);
  j["relative_cf_distance"] = m.relative_cf_distance
                                  ? nlohmann::json(*m.relative_cf_distance)
                                  : nlohmann::json(nullptr);
  return j;
}

void write_metrics_csv(
    std::span<const std::pair<std::string, ExplanationMetrics>> rows,
    const std::filesystem::path& path) {
  std::ostringstream out;
  out << "name,proximity,sparsity,plausibility,relative_cf_distance,valid\n";
  for (const auto& [name, m] : rows) {
    out << name << ',' << format_number(m.proximity) << ',' << m.sparsity << ','
        << (m.plausibility ? format_number(*m.plausibility) : "") << ','
        << (m.relative_cf_distance ? format_number(*m.relative_cf_distance) : "")
        << ',' << (m.valid ? "true" : "false") << '\n';
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw DataError("cannot write '" + path.string() + "'");
  file << out.str();
}

}  // namespace twincbr
