#ifndef TWINCBR_METRICS_REPORT_HPP_
#define TWINCBR_METRICS_REPORT_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "twincbr/cf_casebased.hpp"
#include "twincbr/data_model.hpp"
#include "twincbr/neural_twin.hpp"
#include "twincbr/retrieval.hpp"

namespace twincbr {

struct ExplanationMetrics {
  double proximity = 0.0;  // normalized-space distance query -> instance
  std::size_t sparsity = 0;
  // Distance to the nearest training case predicted in the instance's class;
  // absent when no training case is predicted in that class.
  std::optional<double> plausibility;
  // proximity / mean distance of the native explanation-case pairs.
  std::optional<double> relative_cf_distance;
  bool valid = false;

  bool operator==(const ExplanationMetrics&) const = default;
};

// Precomputed pieces shared across many evaluations on one case base.
class MetricsContext {
 public:
  MetricsContext(const MlpModel& model, const CaseBase& base,
                 std::span<const ExplanationCase> xcs,
                 double tau = kDefaultMatchTolerance);

  ExplanationMetrics evaluate(std::span<const double> query,
                              std::span<const double> instance) const;

  std::optional<double> mean_native_distance() const { return mean_native_; }

 private:
  const MlpModel& model_;
  const CaseBase& base_;
  VectorIndex index_;
  std::optional<double> mean_native_;
  double tau_;
};

ExplanationMetrics evaluate_explanation(std::span<const double> query,
                                        std::span<const double> instance,
                                        const MlpModel& model,
                                        const CaseBase& base,
                                        std::span<const ExplanationCase> xcs,
                                        double tau = kDefaultMatchTolerance);

// Mean pairwise normalized distance; absent for fewer than two instances.
std::optional<double> diversity(std::span<const std::vector<double>> instances,
                                const CaseBase& base);

struct ClassificationScores {
  double accuracy = 0.0;
  std::vector<double> recall;     // per class
  std::vector<double> precision;  // per class
  std::vector<double> f1;         // per class
  double macro_f1 = 0.0;
  std::vector<std::vector<std::size_t>> confusion;  // [actual][predicted]
};

ClassificationScores score_classification(std::span<const int> predicted,
                                          std::span<const int> actual,
                                          std::size_t num_classes);

// ---------------------------------------------------------------------------
// Reports.

inline constexpr std::string_view kReportSchemaVersion = "1.0";
inline constexpr std::string_view kToolVersion = "0.1.0";

// Version string shown by the CLI; embeds the report schema version.
std::string version_string();

struct Provenance {
  std::uint64_t seed = 0;
  nlohmann::json config = nlohmann::json::object();
  std::string model_fingerprint;
};

// 16 hex digits of FNV-1a over the compact JSON dump.
std::string fingerprint(const nlohmann::json& doc);

// Adds the schema version, kind, provenance (seed, config and its hash, model
// fingerprint) and a generation timestamp to a result object. Throws DataError
// when the body is not an object or already uses one of those keys.
nlohmann::json make_report(std::string_view kind, nlohmann::json body,
                           const Provenance& provenance);

// Copy without fields that legitimately differ between identical runs.
nlohmann::json strip_volatile(nlohmann::json report);

void emit_report(const nlohmann::json& report, const std::filesystem::path& path);
nlohmann::json read_report(const std::filesystem::path& path);

// Flat CSV: one row per named metrics record.
void write_metrics_csv(
    std::span<const std::pair<std::string, ExplanationMetrics>> rows,
    const std::filesystem::path& path);

nlohmann::json to_json(const ExplanationMetrics& metrics);

}  // namespace twincbr

#endif  // TWINCBR_METRICS_REPORT_HPP_
