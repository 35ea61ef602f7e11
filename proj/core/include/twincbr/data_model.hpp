#ifndef TWINCBR_DATA_MODEL_HPP_
#define TWINCBR_DATA_MODEL_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace twincbr {

enum class FeatureKind { kNumeric, kCategorical };
enum class Task { kClassification, kRegression };

std::string_view to_string(FeatureKind kind);
FeatureKind feature_kind_from_string(std::string_view text);

struct Feature {
  std::string name;
  FeatureKind kind = FeatureKind::kNumeric;
  // Observed range over the owning case base; numeric features only.
  double min = 0.0;
  double max = 0.0;
  // Category set in first-appearance order; categorical features only.
  std::vector<std::string> categories;

  bool numeric() const { return kind == FeatureKind::kNumeric; }
  std::optional<int> category_index(std::string_view value) const;

  bool operator==(const Feature&) const = default;
};

// The shared-dataset contract: both twins see features through this schema.
struct FeatureSchema {
  std::vector<Feature> features;
  std::string label_name;
  // Ordered class names. Empty for regression case bases.
  std::vector<std::string> class_labels;
  Task task = Task::kClassification;

  std::size_t size() const { return features.size(); }
  std::size_t num_classes() const { return class_labels.size(); }
  std::optional<std::size_t> index_of(std::string_view name) const;
  std::optional<int> class_index(std::string_view label) const;
  bool numeric_only() const;

  // Throws DataError when an invariant does not hold.
  void validate() const;

  bool operator==(const FeatureSchema&) const = default;
};

// A labeled feature vector. Categorical entries of `values` hold the index of
// the category within Feature::categories.
struct Case {
  std::int64_t id = 0;
  std::vector<double> values;
  int label = 0;
  // Regression target; unused for classification.
  double outcome = 0.0;

  bool operator==(const Case&) const = default;
};

struct Range {
  double min = 0.0;
  double max = 0.0;
  bool operator==(const Range&) const = default;
};

// Min-max scaling of numeric features. Categorical slots carry no range and
// pass through untouched.
class Scaler {
 public:
  Scaler() = default;
  explicit Scaler(std::vector<std::optional<Range>> ranges)
      : ranges_(std::move(ranges)) {}

  static Scaler fit(const FeatureSchema& schema, std::span<const Case> cases);

  // (v - min) / (max - min), or 0 for a degenerate range. Never clipped.
  double normalize(std::size_t feature, double value) const;
  double denormalize(std::size_t feature, double scaled) const;
  std::vector<double> normalize(std::span<const double> values) const;

  const std::vector<std::optional<Range>>& ranges() const { return ranges_; }
  std::size_t size() const { return ranges_.size(); }

  bool operator==(const Scaler&) const = default;

 private:
  std::vector<std::optional<Range>> ranges_;
};

// Immutable after construction.
class CaseBase {
 public:
  // Validates schema and cases, refreshes the schema's observed numeric
  // ranges from the cases and fits the scaler.
  CaseBase(FeatureSchema schema, std::vector<Case> cases);

  const FeatureSchema& schema() const { return schema_; }
  const std::vector<Case>& cases() const { return cases_; }
  const Scaler& scaler() const { return scaler_; }
  std::size_t size() const { return cases_.size(); }
  bool empty() const { return cases_.empty(); }

  const Case& operator[](std::size_t pos) const { return cases_[pos]; }
  // Lookup by id; nullptr when absent.
  const Case* find(std::int64_t id) const;
  const Case& at_id(std::int64_t id) const;
  std::int64_t next_id() const;

  std::vector<double> normalize(std::span<const double> values) const {
    return scaler_.normalize(values);
  }
  std::vector<std::size_t> class_counts() const;

  // New case base holding these cases plus `extra`; scaler is refitted.
  CaseBase with_cases(std::span<const Case> extra) const;

  bool operator==(const CaseBase& other) const;

 private:
  FeatureSchema schema_;
  std::vector<Case> cases_;
  Scaler scaler_;
  std::vector<std::size_t> id_order_;  // positions sorted by id
};

// Weighted distance over normalized features: sqrt(sum_i w_i d_i^2), with
// d_i the scaled difference for numerics and 0/1 overlap for categoricals.
double distance(const CaseBase& base, std::span<const double> a,
                std::span<const double> b,
                std::span<const double> weights = {});

// Feature indices on which two value vectors differ. Numerics differ when the
// scaled gap exceeds tau; categoricals when unequal. Sorted ascending.
std::vector<std::size_t> diff_features(const CaseBase& base,
                                       std::span<const double> a,
                                       std::span<const double> b, double tau);

inline constexpr double kDefaultMatchTolerance = 0.1;

// Re-expresses `base` in the category and class orders of `reference` (files
// list labels in first-appearance order). Throws DataError when a feature,
// category or class has no counterpart in the reference.
CaseBase conform_to(const CaseBase& base, const FeatureSchema& reference);

// ---------------------------------------------------------------------------
// Tabular CSV.

struct CsvOptions {
  std::string label_name = "label";
  std::optional<std::filesystem::path> schema_hint;
  Task task = Task::kClassification;
};

CaseBase load_tabular_csv(const std::filesystem::path& path,
                          const CsvOptions& options);
CaseBase parse_tabular_csv(std::string_view text, const CsvOptions& options);

// Writes header + rows in the dialect load_tabular_csv reads, numbers with
// shortest round-trip precision.
std::string format_tabular_csv(const FeatureSchema& schema,
                               std::span<const Case> cases);
void write_tabular_csv(const std::filesystem::path& path,
                       const FeatureSchema& schema,
                       std::span<const Case> cases);

std::string format_number(double value);

// ---------------------------------------------------------------------------
// Time series (UCR layout).

struct TimeSeriesInstance {
  std::int64_t id = 0;
  std::vector<double> values;
  int label = 0;
};

struct TimeSeriesDataset {
  std::vector<std::string> class_labels;
  std::vector<TimeSeriesInstance> instances;

  std::size_t length() const {
    return instances.empty() ? 0 : instances.front().values.size();
  }
  std::size_t size() const { return instances.size(); }
  const TimeSeriesInstance* find(std::int64_t id) const;

  // Per-timestep mean over all instances.
  std::vector<double> mean_signal() const;
  // One numeric feature per timestep ("t0", "t1", ...), for training.
  CaseBase to_casebase() const;
};

TimeSeriesDataset load_timeseries_tsv(const std::filesystem::path& path);
TimeSeriesDataset parse_timeseries_tsv(std::string_view text);
std::string format_timeseries_tsv(const TimeSeriesDataset& dataset);
void write_timeseries_tsv(const std::filesystem::path& path,
                          const TimeSeriesDataset& dataset);

// ---------------------------------------------------------------------------
// Synthetic generators. All randomness flows from `seed`.

CaseBase synth_blobs(int n_per_class, int dims,
                     const std::vector<std::vector<double>>& class_means,
                     double sigma, std::uint64_t seed,
                     std::int64_t first_id = 0);

// Two regimes with overlapping Gaussian clouds; class 0 ("normal") is the
// majority, class 1 ("outlier") the minority. Features: temperature and
// rainfall (shifted for outliers), humidity and wind (shared noise).
CaseBase synth_imbalanced(int majority, int minority, std::uint64_t seed,
                          std::int64_t first_id = 0);

// Class 0: low-mean noise. Class 1: noise plus a bump in a random window.
TimeSeriesDataset synth_series(int n_per_class, int length, std::uint64_t seed,
                               std::int64_t first_id = 0);

}  // namespace twincbr

#endif  // TWINCBR_DATA_MODEL_HPP_
