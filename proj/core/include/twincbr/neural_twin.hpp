#ifndef TWINCBR_NEURAL_TWIN_HPP_
#define TWINCBR_NEURAL_TWIN_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "twincbr/data_model.hpp"

namespace twincbr {

// Maps schema-conforming value vectors to network inputs: numeric features are
// min-max scaled with the training ranges, categorical ones one-hot encoded.
// An encoding with no slots is the identity (used by hand-built networks).
class InputEncoding {
 public:
  struct Slot {
    std::string name;
    FeatureKind kind = FeatureKind::kNumeric;
    Range range;
    std::vector<std::string> categories;
    bool operator==(const Slot&) const = default;
  };

  InputEncoding() = default;
  explicit InputEncoding(std::vector<Slot> slots);
  static InputEncoding from_casebase(const CaseBase& base);

  bool identity() const { return slots_.empty(); }
  const std::vector<Slot>& slots() const { return slots_; }
  std::size_t feature_count() const { return slots_.size(); }
  std::size_t encoded_width() const { return width_; }
  // Encoded position of the first input belonging to feature i.
  std::size_t offset(std::size_t feature) const { return offsets_[feature]; }

  std::vector<double> encode(std::span<const double> values) const;
  // Inverse for numeric slots; categorical slots take the arg-max one-hot.
  std::vector<double> decode(std::span<const double> encoded) const;

  // Throws ModelError unless `schema` names the same features, kinds and
  // category orders.
  void check_compatible(const FeatureSchema& schema) const;

  bool operator==(const InputEncoding& other) const {
    return slots_ == other.slots_;
  }

 private:
  std::vector<Slot> slots_;
  std::vector<std::size_t> offsets_;
  std::size_t width_ = 0;
};

enum class Head { kSoftmax, kLinear };

struct DenseLayer {
  std::size_t inputs = 0;
  std::size_t outputs = 0;
  std::vector<double> weights;  // outputs x inputs, row-major
  std::vector<double> bias;

  double weight(std::size_t out, std::size_t in) const {
    return weights[out * inputs + in];
  }
  bool operator==(const DenseLayer&) const = default;
};

// Feed-forward network: rectified hidden layers, softmax or identity head.
class MlpModel {
 public:
  MlpModel(std::vector<DenseLayer> layers, Head head,
           InputEncoding encoding = {});

  // Weights uniform in +-sqrt(6 / (fan_in + fan_out)), biases zero.
  static MlpModel initialize(const std::vector<std::size_t>& layer_sizes,
                             Head head, InputEncoding encoding,
                             std::uint64_t seed);

  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& mutable_layers() { return layers_; }
  Head head() const { return head_; }
  const InputEncoding& encoding() const { return encoding_; }
  std::vector<std::size_t> layer_sizes() const;

  std::size_t input_width() const { return layers_.front().inputs; }
  std::size_t num_outputs() const { return layers_.back().outputs; }
  // Width of the extracted feature layer (last hidden layer, or the input
  // when there is no hidden layer).
  std::size_t latent_width() const { return layers_.back().inputs; }
  const DenseLayer& output_layer() const { return layers_.back(); }

  std::vector<double> encode(std::span<const double> values) const {
    return encoding_.encode(values);
  }

  // Optional metadata carried through save/load for the CLI.
  std::vector<std::string> class_labels;
  std::string label_name;

  bool operator==(const MlpModel& other) const;

 private:
  void validate() const;

  std::vector<DenseLayer> layers_;
  Head head_ = Head::kSoftmax;
  InputEncoding encoding_;
};

struct ForwardPass {
  std::vector<double> logits;
  std::vector<double> probs;  // softmax(logits); equals logits for kLinear
  std::vector<double> penultimate;
};

// x is an encoded input vector.
ForwardPass forward(const MlpModel& model, std::span<const double> x);
// Convenience: encode then forward.
ForwardPass forward_values(const MlpModel& model, std::span<const double> values);

// Output-layer evaluation on an extracted-feature vector.
std::vector<double> head_logits(const MlpModel& model,
                                std::span<const double> latent);

std::vector<double> softmax(std::span<const double> logits);
// Index of the largest entry, lowest index on ties.
int argmax(std::span<const double> values);

int predict_class(const MlpModel& model, std::span<const double> values);

// Gradient of logit c with respect to the encoded input.
std::vector<double> input_gradient(const MlpModel& model,
                                   std::span<const double> x, int cls);
// Vector-Jacobian product: sum_c upstream[c] * d logit_c / d x.
std::vector<double> backprop_to_input(const MlpModel& model,
                                      std::span<const double> x,
                                      std::span<const double> upstream);

// Predicted-class logit split over the extracted feature layer:
// values[j] = penultimate[j] * w[c][j], and sum(values) + bias == logit.
struct Contributions {
  int predicted_class = 0;
  std::vector<double> values;
  double bias = 0.0;
  double logit = 0.0;
};
Contributions contributions(const MlpModel& model, std::span<const double> x);

// Auxiliary input-level attribution for display only: gradient x input of the
// predicted logit, summed back onto the original features.
std::vector<double> gradient_times_input(const MlpModel& model,
                                         std::span<const double> values);

struct TrainConfig {
  int epochs = 200;
  double learning_rate = 0.05;
  int batch_size = 16;
  std::uint64_t seed = 0;
  double l2 = 0.0;

  void validate() const;
};

struct TrainResult {
  MlpModel model;
  std::vector<double> loss_trace;  // mean data loss per epoch
};

// Mini-batch SGD, cross-entropy for softmax heads and squared error for linear
// heads. Deterministic under config.seed.
TrainResult train_sgd(MlpModel model, const CaseBase& base,
                      const TrainConfig& config);

// Builds the encoding from `base`, initializes with config.seed and trains.
TrainResult fit_model(const CaseBase& base,
                      const std::vector<std::size_t>& hidden,
                      const TrainConfig& config);

double accuracy(const MlpModel& model, const CaseBase& base);

nlohmann::json model_to_json(const MlpModel& model);
MlpModel model_from_json(
    const nlohmann::json& doc,
    const std::optional<std::vector<std::size_t>>& expected_sizes = {});
void save_model(const MlpModel& model, const std::filesystem::path& path);
MlpModel load_model(
    const std::filesystem::path& path,
    const std::optional<std::vector<std::size_t>>& expected_sizes = {});

}  // namespace twincbr

#endif  // TWINCBR_NEURAL_TWIN_HPP_
