#include "twincbr/neural_twin.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "twincbr/errors.hpp"
#include "twincbr/random.hpp"

namespace twincbr {
namespace {

// Per-layer pre-activations and activations of one forward pass.
struct Trace {
  std::vector<std::vector<double>> activations;  // [0] is the input
  std::vector<std::vector<double>> pre;          // pre[l] = W_l a_l + b_l
};

Trace run(const MlpModel& model, std::span<const double> x) {
  const auto& layers = model.layers();
  if (x.size() != model.input_width()) {
    throw ModelError("input has " + std::to_string(x.size()) +
                     " entries, network expects " +
                     std::to_string(model.input_width()));
  }
  Trace t;
  t.activations.emplace_back(x.begin(), x.end());
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    const auto& in = t.activations.back();
    std::vector<double> z(layer.outputs);
    for (std::size_t o = 0; o < layer.outputs; ++o) {
      double sum = layer.bias[o];
      const double* row = &layer.weights[o * layer.inputs];
      for (std::size_t i = 0; i < layer.inputs; ++i) sum += row[i] * in[i];
      z[o] = sum;
    }
    if (l + 1 < layers.size()) {
      std::vector<double> a(z.size());
      for (std::size_t o = 0; o < z.size(); ++o) a[o] = std::max(0.0, z[o]);
      t.activations.push_back(std::move(a));
    }
    t.pre.push_back(std::move(z));
  }
  return t;
}

// Gradients of upstream . logits with respect to every layer's pre-activation
// (deltas[l] matches pre[l]) and to the input.
struct Backward {
  std::vector<std::vector<double>> deltas;
  std::vector<double> input_grad;
};

Backward backprop(const MlpModel& model, const Trace& t,
                  std::span<const double> upstream) {
  const auto& layers = model.layers();
  Backward b;
  b.deltas.resize(layers.size());
  b.deltas.back().assign(upstream.begin(), upstream.end());
  for (std::size_t l = layers.size(); l-- > 0;) {
    const auto& layer = layers[l];
    const auto& delta = b.deltas[l];
    std::vector<double> grad(layer.inputs, 0.0);
    for (std::size_t o = 0; o < layer.outputs; ++o) {
      if (delta[o] == 0.0) continue;
      const double* row = &layer.weights[o * layer.inputs];
      for (std::size_t i = 0; i < layer.inputs; ++i) grad[i] += row[i] * delta[o];
    }
    if (l == 0) {
      b.input_grad = std::move(grad);
    } else {
      const auto& pre = t.pre[l - 1];
      for (std::size_t i = 0; i < grad.size(); ++i) {
        if (pre[i] <= 0.0) grad[i] = 0.0;
      }
      b.deltas[l - 1] = std::move(grad);
    }
  }
  return b;
}

std::string sizes_text(const std::vector<std::size_t>& sizes) {
  std::string s = "[";
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(sizes[i]);
  }
  return s + "]";
}

}  // namespace

// ---------------------------------------------------------------------------

InputEncoding::InputEncoding(std::vector<Slot> slots) : slots_(std::move(slots)) {
  offsets_.reserve(slots_.size());
  for (const auto& s : slots_) {
    offsets_.push_back(width_);
    width_ += s.kind == FeatureKind::kNumeric ? 1 : s.categories.size();
  }
}

InputEncoding InputEncoding::from_casebase(const CaseBase& base) {
  std::vector<Slot> slots;
  const auto& schema = base.schema();
  for (std::size_t i = 0; i < schema.size(); ++i) {
    const auto& f = schema.features[i];
    Slot s{.name = f.name, .kind = f.kind};
    if (f.numeric()) {
      s.range = base.scaler().ranges()[i].value_or(Range{});
    } else {
      s.categories = f.categories;
    }
    slots.push_back(std::move(s));
  }
  return InputEncoding(std::move(slots));
}

std::vector<double> InputEncoding::encode(std::span<const double> values) const {
  if (identity()) return {values.begin(), values.end()};
  if (values.size() != slots_.size()) {
    throw ModelError("value vector has " + std::to_string(values.size()) +
                     " features, encoding expects " +
                     std::to_string(slots_.size()));
  }
  std::vector<double> out(width_, 0.0);
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    const auto& s = slots_[i];
    if (s.kind == FeatureKind::kNumeric) {
      const double span = s.range.max - s.range.min;
      out[offsets_[i]] = span > 0.0 ? (values[i] - s.range.min) / span : 0.0;
    } else {
      const auto cat = static_cast<std::size_t>(values[i]);
      if (values[i] < 0 || cat >= s.categories.size()) {
        throw ModelError("category index out of range for '" + s.name + "'");
      }
      out[offsets_[i] + cat] = 1.0;
    }
  }
  return out;
}

std::vector<double> InputEncoding::decode(std::span<const double> encoded) const {
  if (identity()) return {encoded.begin(), encoded.end()};
  std::vector<double> out(slots_.size(), 0.0);
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    const auto& s = slots_[i];
    if (s.kind == FeatureKind::kNumeric) {
      out[i] = s.range.min + encoded[offsets_[i]] * (s.range.max - s.range.min);
    } else {
      out[i] = argmax(encoded.subspan(offsets_[i], s.categories.size()));
    }
  }
  return out;
}

void InputEncoding::check_compatible(const FeatureSchema& schema) const {
  if (identity()) return;
  if (schema.size() != slots_.size()) {
    throw ModelError("model expects " + std::to_string(slots_.size()) +
                     " features, data has " + std::to_string(schema.size()));
  }
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    const auto& f = schema.features[i];
    const auto& s = slots_[i];
    if (f.name != s.name || f.kind != s.kind) {
      throw ModelError("feature " + std::to_string(i) + " ('" + f.name +
                       "') does not match the model's '" + s.name + "'");
    }
    if (!f.numeric() && f.categories != s.categories) {
      throw ModelError("categories of '" + f.name +
                       "' differ from the model's encoding");
    }
  }
}

// ---------------------------------------------------------------------------

MlpModel::MlpModel(std::vector<DenseLayer> layers, Head head,
                   InputEncoding encoding)
    : layers_(std::move(layers)), head_(head), encoding_(std::move(encoding)) {
  validate();
}

void MlpModel::validate() const {
  if (layers_.empty()) throw ModelError("network has no layers");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    const std::string name = "layer " + std::to_string(l);
    if (layer.inputs == 0 || layer.outputs == 0) {
      throw ModelError(name + " has zero width");
    }
    if (layer.weights.size() != layer.inputs * layer.outputs) {
      throw ModelError(name + ": weight matrix has " +
                       std::to_string(layer.weights.size()) +
                       " values, expected " + std::to_string(layer.outputs) +
                       "x" + std::to_string(layer.inputs));
    }
    if (layer.bias.size() != layer.outputs) {
      throw ModelError(name + ": bias has " + std::to_string(layer.bias.size()) +
                       " values, expected " + std::to_string(layer.outputs));
    }
    if (l > 0 && layers_[l - 1].outputs != layer.inputs) {
      throw ModelError(name + " input width does not match the previous layer");
    }
    const auto finite = [](double v) { return std::isfinite(v); };
    if (!std::all_of(layer.weights.begin(), layer.weights.end(), finite) ||
        !std::all_of(layer.bias.begin(), layer.bias.end(), finite)) {
      throw ModelError(name + " has non-finite parameters");
    }
  }
  if (!encoding_.identity() && encoding_.encoded_width() != input_width()) {
    throw ModelError("encoding width " +
                     std::to_string(encoding_.encoded_width()) +
                     " does not match input layer width " +
                     std::to_string(input_width()));
  }
  if (head_ == Head::kLinear && num_outputs() != 1) {
    throw ModelError("linear head must have a single output");
  }
}

MlpModel MlpModel::initialize(const std::vector<std::size_t>& layer_sizes,
                              Head head, InputEncoding encoding,
                              std::uint64_t seed) {
  if (layer_sizes.size() < 2) {
    throw ModelError("layer_sizes needs at least input and output widths");
  }
  Rng rng(seed);
  std::vector<DenseLayer> layers;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    DenseLayer layer{.inputs = layer_sizes[l], .outputs = layer_sizes[l + 1]};
    const double limit =
        std::sqrt(6.0 / static_cast<double>(layer.inputs + layer.outputs));
    layer.weights.resize(layer.inputs * layer.outputs);
    for (auto& w : layer.weights) w = rng.uniform(-limit, limit);
    layer.bias.assign(layer.outputs, 0.0);
    layers.push_back(std::move(layer));
  }
  return MlpModel(std::move(layers), head, std::move(encoding));
}

std::vector<std::size_t> MlpModel::layer_sizes() const {
  std::vector<std::size_t> sizes{layers_.front().inputs};
  for (const auto& l : layers_) sizes.push_back(l.outputs);
  return sizes;
}

bool MlpModel::operator==(const MlpModel& other) const {
  return layers_ == other.layers_ && head_ == other.head_ &&
         encoding_ == other.encoding_ && class_labels == other.class_labels &&
         label_name == other.label_name;
}

// ---------------------------------------------------------------------------

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> p(logits.size());
  if (logits.empty()) return p;
  const double top = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - top);
    sum += p[i];
  }
  for (auto& v : p) v /= sum;
  return p;
}

int argmax(std::span<const double> values) {
  int best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = static_cast<int>(i);
  }
  return best;
}

ForwardPass forward(const MlpModel& model, std::span<const double> x) {
  Trace t = run(model, x);
  ForwardPass out;
  out.logits = std::move(t.pre.back());
  out.probs = model.head() == Head::kSoftmax ? softmax(out.logits) : out.logits;
  out.penultimate = std::move(t.activations.back());
  return out;
}

ForwardPass forward_values(const MlpModel& model,
                           std::span<const double> values) {
  return forward(model, model.encode(values));
}

std::vector<double> head_logits(const MlpModel& model,
                                std::span<const double> latent) {
  const auto& layer = model.output_layer();
  if (latent.size() != layer.inputs) {
    throw ModelError("latent vector has " + std::to_string(latent.size()) +
                     " entries, expected " + std::to_string(layer.inputs));
  }
  std::vector<double> logits(layer.outputs);
  for (std::size_t o = 0; o < layer.outputs; ++o) {
    double sum = layer.bias[o];
    for (std::size_t j = 0; j < layer.inputs; ++j) {
      sum += layer.weight(o, j) * latent[j];
    }
    logits[o] = sum;
  }
  return logits;
}

int predict_class(const MlpModel& model, std::span<const double> values) {
  return argmax(forward_values(model, values).logits);
}

std::vector<double> backprop_to_input(const MlpModel& model,
                                      std::span<const double> x,
                                      std::span<const double> upstream) {
  if (upstream.size() != model.num_outputs()) {
    throw ModelError("upstream gradient width mismatch");
  }
  const Trace t = run(model, x);
  return backprop(model, t, upstream).input_grad;
}

std::vector<double> input_gradient(const MlpModel& model,
                                   std::span<const double> x, int cls) {
  std::vector<double> upstream(model.num_outputs(), 0.0);
  upstream.at(static_cast<std::size_t>(cls)) = 1.0;
  return backprop_to_input(model, x, upstream);
}

Contributions contributions(const MlpModel& model, std::span<const double> x) {
  if (model.head() != Head::kSoftmax) {
    throw ModelError("contributions need a classification head");
  }
  const ForwardPass pass = forward(model, x);
  Contributions c;
  c.predicted_class = argmax(pass.logits);
  c.logit = pass.logits[c.predicted_class];
  const auto& out = model.output_layer();
  c.bias = out.bias[c.predicted_class];
  c.values.resize(out.inputs);
  for (std::size_t j = 0; j < out.inputs; ++j) {
    c.values[j] = pass.penultimate[j] * out.weight(c.predicted_class, j);
  }
  return c;
}

std::vector<double> gradient_times_input(const MlpModel& model,
                                         std::span<const double> values) {
  const auto x = model.encode(values);
  const int cls = argmax(forward(model, x).logits);
  const auto grad = input_gradient(model, x, cls);
  const auto& enc = model.encoding();
  if (enc.identity()) {
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = grad[i] * x[i];
    return out;
  }
  std::vector<double> out(enc.feature_count(), 0.0);
  for (std::size_t f = 0; f < enc.feature_count(); ++f) {
    const auto& slot = enc.slots()[f];
    const std::size_t width =
        slot.kind == FeatureKind::kNumeric ? 1 : slot.categories.size();
    for (std::size_t k = 0; k < width; ++k) {
      const std::size_t pos = enc.offset(f) + k;
      out[f] += grad[pos] * x[pos];
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

void TrainConfig::validate() const {
  if (epochs < 1) throw ModelError("epochs must be >= 1");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ModelError("learning rate must be a finite non-negative number");
  }
  if (batch_size < 1) throw ModelError("batch size must be >= 1");
  if (!(l2 >= 0.0)) throw ModelError("l2 must be non-negative");
}

TrainResult train_sgd(MlpModel model, const CaseBase& base,
                      const TrainConfig& config) {
  config.validate();
  if (base.empty()) throw DataError("cannot train on an empty case base");
  const bool classification = model.head() == Head::kSoftmax;
  if (classification && base.schema().num_classes() > model.num_outputs()) {
    throw ModelError("network has fewer outputs than the case base has classes");
  }

  const std::size_t n = base.size();
  std::vector<std::vector<double>> inputs;
  inputs.reserve(n);
  for (const auto& c : base.cases()) inputs.push_back(model.encode(c.values));

  auto& layers = model.mutable_layers();
  std::vector<std::vector<double>> grad_w(layers.size());
  std::vector<std::vector<double>> grad_b(layers.size());

  Rng rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainResult result{.model = model};
  const auto batch = static_cast<std::size_t>(config.batch_size);
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t end = std::min(n, start + batch);
      for (std::size_t l = 0; l < layers.size(); ++l) {
        grad_w[l].assign(layers[l].weights.size(), 0.0);
        grad_b[l].assign(layers[l].bias.size(), 0.0);
      }
      for (std::size_t k = start; k < end; ++k) {
        const auto& c = base[order[k]];
        const Trace t = run(model, inputs[order[k]]);
        const auto& logits = t.pre.back();
        std::vector<double> upstream(logits.size());
        if (classification) {
          const auto p = softmax(logits);
          epoch_loss -= std::log(std::max(p[c.label], 1e-300));
          for (std::size_t o = 0; o < p.size(); ++o) {
            upstream[o] = p[o] - (static_cast<int>(o) == c.label ? 1.0 : 0.0);
          }
        } else {
          const double err = logits[0] - c.outcome;
          epoch_loss += err * err;
          upstream[0] = 2.0 * err;
        }
        const Backward b = backprop(model, t, upstream);
        for (std::size_t l = 0; l < layers.size(); ++l) {
          const auto& a = t.activations[l];
          const auto& delta = b.deltas[l];
          auto& gw = grad_w[l];
          for (std::size_t o = 0; o < layers[l].outputs; ++o) {
            grad_b[l][o] += delta[o];
            if (delta[o] == 0.0) continue;
            double* row = &gw[o * layers[l].inputs];
            for (std::size_t i = 0; i < layers[l].inputs; ++i) {
              row[i] += delta[o] * a[i];
            }
          }
        }
      }
      const double scale = 1.0 / static_cast<double>(end - start);
      for (std::size_t l = 0; l < layers.size(); ++l) {
        auto& layer = layers[l];
        for (std::size_t w = 0; w < layer.weights.size(); ++w) {
          layer.weights[w] -= config.learning_rate *
                              (grad_w[l][w] * scale + config.l2 * layer.weights[w]);
        }
        for (std::size_t o = 0; o < layer.bias.size(); ++o) {
          layer.bias[o] -= config.learning_rate * grad_b[l][o] * scale;
        }
      }
    }
    epoch_loss /= static_cast<double>(n);
    if (!std::isfinite(epoch_loss)) throw TrainingDiverged(epoch);
    for (const auto& layer : layers) {
      for (double w : layer.weights) {
        if (!std::isfinite(w)) throw TrainingDiverged(epoch);
      }
    }
    result.loss_trace.push_back(epoch_loss);
  }
  result.model = std::move(model);
  return result;
}

TrainResult fit_model(const CaseBase& base,
                      const std::vector<std::size_t>& hidden,
                      const TrainConfig& config) {
  auto encoding = InputEncoding::from_casebase(base);
  const bool regression = base.schema().task == Task::kRegression;
  std::vector<std::size_t> sizes{encoding.encoded_width()};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(regression ? 1 : base.schema().num_classes());
  MlpModel model = MlpModel::initialize(
      sizes, regression ? Head::kLinear : Head::kSoftmax, std::move(encoding),
      config.seed);
  model.class_labels = base.schema().class_labels;
  model.label_name = base.schema().label_name;
  return train_sgd(std::move(model), base, config);
}

double accuracy(const MlpModel& model, const CaseBase& base) {
  if (base.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& c : base.cases()) {
    if (predict_class(model, c.values) == c.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(base.size());
}

// ---------------------------------------------------------------------------

nlohmann::json model_to_json(const MlpModel& model) {
  nlohmann::json doc;
  doc["format"] = "twincbr-mlp";
  doc["layer_sizes"] = model.layer_sizes();
  doc["weights"] = nlohmann::json::array();
  doc["biases"] = nlohmann::json::array();
  for (const auto& layer : model.layers()) {
    doc["weights"].push_back(layer.weights);
    doc["biases"].push_back(layer.bias);
  }
  doc["hidden_activation"] = "relu";
  doc["head"] = model.head() == Head::kSoftmax ? "softmax" : "linear";
  nlohmann::json features = nlohmann::json::array();
  for (const auto& slot : model.encoding().slots()) {
    nlohmann::json f{{"name", slot.name},
                     {"kind", std::string(to_string(slot.kind))}};
    if (slot.kind == FeatureKind::kNumeric) {
      f["range"] = {slot.range.min, slot.range.max};
    } else {
      f["categories"] = slot.categories;
    }
    features.push_back(std::move(f));
  }
  doc["encoding"] = {{"features", std::move(features)}};
  doc["label_name"] = model.label_name;
  doc["class_labels"] = model.class_labels;
  return doc;
}

MlpModel model_from_json(
    const nlohmann::json& doc,
    const std::optional<std::vector<std::size_t>>& expected_sizes) {
  try {
    const auto sizes = doc.at("layer_sizes").get<std::vector<std::size_t>>();
    if (sizes.size() < 2) throw ModelError("layer_sizes needs >= 2 entries");
    if (expected_sizes && *expected_sizes != sizes) {
      throw ModelError("model has layer sizes " + sizes_text(sizes) +
                       ", expected " + sizes_text(*expected_sizes));
    }
    const auto& weights = doc.at("weights");
    const auto& biases = doc.at("biases");
    if (weights.size() != sizes.size() - 1 || biases.size() != sizes.size() - 1) {
      throw ModelError("model lists " + std::to_string(weights.size()) +
                       " weight matrices for " +
                       std::to_string(sizes.size() - 1) + " layers");
    }
    if (doc.value("hidden_activation", "relu") != "relu") {
      throw ModelError("unsupported hidden activation");
    }
    const auto head_name = doc.at("head").get<std::string>();
    if (head_name != "softmax" && head_name != "linear") {
      throw ModelError("unknown head '" + head_name + "'");
    }
    std::vector<DenseLayer> layers;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
      DenseLayer layer{.inputs = sizes[l], .outputs = sizes[l + 1]};
      layer.weights = weights[l].get<std::vector<double>>();
      layer.bias = biases[l].get<std::vector<double>>();
      if (layer.weights.size() != layer.inputs * layer.outputs) {
        throw ModelError("layer " + std::to_string(l) + ": weight matrix has " +
                         std::to_string(layer.weights.size()) +
                         " values, expected " + std::to_string(layer.outputs) +
                         "x" + std::to_string(layer.inputs));
      }
      layers.push_back(std::move(layer));
    }
    std::vector<InputEncoding::Slot> slots;
    if (doc.contains("encoding")) {
      for (const auto& f : doc.at("encoding").at("features")) {
        InputEncoding::Slot s{
            .name = f.at("name").get<std::string>(),
            .kind = feature_kind_from_string(f.at("kind").get<std::string>())};
        if (s.kind == FeatureKind::kNumeric) {
          const auto r = f.at("range").get<std::vector<double>>();
          if (r.size() != 2) throw ModelError("range needs two numbers");
          s.range = Range{r[0], r[1]};
        } else {
          s.categories = f.at("categories").get<std::vector<std::string>>();
        }
        slots.push_back(std::move(s));
      }
    }
    MlpModel model(std::move(layers),
                   head_name == "softmax" ? Head::kSoftmax : Head::kLinear,
                   InputEncoding(std::move(slots)));
    model.label_name = doc.value("label_name", std::string{});
    model.class_labels =
        doc.value("class_labels", std::vector<std::string>{});
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw ModelError(std::string("malformed model file: ") + e.what());
  } catch (const DataError& e) {
    throw ModelError(std::string("malformed model file: ") + e.what());
  }
}

void save_model(const MlpModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ModelError("cannot write '" + path.string() + "'");
  out << model_to_json(model).dump(1) << '\n';
  if (!out) throw ModelError("write failed for '" + path.string() + "'");
}

MlpModel load_model(const std::filesystem::path& path,
                    const std::optional<std::vector<std::size_t>>& expected_sizes) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelError("cannot open '" + path.string() + "'");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ModelError("malformed model file '" + path.string() + "': " + e.what());
  }
  return model_from_json(doc, expected_sizes);
}

}  // namespace twincbr
