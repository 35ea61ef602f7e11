#include "cli.hpp"

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "twincbr/augmentation.hpp"
#include "twincbr/cf_casebased.hpp"
#include "twincbr/cf_timeseries.hpp"
#include "twincbr/data_model.hpp"
#include "twincbr/errors.hpp"
#include "twincbr/factual.hpp"
#include "twincbr/metrics_report.hpp"
#include "twincbr/neural_twin.hpp"
#include "twincbr/retrieval.hpp"
#include "twincbr/sf_piece.hpp"

namespace twincbr::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::uint64_t seed = 0;
  std::string out;
  std::string config;
  bool to_stdout = false;
  std::size_t threads = 1;

  std::string model;
  std::string data;
  std::string label;
  std::string schema;
  std::string task = "classification";
  std::string hidden = "8";
  int epochs = 200;
  double learning_rate = 0.05;
  int batch_size = 16;
  double l2 = 0.0;

  std::optional<std::size_t> query_index;
  std::size_t factual_k = 1;
  bool include_self = false;
  std::string method;
  double tau = kDefaultMatchTolerance;
  std::string target_class;
  std::size_t max_attempts = 50;
  WachterOptions wachter;
  double alpha = 0.05;
  std::size_t occlusion_window = 0;
  bool grow_left_first = false;

  std::size_t count = 0;
  std::size_t smote_k = 5;

  std::size_t fidelity_k = 3;
  std::string eval_data;
  std::string base;
  std::string variants;
  std::string holdout;

  int n_per_class = 50;
  int dims = 2;
  int classes = 2;
  std::string means;
  double sigma = 1.0;
  int majority = 95;
  int minority = 5;
  int length = 64;
};

void add_training_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--hidden", o.hidden, "Hidden layer widths, comma separated")
      ->capture_default_str();
  cmd->add_option("--epochs", o.epochs)->capture_default_str();
  cmd->add_option("--learning-rate", o.learning_rate)->capture_default_str();
  cmd->add_option("--batch-size", o.batch_size)->capture_default_str();
  cmd->add_option("--l2", o.l2)->capture_default_str();
}

void add_query_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--model", o.model, "Model file written by train");
  cmd->add_option("--data", o.data, "Case base the model was trained on");
  cmd->add_option("--query-index", o.query_index, "Row of the query in --data");
  cmd->add_option("--label", o.label, "Label column (default: the model's)");
}

std::unique_ptr<CLI::App> build_app(Options& o) {
  auto app = std::make_unique<CLI::App>(
      "Twin-system explanations: a neural network paired with a case base.",
      "twincbr");
  app->set_version_flag("--version", version_string());
  app->require_subcommand(1);
  app->fallthrough();
  app->add_option("--seed", o.seed, "Seed for every random draw")
      ->capture_default_str();
  app->add_option("--out", o.out, "Output file");
  app->add_option("--config", o.config,
                  "JSON file of flag defaults; explicit flags win");
  app->add_flag("--stdout", o.to_stdout, "Print the output instead of writing");
  app->add_option("--threads", o.threads, "Worker thread cap")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  auto* train = app->add_subcommand("train", "Train the network");
  train->add_option("--data", o.data, "CSV case base, or .tsv series");
  train->add_option("--label", o.label, "Label column")->default_str("label");
  train->add_option("--schema", o.schema, "JSON schema hint");
  train->add_option("--task", o.task)
      ->check(CLI::IsMember({"classification", "regression"}))
      ->capture_default_str();
  add_training_flags(train, o);

  auto* explain = app->add_subcommand("explain", "Explain one prediction");
  explain->require_subcommand(1);

  auto* factual = explain->add_subcommand("factual", "Nearest-case explanation");
  add_query_flags(factual, o);
  factual->add_option("--k", o.factual_k)->capture_default_str();
  factual->add_flag("--include-self", o.include_self,
                    "Allow the query's own row as a neighbour");

  auto* cf = explain->add_subcommand("cf", "Counterfactual for tabular data");
  add_query_flags(cf, o);
  cf->add_option("--method", o.method)
      ->check(CLI::IsMember({"casebased", "wachter"}))
      ->default_str("casebased");
  cf->add_option("--tau", o.tau)->capture_default_str();
  cf->add_option("--target-class", o.target_class);
  cf->add_option("--max-attempts", o.max_attempts)->capture_default_str();
  cf->add_option("--lambda-init", o.wachter.lambda_init)->capture_default_str();
  cf->add_option("--lambda-growth", o.wachter.lambda_growth)
      ->capture_default_str();
  cf->add_option("--lambda-every", o.wachter.lambda_every)
      ->capture_default_str();
  cf->add_option("--step", o.wachter.step)->capture_default_str();
  cf->add_option("--max-iters", o.wachter.max_iters)->capture_default_str();

  auto* sf = explain->add_subcommand("sf", "Semi-factual and counterfactual");
  add_query_flags(sf, o);
  sf->add_option("--target-class", o.target_class);
  sf->add_option("--alpha", o.alpha)->capture_default_str();

  auto* ts = explain->add_subcommand("ts-cf", "Counterfactual for a series");
  ts->add_option("--model", o.model);
  ts->add_option("--data", o.data, "TSV series, label first");
  ts->add_option("--query-index", o.query_index);
  ts->add_option("--occlusion-window", o.occlusion_window,
                 "Default: a tenth of the series length");
  ts->add_flag("--grow-left-first", o.grow_left_first);

  auto* augment = app->add_subcommand("augment", "Generate synthetic cases");
  augment->add_option("--method", o.method)
      ->check(CLI::IsMember({"cf", "smote"}))
      ->default_str("cf");
  augment->add_option("--data", o.data);
  augment->add_option("--label", o.label)->default_str("label");
  augment->add_option("--target-class", o.target_class);
  augment->add_option("--count", o.count, "Default: enough to balance");
  augment->add_option("--model", o.model, "Validating model (cf); trained if absent");
  augment->add_option("--tau", o.tau)->capture_default_str();
  augment->add_option("--max-attempts", o.max_attempts)->capture_default_str();
  augment->add_option("--k", o.smote_k, "SMOTE neighbours")->capture_default_str();
  add_training_flags(augment, o);

  auto* eval = app->add_subcommand("eval", "Evaluation harnesses");
  eval->require_subcommand(1);
  auto* fidelity = eval->add_subcommand("fidelity", "Twin fidelity");
  fidelity->add_option("--model", o.model);
  fidelity->add_option("--data", o.data);
  fidelity->add_option("--label", o.label);
  fidelity->add_option("--k", o.fidelity_k)->capture_default_str();
  fidelity->add_option("--eval-data", o.eval_data,
                       "Cases to score (default: --data, self excluded)");
  auto* eval_aug = eval->add_subcommand("augment", "Retrain and compare");
  eval_aug->add_option("--base", o.base);
  eval_aug->add_option("--variants", o.variants,
                       "Comma-separated CSVs of synthetic cases");
  eval_aug->add_option("--holdout", o.holdout);
  eval_aug->add_option("--label", o.label)->default_str("label");
  add_training_flags(eval_aug, o);

  auto* synth = app->add_subcommand("synth", "Synthetic datasets");
  synth->require_subcommand(1);
  auto* blobs = synth->add_subcommand("blobs", "Gaussian blobs, CSV");
  blobs->add_option("--n-per-class", o.n_per_class)->capture_default_str();
  blobs->add_option("--dims", o.dims)->capture_default_str();
  blobs->add_option("--classes", o.classes)->capture_default_str();
  blobs->add_option("--means", o.means, "Class means: 0,0;3,3");
  blobs->add_option("--sigma", o.sigma)->capture_default_str();
  auto* imb = synth->add_subcommand("imbalanced", "Two overlapping regimes, CSV");
  imb->add_option("--majority", o.majority)->capture_default_str();
  imb->add_option("--minority", o.minority)->capture_default_str();
  auto* series = synth->add_subcommand("series", "Noise vs bump series, TSV");
  series->add_option("--n-per-class", o.n_per_class)->capture_default_str();
  series->add_option("--length", o.length)->capture_default_str();
  return app;
}

std::vector<CLI::App*> chain_of(CLI::App& app) {
  std::vector<CLI::App*> chain{&app};
  while (!chain.back()->get_subcommands().empty()) {
    chain.push_back(chain.back()->get_subcommands().front());
  }
  return chain;
}

CLI::Option* find_option(const std::vector<CLI::App*>& chain,
                         const std::string& name) {
  for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
    if (auto* opt = (*it)->get_option_no_throw("--" + name)) return opt;
  }
  return nullptr;
}

std::string scalar_text(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

// Flags supplied by the config file for options not given explicitly.
std::vector<std::string> config_args(const std::vector<CLI::App*>& chain,
                                     const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open config '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw UsageError("malformed config '" + path + "': " + e.what());
  }
  if (!doc.is_object()) throw UsageError("config must be a JSON object");
  std::vector<std::string> extra;
  for (const auto& [key, value] : doc.items()) {
    if (key == "config") continue;
    auto* opt = find_option(chain, key);
    if (opt == nullptr || opt->count() > 0) continue;
    if (value.is_boolean()) {
      if (value.get<bool>()) extra.push_back("--" + key);
      continue;
    }
    std::string text;
    if (value.is_array()) {
      for (std::size_t i = 0; i < value.size(); ++i) {
        if (i > 0) text += ',';
        text += scalar_text(value[i]);
      }
    } else {
      text = scalar_text(value);
    }
    extra.push_back("--" + key);
    extra.push_back(text);
  }
  return extra;
}

bool is_path_option(const std::string& name) {
  return name == "model" || name == "data" || name == "schema" ||
         name == "base" || name == "holdout" || name == "variants" ||
         name == "eval-data";
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream in(text);
  while (std::getline(in, cur, sep)) {
    if (!cur.empty()) parts.push_back(cur);
  }
  return parts;
}

// Options that shaped the result. Output routing is left out and paths are
// reduced to file names so reruns elsewhere hash the same.
json recorded_config(const std::vector<CLI::App*>& chain) {
  json cfg = json::object();
  std::string command;
  for (std::size_t i = 1; i < chain.size(); ++i) {
    if (i > 1) command += ' ';
    command += chain[i]->get_name();
  }
  cfg["command"] = command;
  for (auto* app : chain) {
    for (const auto* opt : app->get_options()) {
      if (opt->count() == 0 || opt->get_lnames().empty()) continue;
      const auto& name = opt->get_lnames().front();
      if (name == "out" || name == "stdout" || name == "config" ||
          name == "threads" || name == "seed" || name == "help" ||
          name == "version") {
        continue;
      }
      std::string value;
      for (const auto& r : opt->results()) {
        if (!value.empty()) value += ',';
        if (is_path_option(name)) {
          std::string joined;
          for (const auto& part : split(r, ',')) {
            if (!joined.empty()) joined += ',';
            joined += fs::path(part).filename().string();
          }
          value += joined;
        } else {
          value += r;
        }
      }
      cfg[name] = opt->get_expected_max() == 0 ? json(true) : json(value);
    }
  }
  return cfg;
}

// ---------------------------------------------------------------------------

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw UsageError(std::string("missing required flag ") + flag);
}

std::size_t require_query(const Options& o) {
  if (!o.query_index) throw UsageError("missing required flag --query-index");
  return *o.query_index;
}

void require_output(const Options& o) {
  if (o.out.empty() && !o.to_stdout) {
    throw UsageError("missing required flag --out (or pass --stdout)");
  }
}

std::vector<std::size_t> parse_sizes(const std::string& text) {
  std::vector<std::size_t> sizes;
  for (const auto& part : split(text, ',')) {
    std::size_t v = 0;
    const auto [ptr, ec] =
        std::from_chars(part.data(), part.data() + part.size(), v);
    if (ec != std::errc{} || ptr != part.data() + part.size() || v == 0) {
      throw UsageError("--hidden expects positive integers, got '" + text + "'");
    }
    sizes.push_back(v);
  }
  return sizes;
}

TrainConfig train_config(const Options& o) {
  TrainConfig cfg{.epochs = o.epochs,
                  .learning_rate = o.learning_rate,
                  .batch_size = o.batch_size,
                  .seed = o.seed,
                  .l2 = o.l2};
  try {
    cfg.validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

void deliver_text(const Options& o, const std::string& text, std::ostream& out) {
  if (!o.out.empty()) write_text(o.out, text);
  if (o.to_stdout) {
    out << text;
  } else {
    out << o.out << '\n';
  }
}

struct Context {
  Options& o;
  std::vector<CLI::App*> chain;
  std::ostream& out;
};

void deliver_report(const Context& ctx, std::string_view kind, json body,
                    const std::string& model_fingerprint = {}) {
  Provenance prov{.seed = ctx.o.seed,
                  .config = recorded_config(ctx.chain),
                  .model_fingerprint = model_fingerprint};
  const auto report = make_report(kind, std::move(body), prov);
  deliver_text(ctx.o, report.dump(2) + "\n", ctx.out);
}

bool is_tsv(const std::string& path) {
  return fs::path(path).extension() == ".tsv";
}

CaseBase load_csv(const std::string& path, const std::string& label,
                  Task task = Task::kClassification,
                  const std::string& schema_hint = {}) {
  CsvOptions opts;
  opts.label_name = label.empty() ? "label" : label;
  opts.task = task;
  if (!schema_hint.empty()) opts.schema_hint = schema_hint;
  return load_tabular_csv(path, opts);
}

FeatureSchema schema_of(const MlpModel& model) {
  if (model.encoding().identity()) {
    throw ModelError("model carries no feature encoding");
  }
  FeatureSchema schema;
  for (const auto& slot : model.encoding().slots()) {
    schema.features.push_back(Feature{.name = slot.name,
                                      .kind = slot.kind,
                                      .categories = slot.categories});
  }
  schema.label_name = model.label_name.empty() ? "label" : model.label_name;
  schema.class_labels = model.class_labels;
  schema.task = model.head() == Head::kLinear ? Task::kRegression
                                              : Task::kClassification;
  return schema;
}

// Case base in the model's feature, category and class orders.
CaseBase load_for_model(const std::string& path, const MlpModel& model,
                        const std::string& label_override) {
  const auto reference = schema_of(model);
  const auto label =
      label_override.empty() ? reference.label_name : label_override;
  return conform_to(load_csv(path, label, reference.task), reference);
}

// A generator that found nothing writes just the header.
bool header_only(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") != std::string::npos) ++rows;
    if (rows > 1) return false;
  }
  return rows == 1;
}

CaseBase renumbered(const CaseBase& base, std::int64_t first_id) {
  std::vector<Case> cases = base.cases();
  for (auto& c : cases) c.id = first_id++;
  return CaseBase(base.schema(), std::move(cases));
}

int resolve_class(const std::vector<std::string>& labels,
                  const std::string& text) {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == text) return static_cast<int>(i);
  }
  int idx = -1;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), idx);
  if (ec == std::errc{} && ptr == text.data() + text.size() && idx >= 0 &&
      static_cast<std::size_t>(idx) < labels.size()) {
    return idx;
  }
  throw DataError("unknown class '" + text + "'");
}

std::string label_text(const FeatureSchema& schema, const Case& c) {
  if (schema.task == Task::kRegression) return format_number(c.outcome);
  return schema.class_labels.at(c.label);
}

json class_json(const std::vector<std::string>& labels, int cls) {
  json j{{"index", cls}};
  if (cls >= 0 && static_cast<std::size_t>(cls) < labels.size()) {
    j["label"] = labels[cls];
  }
  return j;
}

json display_value(const Feature& f, double v) {
  if (f.numeric()) return v;
  const auto idx = static_cast<std::size_t>(v);
  return idx < f.categories.size() ? json(f.categories[idx]) : json(v);
}

json case_json(const CaseBase& base, const Case& c) {
  const auto& schema = base.schema();
  json values = json::object();
  for (std::size_t f = 0; f < schema.size(); ++f) {
    values[schema.features[f].name] = display_value(schema.features[f], c.values[f]);
  }
  return json{{"id", c.id}, {"values", values}, {"label", label_text(schema, c)}};
}

// Plot-ready before/after table.
json feature_table(const CaseBase& base, std::span<const double> before,
                   std::span<const double> after,
                   std::span<const std::size_t> changed) {
  json rows = json::array();
  const auto& features = base.schema().features;
  for (std::size_t f = 0; f < features.size(); ++f) {
    const bool is_changed =
        std::find(changed.begin(), changed.end(), f) != changed.end();
    rows.push_back({{"name", features[f].name},
                    {"kind", to_string(features[f].kind)},
                    {"before", display_value(features[f], before[f])},
                    {"after", display_value(features[f], after[f])},
                    {"changed", is_changed}});
  }
  return rows;
}

json names_of(const CaseBase& base, std::span<const std::size_t> idx) {
  json names = json::array();
  for (auto i : idx) names.push_back(base.schema().features[i].name);
  return names;
}

const Case& pick_query(const CaseBase& base, std::size_t index) {
  if (index >= base.size()) {
    throw DataError("--query-index " + std::to_string(index) +
                    " is out of range for " + std::to_string(base.size()) +
                    " rows");
  }
  return base[index];
}

// ---------------------------------------------------------------------------

int cmd_train(const Context& ctx) {
  const auto& o = ctx.o;
  require(o.data, "--data");
  require_output(o);
  const auto hidden = parse_sizes(o.hidden);
  const auto cfg = train_config(o);
  const auto task =
      o.task == "regression" ? Task::kRegression : Task::kClassification;
  CaseBase base = is_tsv(o.data)
                      ? load_timeseries_tsv(o.data).to_casebase()
                      : load_csv(o.data, o.label, task, o.schema);
  const auto result = fit_model(base, hidden, cfg);
  deliver_text(o, model_to_json(result.model).dump(1) + "\n", ctx.out);
  return kExitOk;
}

int cmd_factual(const Context& ctx) {
  const auto& o = ctx.o;
  require(o.model, "--model");
  require(o.data, "--data");
  const auto qi = require_query(o);
  require_output(o);
  const auto model = load_model(o.model);
  const auto base = load_for_model(o.data, model, o.label);
  const Case& q = pick_query(base, qi);
  FactualOptions opts{.k = o.factual_k};
  if (!o.include_self) opts.exclude_id = q.id;

  json body;
  body["query"] = case_json(base, q);
  body["query"]["index"] = qi;
  body["realization"] = "retrieved training cases";
  if (model.head() == Head::kLinear) {
    const auto r = explain_factual_regression(model, base, q.values, opts);
    body["predicted"] = r.predicted;
    body["space"] = to_string(Space::kLatent);
    json ns = json::array();
    for (const auto& n : r.neighbors) {
      ns.push_back({{"case", case_json(base, base.at_id(n.case_id))},
                    {"distance", n.distance},
                    {"outcome", n.outcome}});
    }
    body["neighbors"] = ns;
  } else {
    const auto r = explain_factual(model, base, q.values, opts);
    body["predicted_class"] = class_json(model.class_labels, r.predicted_class);
    body["space"] = to_string(Space::kContribution);
    body["query_contributions"] = r.query_contributions;
    body["query_input_attribution"] = r.query_attribution;
    json ns = json::array();
    for (const auto& n : r.neighbors) {
      ns.push_back({{"case", case_json(base, base.at_id(n.case_id))},
                    {"distance", n.distance},
                    {"predicted_class",
                     class_json(model.class_labels, n.predicted_class)},
                    {"contributions", n.contributions},
                    {"input_attribution", n.input_attribution}});
    }
    body["neighbors"] = ns;
  }
  body["feature_names"] = names_of(base, [&] {
    std::vector<std::size_t> all(base.schema().size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return all;
  }());
  deliver_report(ctx, "factual", std::move(body), fingerprint(model_to_json(model)));
  return kExitOk;
}

int cmd_cf(const Context& ctx) {
  const auto& o = ctx.o;
  require(o.model, "--model");
  require(o.data, "--data");
  const auto qi = require_query(o);
  require_output(o);
  const auto model = load_model(o.model);
  if (model.head() != Head::kSoftmax) {
    throw ModelError("counterfactuals need a classification model");
  }
  const auto base = load_for_model(o.data, model, o.label);
  const Case& q = pick_query(base, qi);
  const auto& labels = model.class_labels;
  std::optional<int> target;
  if (!o.target_class.empty()) target = resolve_class(labels, o.target_class);
  const auto xcs = mine_explanation_cases(base, o.tau);
  const std::string method = o.method.empty() ? "casebased" : o.method;

  Counterfactual cf;
  if (method == "wachter") {
    if (!target) {
      const auto probs = forward_values(model, q.values).probs;
      const int own = argmax(probs);
      int best = -1;
      for (std::size_t c = 0; c < probs.size(); ++c) {
        if (static_cast<int>(c) == own) continue;
        if (best < 0 || probs[c] > probs[best]) best = static_cast<int>(c);
      }
      target = best;
    }
    auto wopts = o.wachter;
    wopts.tau = o.tau;
    cf = wachter_cf(q.values, model, base, *target, wopts);
  } else {
    CaseBasedOptions copts{.tau = o.tau,
                           .max_attempts = o.max_attempts,
                           .target_class = target,
                           .query_id = q.id};
    cf = generate_cf(q.values, model, base, xcs, copts);
  }
  const auto metrics = evaluate_explanation(q.values, cf.instance, model, base,
                                            xcs, o.tau);

  json body;
  body["method"] = method;
  body["query"] = case_json(base, q);
  body["query"]["index"] = qi;
  body["query_class"] = class_json(labels, cf.query_class);
  json c;
  c["values"] = cf.instance;
  c["predicted_class"] = class_json(labels, cf.instance_class);
  c["target_class"] = class_json(labels, cf.target_class);
  c["valid"] = cf.valid;
  c["provenance"] = to_string(cf.provenance);
  c["changed_features"] = names_of(base, cf.changed_features);
  c["attempts"] = cf.attempts;
  if (cf.xc_index) {
    const auto& xc = xcs[*cf.xc_index];
    c["explanation_case"] = {{"first", xc.first},
                             {"second", xc.second},
                             {"diff", names_of(base, xc.diff)}};
  } else {
    c["explanation_case"] = nullptr;
  }
  c["donor_id"] = cf.donor_id ? json(*cf.donor_id) : json(nullptr);
  body["counterfactual"] = c;
  body["features"] = feature_table(base, q.values, cf.instance, cf.changed_features);
  body["metrics"] = to_json(metrics);
  body["native_pairs"] = xcs.size();
  deliver_report(ctx, "counterfactual", std::move(body),
                 fingerprint(model_to_json(model)));
  return kExitOk;
}

int cmd_sf(const Context& ctx) {
  const auto& o = ctx.o;
  require(o.model, "--model");
  require(o.data, "--data");
  const auto qi = require_query(o);
  require(o.target_class, "--target-class");
  require_output(o);
  const auto model = load_model(o.model);
  const auto base = load_for_model(o.data, model, o.label);
  const Case& q = pick_query(base, qi);
  const auto& labels = model.class_labels;
  const int target = resolve_class(labels, o.target_class);
  const auto stats = fit_hurdle(model, base);
  const auto latent_index = build_latent_index(model, base);
  const auto r = generate_sf_cf(model, stats, latent_index, q.values, target,
                                PieceOptions{.alpha = o.alpha});

  json body;
  body["query"] = case_json(base, q);
  body["query"]["index"] = qi;
  body["query_class"] = class_json(labels, r.query_class);
  body["target_class"] = class_json(labels, r.target_class);
  body["alpha"] = o.alpha;
  body["query_latent"] = r.query_latent;
  json ex = json::array();
  for (const auto& f : r.exceptional) {
    ex.push_back({{"latent_feature", f.index},
                  {"observed", f.observed},
                  {"expected", f.expected},
                  {"probability", f.score},
                  {"reason", to_string(f.reason)}});
  }
  body["exceptional_features"] = ex;
  json trace = json::array();
  for (const auto& s : r.trace) {
    trace.push_back({{"latent_feature", s.feature},
                     {"before", s.before},
                     {"after", s.after},
                     {"predicted_class", class_json(labels, s.predicted_class)}});
  }
  body["trace"] = trace;
  body["semifactual"] = {
      {"latent", r.semifactual_latent},
      {"degenerate", r.semifactual_degenerate},
      {"realized_case", case_json(base, base.at_id(r.semifactual_case.case_id))},
      {"realized_distance", r.semifactual_case.distance},
      {"realization", "retrieved training case, nearest in latent space"}};
  if (r.counterfactual_latent) {
    body["counterfactual"] = {
        {"latent", *r.counterfactual_latent},
        {"steps_to_flip", *r.steps_to_flip},
        {"realized_case",
         case_json(base, base.at_id(r.counterfactual_case->case_id))},
        {"realized_distance", r.counterfactual_case->distance},
        {"realization", "retrieved training case, nearest in latent space"}};
  } else {
    body["counterfactual"] = nullptr;
  }
  deliver_report(ctx, "semifactual", std::move(body),
                 fingerprint(model_to_json(model)));
  return kExitOk;
}

int cmd_ts_cf(const Context& ctx) {
  const auto& o = ctx.o;
  require(o.model, "--model");
  require(o.data, "--data");
  const auto qi = require_query(o);
  require_output(o);
  const auto model = load_model(o.model);
  auto ds = load_timeseries_tsv(o.data);
  if (!model.class_labels.empty()) {
    std::vector<int> remap;
    for (const auto& l : ds.class_labels) {
      remap.push_back(resolve_class(model.class_labels, l));
    }
    for (auto& inst : ds.instances) inst.label = remap[inst.label];
    ds.class_labels = model.class_labels;
  }
  model.encoding().check_compatible(ds.to_casebase().schema());
  if (qi >= ds.size()) {
    throw DataError("--query-index " + std::to_string(qi) +
                    " is out of range for " + std::to_string(ds.size()) +
                    " series");
  }
  const auto& q = ds.instances[qi];
  const auto classify = classifier_of(model);
  const auto predictions = predict_all(classify, ds);
  const std::size_t window = o.occlusion_window > 0
                                 ? o.occlusion_window
                                 : default_occlusion_window(ds.length());
  const auto importance =
      occlusion_importance(classify, q.values, ds.mean_signal(), window);
  const auto r = native_guide_cf(
      q.values, classify, ds, predictions, importance,
      NativeGuideOptions{.exclude_id = q.id,
                         .grow_right_first = !o.grow_left_first});
  const auto* nun_inst = ds.find(r.nun_id);

  const auto& labels = ds.class_labels;
  json body;
  body["query"] = {{"index", qi}, {"id", q.id}, {"label", labels.at(q.label)}};
  body["query_class"] = class_json(labels, r.query_class);
  body["nun"] = {{"id", r.nun_id}, {"class", class_json(labels, r.nun_class)}};
  body["window"] = {{"begin", r.window_begin}, {"end", r.window_end}};
  body["valid"] = r.valid;
  body["distance_to_counterfactual"] = r.distance_to_counterfactual;
  body["distance_to_nun"] = r.distance_to_nun;
  body["classifier_calls"] = r.evaluations;
  body["occlusion_window"] = window;
  body["importance_method"] = importance.method;
  body["traces"] = {{"query", q.values},
                    {"counterfactual", r.counterfactual},
                    {"nun", nun_inst->values},
                    {"importance", importance.values}};
  deliver_report(ctx, "timeseries_counterfactual", std::move(body),
                 fingerprint(model_to_json(model)));
  return kExitOk;
}

int cmd_augment(const Context& ctx) {
  const auto& o = ctx.o;
  require(o.data, "--data");
  require(o.target_class, "--target-class");
  require_output(o);
  const std::string method = o.method.empty() ? "cf" : o.method;
  CaseBase base = load_csv(o.data, o.label);
  std::optional<MlpModel> model;
  if (method == "cf") {
    if (!o.model.empty()) {
      model = load_model(o.model);
      base = conform_to(base, schema_of(*model));
    } else {
      model = fit_model(base, parse_sizes(o.hidden), train_config(o)).model;
    }
  }
  const int target = resolve_class(base.schema().class_labels, o.target_class);
  const std::size_t n = o.count > 0 ? o.count : balancing_count(base, target);
  if (n == 0) {
    throw DataError("class '" + base.schema().class_labels[target] +
                    "' is already the largest; pass --count");
  }
  std::vector<Case> cases;
  if (method == "cf") {
    const auto syn = cf_augment(
        base, *model, target, n,
        CfAugmentOptions{.tau = o.tau, .max_attempts = o.max_attempts});
    cases = synthetic_cases(syn);
  } else {
    cases = synthetic_cases(smote(base, target, o.smote_k, n, o.seed));
  }
  deliver_text(o, format_tabular_csv(base.schema(), cases), ctx.out);
  return kExitOk;
}

int cmd_fidelity(const Context& ctx) {
  const auto& o = ctx.o;
  require(o.model, "--model");
  require(o.data, "--data");
  require_output(o);
  const auto model = load_model(o.model);
  if (model.head() != Head::kSoftmax) {
    throw ModelError("fidelity needs a classification model");
  }
  const auto base = load_for_model(o.data, model, o.label);
  std::optional<CaseBase> eval_base;
  if (!o.eval_data.empty()) {
    eval_base = load_for_model(o.eval_data, model, o.label);
  }
  const auto& eval_cases = eval_base ? eval_base->cases() : base.cases();
  FidelityOptions opts{.k = o.fidelity_k,
                       .space = Space::kContribution,
                       .exclude_self = !eval_base};
  const double contribution = twin_fidelity(model, base, eval_cases, opts);
  opts.space = Space::kFeature;
  const double feature = twin_fidelity(model, base, eval_cases, opts);

  json body{{"fidelity", contribution},
            {"space", to_string(Space::kContribution)},
            {"feature_space_fidelity", feature},
            {"k", o.fidelity_k},
            {"eval_cases", eval_cases.size()},
            {"exclude_self", opts.exclude_self}};
  deliver_report(ctx, "fidelity", std::move(body),
                 fingerprint(model_to_json(model)));
  return kExitOk;
}

int cmd_eval_augment(const Context& ctx) {
  const auto& o = ctx.o;
  require(o.base, "--base");
  require(o.holdout, "--holdout");
  require_output(o);
  const auto base = load_csv(o.base, o.label);
  std::vector<std::pair<std::string, CaseBase>> variants;
  std::int64_t next_id = base.next_id();
  for (const auto& path : split(o.variants, ',')) {
    std::vector<Case> extra;
    if (!header_only(path)) {
      extra = renumbered(conform_to(load_csv(path, o.label), base.schema()),
                         base.next_id())
                  .cases();
    }
    variants.emplace_back(fs::path(path).stem().string(),
                          base.with_cases(extra));
    next_id = std::max(next_id, variants.back().second.next_id());
  }
  const auto holdout = renumbered(
      conform_to(load_csv(o.holdout, o.label), base.schema()), next_id);
  const ModelSpec spec{.hidden = parse_sizes(o.hidden), .train = train_config(o)};
  const auto rows = retrain_eval(base, variants, holdout, spec, o.threads);

  const auto& labels = base.schema().class_labels;
  json table = json::array();
  for (const auto& row : rows) {
    json recall = json::object();
    json precision = json::object();
    json f1 = json::object();
    for (std::size_t c = 0; c < labels.size(); ++c) {
      recall[labels[c]] = row.scores.recall[c];
      precision[labels[c]] = row.scores.precision[c];
      f1[labels[c]] = row.scores.f1[c];
    }
    table.push_back({{"name", row.name},
                     {"train_size", row.train_size},
                     {"accuracy", row.scores.accuracy},
                     {"recall", recall},
                     {"precision", precision},
                     {"f1", f1},
                     {"macro_f1", row.scores.macro_f1},
                     {"confusion", row.scores.confusion}});
  }
  json body{{"rows", table},
            {"class_labels", labels},
            {"holdout_size", holdout.size()},
            {"hidden", spec.hidden},
            {"epochs", spec.train.epochs}};
  deliver_report(ctx, "augmentation_eval", std::move(body));
  return kExitOk;
}

std::vector<std::vector<double>> parse_means(const std::string& text) {
  std::vector<std::vector<double>> means;
  for (const auto& group : split(text, ';')) {
    std::vector<double> m;
    for (const auto& part : split(group, ',')) {
      double v = 0.0;
      const auto [ptr, ec] =
          std::from_chars(part.data(), part.data() + part.size(), v);
      if (ec != std::errc{} || ptr != part.data() + part.size()) {
        throw UsageError("--means: cannot parse '" + part + "'");
      }
      m.push_back(v);
    }
    means.push_back(std::move(m));
  }
  return means;
}

int cmd_synth(const Context& ctx, const std::string& kind) {
  const auto& o = ctx.o;
  require_output(o);
  if (kind == "blobs") {
    auto means = parse_means(o.means);
    if (means.empty()) {
      if (o.classes < 1) throw UsageError("--classes must be positive");
      for (int c = 0; c < o.classes; ++c) {
        means.emplace_back(static_cast<std::size_t>(std::max(o.dims, 0)),
                           3.0 * c);
      }
    }
    for (const auto& m : means) {
      if (m.size() != static_cast<std::size_t>(o.dims)) {
        throw UsageError("--means entries need --dims values each");
      }
    }
    const auto base = synth_blobs(o.n_per_class, o.dims, means, o.sigma, o.seed);
    deliver_text(o, format_tabular_csv(base.schema(), base.cases()), ctx.out);
  } else if (kind == "imbalanced") {
    const auto base = synth_imbalanced(o.majority, o.minority, o.seed);
    deliver_text(o, format_tabular_csv(base.schema(), base.cases()), ctx.out);
  } else {
    const auto ds = synth_series(o.n_per_class, o.length, o.seed);
    deliver_text(o, format_timeseries_tsv(ds), ctx.out);
  }
  return kExitOk;
}

int dispatch(const Context& ctx) {
  const auto& chain = ctx.chain;
  const std::string top = chain.at(1)->get_name();
  const std::string sub = chain.size() > 2 ? chain[2]->get_name() : "";
  if (top == "train") return cmd_train(ctx);
  if (top == "augment") return cmd_augment(ctx);
  if (top == "synth") return cmd_synth(ctx, sub);
  if (top == "explain") {
    if (sub == "factual") return cmd_factual(ctx);
    if (sub == "cf") return cmd_cf(ctx);
    if (sub == "sf") return cmd_sf(ctx);
    return cmd_ts_cf(ctx);
  }
  if (sub == "fidelity") return cmd_fidelity(ctx);
  return cmd_eval_augment(ctx);
}

void parse(CLI::App& app, const std::vector<std::string>& args) {
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  app.parse(reversed);
}

std::string one_line(std::string text) {
  for (auto& ch : text) {
    if (ch == '\n' || ch == '\r') ch = ' ';
  }
  return text;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  Options o;
  auto app = build_app(o);
  try {
    parse(*app, args);
    if (!o.config.empty()) {
      const auto extra = config_args(chain_of(*app), o.config);
      if (!extra.empty()) {
        auto full = args;
        full.insert(full.end(), extra.begin(), extra.end());
        o = Options{};
        app = build_app(o);
        parse(*app, full);
      }
    }
  } catch (const CLI::CallForHelp&) {
    auto* target = app.get();
    while (!target->get_subcommands().empty()) {
      target = target->get_subcommands().front();
    }
    out << target->help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app->help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << version_string() << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    auto* deepest = app.get();
    while (!deepest->get_subcommands().empty()) {
      deepest = deepest->get_subcommands().front();
    }
    const auto left = app->remaining(true);
    if (left.empty() || deepest->get_subcommands({}).empty() ||
        left.front().rfind("-", 0) == 0) {
      err << "error: " << one_line(e.what()) << '\n';
    } else {
      err << "error: unknown subcommand '" << left.front() << "'\n";
    }
    if (dynamic_cast<const CLI::ExtrasError*>(&e) != nullptr ||
        dynamic_cast<const CLI::RequiredError*>(&e) != nullptr) {
      err << app->help();
    }
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "error: " << one_line(e.what()) << '\n';
    return kExitUsage;
  }

  try {
    Context ctx{o, chain_of(*app), out};
    return dispatch(ctx);
  } catch (const UsageError& e) {
    err << "error: " << one_line(e.what()) << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << one_line(e.what()) << '\n';
    return kExitData;
  }
}

}  // namespace twincbr::cli
