#include "twincbr/data_model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "twincbr/errors.hpp"
#include "twincbr/random.hpp"

namespace twincbr {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::optional<double> parse_real(std::string_view text) {
  text = trim(text);
  if (text.empty()) return std::nullopt;
  if (text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] =
      std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    return std::nullopt;
  }
  if (!std::isfinite(value)) return std::nullopt;
  return value;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  return lines;
}

// RFC 4180 style: fields may be quoted, "" escapes a quote.
std::vector<std::string> split_csv_row(std::string_view line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
      was_quoted = true;
    } else if (ch == ',') {
      fields.push_back(was_quoted ? field : std::string(trim(field)));
      field.clear();
      was_quoted = false;
    } else {
      field.push_back(ch);
    }
  }
  fields.push_back(was_quoted ? field : std::string(trim(field)));
  return fields;
}

std::string quote_csv(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos &&
      trim(field) == field) {
    return field;
  }
  std::string out = "\"";
  for (char ch : field) {
    if (ch == '"') out.push_back('"');
    out.push_back(ch);
  }
  out.push_back('"');
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

struct SchemaHint {
  std::unordered_map<std::string, FeatureKind> kinds;
  std::optional<std::string> label;
};

SchemaHint read_schema_hint(const std::filesystem::path& path) {
  SchemaHint hint;
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed schema file '" + path.string() +
                    "': " + e.what());
  }
  if (!doc.is_object()) throw DataError("schema file must hold a JSON object");
  if (doc.contains("label")) hint.label = doc.at("label").get<std::string>();
  if (doc.contains("features")) {
    for (const auto& f : doc.at("features")) {
      const auto name = f.at("name").get<std::string>();
      hint.kinds[name] = feature_kind_from_string(f.at("kind").get<std::string>());
    }
  }
  return hint;
}

}  // namespace

std::string_view to_string(FeatureKind kind) {
  return kind == FeatureKind::kNumeric ? "numeric" : "categorical";
}

FeatureKind feature_kind_from_string(std::string_view text) {
  if (text == "numeric") return FeatureKind::kNumeric;
  if (text == "categorical") return FeatureKind::kCategorical;
  throw DataError("unknown feature kind '" + std::string(text) + "'");
}

std::string format_number(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

std::optional<int> Feature::category_index(std::string_view value) const {
  const auto it = std::find(categories.begin(), categories.end(), value);
  if (it == categories.end()) return std::nullopt;
  return static_cast<int>(it - categories.begin());
}

std::optional<std::size_t> FeatureSchema::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i].name == name) return i;
  }
  return std::nullopt;
}

std::optional<int> FeatureSchema::class_index(std::string_view label) const {
  const auto it = std::find(class_labels.begin(), class_labels.end(), label);
  if (it == class_labels.end()) return std::nullopt;
  return static_cast<int>(it - class_labels.begin());
}

bool FeatureSchema::numeric_only() const {
  return std::all_of(features.begin(), features.end(),
                     [](const Feature& f) { return f.numeric(); });
}

void FeatureSchema::validate() const {
  std::unordered_set<std::string> names;
  for (const auto& f : features) {
    if (f.name.empty()) throw DataError("feature with empty name");
    if (!names.insert(f.name).second) {
      throw DataError("duplicate feature name '" + f.name + "'");
    }
    if (f.numeric()) {
      if (!(f.min <= f.max)) {
        throw DataError("feature '" + f.name + "' has min > max");
      }
    } else {
      std::unordered_set<std::string> cats(f.categories.begin(),
                                           f.categories.end());
      if (cats.size() != f.categories.size()) {
        throw DataError("feature '" + f.name + "' has duplicate categories");
      }
    }
  }
  if (names.count(label_name) != 0) {
    throw DataError("label '" + label_name + "' is also a feature name");
  }
  if (task == Task::kClassification) {
    if (class_labels.empty()) throw DataError("no class labels");
    std::unordered_set<std::string> labels(class_labels.begin(),
                                           class_labels.end());
    if (labels.size() != class_labels.size()) {
      throw DataError("duplicate class labels");
    }
  }
}

Scaler Scaler::fit(const FeatureSchema& schema, std::span<const Case> cases) {
  std::vector<std::optional<Range>> ranges(schema.size());
  for (std::size_t i = 0; i < schema.size(); ++i) {
    if (!schema.features[i].numeric()) continue;
    if (cases.empty()) {
      ranges[i] = Range{schema.features[i].min, schema.features[i].max};
      continue;
    }
    Range r{cases.front().values[i], cases.front().values[i]};
    for (const auto& c : cases) {
      r.min = std::min(r.min, c.values[i]);
      r.max = std::max(r.max, c.values[i]);
    }
    ranges[i] = r;
  }
  return Scaler(std::move(ranges));
}

double Scaler::normalize(std::size_t feature, double value) const {
  const auto& r = ranges_[feature];
  if (!r) return value;
  const double span = r->max - r->min;
  if (span <= 0.0) return 0.0;
  return (value - r->min) / span;
}

double Scaler::denormalize(std::size_t feature, double scaled) const {
  const auto& r = ranges_[feature];
  if (!r) return scaled;
  return r->min + scaled * (r->max - r->min);
}

std::vector<double> Scaler::normalize(std::span<const double> values) const {
  std::vector<double> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    out[i] = normalize(i, values[i]);
  }
  return out;
}

CaseBase::CaseBase(FeatureSchema schema, std::vector<Case> cases)
    : schema_(std::move(schema)), cases_(std::move(cases)) {
  schema_.validate();
  const std::size_t width = schema_.size();
  std::unordered_set<std::int64_t> ids;
  for (const auto& c : cases_) {
    if (c.id < 0) throw DataError("negative case id");
    if (!ids.insert(c.id).second) {
      throw DataError("duplicate case id " + std::to_string(c.id));
    }
    if (c.values.size() != width) {
      throw DataError("case " + std::to_string(c.id) + " has " +
                      std::to_string(c.values.size()) + " values, expected " +
                      std::to_string(width));
    }
    for (std::size_t i = 0; i < width; ++i) {
      const auto& f = schema_.features[i];
      const double v = c.values[i];
      if (!std::isfinite(v)) {
        throw DataError("case " + std::to_string(c.id) +
                        " has a non-finite value for '" + f.name + "'");
      }
      if (!f.numeric()) {
        const bool ok = v >= 0 && v == std::floor(v) &&
                        v < static_cast<double>(f.categories.size());
        if (!ok) {
          throw DataError("case " + std::to_string(c.id) +
                          " has an unknown category for '" + f.name + "'");
        }
      }
    }
    if (schema_.task == Task::kClassification &&
        (c.label < 0 ||
         static_cast<std::size_t>(c.label) >= schema_.num_classes())) {
      throw DataError("case " + std::to_string(c.id) + " has label index " +
                      std::to_string(c.label) + " outside the class list");
    }
  }
  scaler_ = Scaler::fit(schema_, cases_);
  for (std::size_t i = 0; i < width; ++i) {
    if (const auto& r = scaler_.ranges()[i]) {
      schema_.features[i].min = r->min;
      schema_.features[i].max = r->max;
    }
  }
  id_order_.resize(cases_.size());
  std::iota(id_order_.begin(), id_order_.end(), std::size_t{0});
  std::sort(id_order_.begin(), id_order_.end(),
            [&](std::size_t a, std::size_t b) {
              return cases_[a].id < cases_[b].id;
            });
}

const Case* CaseBase::find(std::int64_t id) const {
  const auto it = std::lower_bound(
      id_order_.begin(), id_order_.end(), id,
      [&](std::size_t pos, std::int64_t key) { return cases_[pos].id < key; });
  if (it == id_order_.end() || cases_[*it].id != id) return nullptr;
  return &cases_[*it];
}

const Case& CaseBase::at_id(std::int64_t id) const {
  const Case* c = find(id);
  if (c == nullptr) throw DataError("no case with id " + std::to_string(id));
  return *c;
}

std::int64_t CaseBase::next_id() const {
  if (id_order_.empty()) return 0;
  return cases_[id_order_.back()].id + 1;
}

std::vector<std::size_t> CaseBase::class_counts() const {
  std::vector<std::size_t> counts(schema_.num_classes(), 0);
  for (const auto& c : cases_) {
    if (schema_.task == Task::kClassification) ++counts[c.label];
  }
  return counts;
}

CaseBase CaseBase::with_cases(std::span<const Case> extra) const {
  std::vector<Case> all = cases_;
  all.insert(all.end(), extra.begin(), extra.end());
  return CaseBase(schema_, std::move(all));
}

CaseBase conform_to(const CaseBase& base, const FeatureSchema& reference) {
  const auto& own = base.schema();
  if (own.size() != reference.size()) {
    throw DataError("data has " + std::to_string(own.size()) +
                    " features, expected " + std::to_string(reference.size()));
  }
  if (own.task != reference.task) throw DataError("task kind differs");
  std::vector<std::vector<int>> category_map(own.size());
  for (std::size_t f = 0; f < own.size(); ++f) {
    const auto& a = own.features[f];
    const auto& b = reference.features[f];
    if (a.name != b.name || a.kind != b.kind) {
      throw DataError("feature " + std::to_string(f) + " is '" + a.name +
                      "' (" + std::string(to_string(a.kind)) + "), expected '" +
                      b.name + "' (" + std::string(to_string(b.kind)) + ")");
    }
    for (const auto& cat : a.categories) {
      const auto idx = b.category_index(cat);
      if (!idx) {
        throw DataError("feature '" + a.name + "' has unknown category '" +
                        cat + "'");
      }
      category_map[f].push_back(*idx);
    }
  }
  std::vector<int> class_map;
  for (const auto& label : own.class_labels) {
    const auto idx = reference.class_index(label);
    if (!idx) throw DataError("unknown class label '" + label + "'");
    class_map.push_back(*idx);
  }
  std::vector<Case> cases = base.cases();
  for (auto& c : cases) {
    for (std::size_t f = 0; f < own.size(); ++f) {
      if (!own.features[f].numeric()) {
        c.values[f] = category_map[f][static_cast<std::size_t>(c.values[f])];
      }
    }
    if (own.task == Task::kClassification) c.label = class_map[c.label];
  }
  FeatureSchema schema = reference;
  schema.label_name = own.label_name;
  return CaseBase(std::move(schema), std::move(cases));
}

bool CaseBase::operator==(const CaseBase& other) const {
  return schema_ == other.schema_ && cases_ == other.cases_ &&
         scaler_ == other.scaler_;
}

double distance(const CaseBase& base, std::span<const double> a,
                std::span<const double> b, std::span<const double> weights) {
  const auto& schema = base.schema();
  if (!weights.empty() && weights.size() != schema.size()) {
    throw DataError("weight vector has " + std::to_string(weights.size()) +
                    " entries, expected " + std::to_string(schema.size()));
  }
  if (a.size() != schema.size() || b.size() != schema.size()) {
    throw DataError("value vector does not match the schema width");
  }
  const auto& scaler = base.scaler();
  double sum = 0.0;
  for (std::size_t i = 0; i < schema.size(); ++i) {
    double d;
    if (schema.features[i].numeric()) {
      d = scaler.normalize(i, a[i]) - scaler.normalize(i, b[i]);
    } else {
      d = a[i] == b[i] ? 0.0 : 1.0;
    }
    const double w = weights.empty() ? 1.0 : weights[i];
    sum += w * d * d;
  }
  return std::sqrt(sum);
}

std::vector<std::size_t> diff_features(const CaseBase& base,
                                       std::span<const double> a,
                                       std::span<const double> b, double tau) {
  const auto& schema = base.schema();
  const auto& scaler = base.scaler();
  std::vector<std::size_t> diff;
  for (std::size_t i = 0; i < schema.size(); ++i) {
    bool differs;
    if (schema.features[i].numeric()) {
      differs =
          std::abs(scaler.normalize(i, a[i]) - scaler.normalize(i, b[i])) > tau;
    } else {
      differs = a[i] != b[i];
    }
    if (differs) diff.push_back(i);
  }
  return diff;
}

// ---------------------------------------------------------------------------

CaseBase parse_tabular_csv(std::string_view text, const CsvOptions& options) {
  const auto lines = split_lines(text);
  if (lines.empty()) throw DataError("missing header row");
  const auto header = split_csv_row(lines.front());

  SchemaHint hint;
  if (options.schema_hint) hint = read_schema_hint(*options.schema_hint);
  const std::string label_name = hint.label.value_or(options.label_name);

  const auto label_it = std::find(header.begin(), header.end(), label_name);
  if (label_it == header.end()) {
    throw DataError("missing label column '" + label_name + "'");
  }
  const std::size_t label_col = label_it - header.begin();

  std::vector<std::vector<std::string>> rows;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    if (trim(lines[r]).empty()) continue;
    auto row = split_csv_row(lines[r]);
    if (row.size() != header.size()) {
      throw DataError("ragged row " + std::to_string(r + 1) + ": " +
                      std::to_string(row.size()) + " fields, expected " +
                      std::to_string(header.size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError("empty dataset");

  for (const auto& [name, kind] : hint.kinds) {
    if (std::find(header.begin(), header.end(), name) == header.end()) {
      throw DataError("schema names feature '" + name +
                      "' which is not a column");
    }
  }

  FeatureSchema schema;
  schema.label_name = label_name;
  schema.task = options.task;
  std::vector<std::size_t> columns;
  for (std::size_t col = 0; col < header.size(); ++col) {
    if (col == label_col) continue;
    Feature f;
    f.name = header[col];
    if (const auto it = hint.kinds.find(f.name); it != hint.kinds.end()) {
      f.kind = it->second;
    } else {
      const bool all_numeric =
          std::all_of(rows.begin(), rows.end(), [&](const auto& row) {
            return parse_real(row[col]).has_value();
          });
      f.kind = all_numeric ? FeatureKind::kNumeric : FeatureKind::kCategorical;
    }
    schema.features.push_back(std::move(f));
    columns.push_back(col);
  }

  std::vector<Case> cases;
  cases.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    Case c;
    c.id = static_cast<std::int64_t>(r);
    c.values.resize(columns.size());
    for (std::size_t i = 0; i < columns.size(); ++i) {
      const auto& raw = rows[r][columns[i]];
      auto& f = schema.features[i];
      if (f.numeric()) {
        const auto v = parse_real(raw);
        if (!v) {
          throw DataError("value '" + raw + "' in column '" + f.name +
                          "' (row " + std::to_string(r + 2) +
                          ") is not numeric");
        }
        c.values[i] = *v;
      } else {
        auto idx = f.category_index(raw);
        if (!idx) {
          f.categories.push_back(raw);
          idx = static_cast<int>(f.categories.size() - 1);
        }
        c.values[i] = *idx;
      }
    }
    const auto& label = rows[r][label_col];
    if (options.task == Task::kRegression) {
      const auto v = parse_real(label);
      if (!v) {
        throw DataError("regression target '" + label + "' (row " +
                        std::to_string(r + 2) + ") is not numeric");
      }
      c.outcome = *v;
    } else {
      auto idx = schema.class_index(label);
      if (!idx) {
        schema.class_labels.push_back(label);
        idx = static_cast<int>(schema.class_labels.size() - 1);
      }
      c.label = *idx;
    }
    cases.push_back(std::move(c));
  }
  return CaseBase(std::move(schema), std::move(cases));
}

CaseBase load_tabular_csv(const std::filesystem::path& path,
                          const CsvOptions& options) {
  return parse_tabular_csv(read_file(path), options);
}

std::string format_tabular_csv(const FeatureSchema& schema,
                               std::span<const Case> cases) {
  std::string out;
  for (const auto& f : schema.features) {
    out += quote_csv(f.name);
    out += ',';
  }
  out += quote_csv(schema.label_name);
  out += '\n';
  for (const auto& c : cases) {
    for (std::size_t i = 0; i < schema.size(); ++i) {
      const auto& f = schema.features[i];
      if (f.numeric()) {
        out += format_number(c.values[i]);
      } else {
        out += quote_csv(f.categories.at(static_cast<std::size_t>(c.values[i])));
      }
      out += ',';
    }
    if (schema.task == Task::kRegression) {
      out += format_number(c.outcome);
    } else {
      out += quote_csv(schema.class_labels.at(c.label));
    }
    out += '\n';
  }
  return out;
}

void write_tabular_csv(const std::filesystem::path& path,
                       const FeatureSchema& schema,
                       std::span<const Case> cases) {
  write_file(path, format_tabular_csv(schema, cases));
}

// ---------------------------------------------------------------------------

const TimeSeriesInstance* TimeSeriesDataset::find(std::int64_t id) const {
  for (const auto& inst : instances) {
    if (inst.id == id) return &inst;
  }
  return nullptr;
}

std::vector<double> TimeSeriesDataset::mean_signal() const {
  std::vector<double> mean(length(), 0.0);
  if (instances.empty()) return mean;
  for (const auto& inst : instances) {
    for (std::size_t t = 0; t < mean.size(); ++t) mean[t] += inst.values[t];
  }
  for (auto& m : mean) m /= static_cast<double>(instances.size());
  return mean;
}

CaseBase TimeSeriesDataset::to_casebase() const {
  FeatureSchema schema;
  schema.label_name = "class";
  schema.class_labels = class_labels;
  for (std::size_t t = 0; t < length(); ++t) {
    schema.features.push_back(Feature{.name = "t" + std::to_string(t)});
  }
  std::vector<Case> cases;
  cases.reserve(instances.size());
  for (const auto& inst : instances) {
    cases.push_back(Case{.id = inst.id, .values = inst.values, .label = inst.label});
  }
  return CaseBase(std::move(schema), std::move(cases));
}

TimeSeriesDataset parse_timeseries_tsv(std::string_view text) {
  TimeSeriesDataset ds;
  std::size_t width = 0;
  for (const auto line : split_lines(text)) {
    if (trim(line).empty()) continue;
    std::vector<std::string_view> cols;
    std::size_t start = 0;
    while (start <= line.size()) {
      auto end = line.find('\t', start);
      if (end == std::string_view::npos) end = line.size();
      cols.push_back(trim(line.substr(start, end - start)));
      start = end + 1;
    }
    const std::size_t row = ds.instances.size() + 1;
    if (cols.size() < 2) {
      throw DataError("row " + std::to_string(row) +
                      " needs a label and at least one value");
    }
    if (width == 0) {
      width = cols.size();
    } else if (cols.size() != width) {
      throw DataError("ragged row " + std::to_string(row) + ": " +
                      std::to_string(cols.size()) + " columns, expected " +
                      std::to_string(width));
    }
    TimeSeriesInstance inst;
    inst.id = static_cast<std::int64_t>(ds.instances.size());
    const std::string label(cols.front());
    auto it = std::find(ds.class_labels.begin(), ds.class_labels.end(), label);
    if (it == ds.class_labels.end()) {
      ds.class_labels.push_back(label);
      it = ds.class_labels.end() - 1;
    }
    inst.label = static_cast<int>(it - ds.class_labels.begin());
    for (std::size_t c = 1; c < cols.size(); ++c) {
      const auto v = parse_real(cols[c]);
      if (!v) {
        throw DataError("non-numeric value '" + std::string(cols[c]) +
                        "' in row " + std::to_string(row));
      }
      inst.values.push_back(*v);
    }
    ds.instances.push_back(std::move(inst));
  }
  if (ds.instances.empty()) throw DataError("empty dataset");
  return ds;
}

TimeSeriesDataset load_timeseries_tsv(const std::filesystem::path& path) {
  return parse_timeseries_tsv(read_file(path));
}

std::string format_timeseries_tsv(const TimeSeriesDataset& dataset) {
  std::string out;
  for (const auto& inst : dataset.instances) {
    out += dataset.class_labels.at(inst.label);
    for (double v : inst.values) {
      out += '\t';
      out += format_number(v);
    }
    out += '\n';
  }
  return out;
}

void write_timeseries_tsv(const std::filesystem::path& path,
                          const TimeSeriesDataset& dataset) {
  write_file(path, format_timeseries_tsv(dataset));
}

// ---------------------------------------------------------------------------

CaseBase synth_blobs(int n_per_class, int dims,
                     const std::vector<std::vector<double>>& class_means,
                     double sigma, std::uint64_t seed, std::int64_t first_id) {
  if (n_per_class <= 0 || dims <= 0 || class_means.empty()) {
    throw DataError("synth_blobs needs positive counts and at least one mean");
  }
  FeatureSchema schema;
  schema.label_name = "label";
  for (int d = 0; d < dims; ++d) {
    schema.features.push_back(Feature{.name = "x" + std::to_string(d)});
  }
  for (std::size_t c = 0; c < class_means.size(); ++c) {
    if (class_means[c].size() != static_cast<std::size_t>(dims)) {
      throw DataError("class mean " + std::to_string(c) + " has wrong width");
    }
    schema.class_labels.push_back(std::to_string(c));
  }
  Rng rng(seed);
  std::vector<Case> cases;
  std::int64_t id = first_id;
  for (std::size_t c = 0; c < class_means.size(); ++c) {
    for (int i = 0; i < n_per_class; ++i) {
      Case cs{.id = id++, .label = static_cast<int>(c)};
      for (int d = 0; d < dims; ++d) {
        cs.values.push_back(rng.normal(class_means[c][d], sigma));
      }
      cases.push_back(std::move(cs));
    }
  }
  return CaseBase(std::move(schema), std::move(cases));
}

CaseBase synth_imbalanced(int majority, int minority, std::uint64_t seed,
                          std::int64_t first_id) {
  if (majority <= 0 || minority <= 0) {
    throw DataError("synth_imbalanced needs positive class counts");
  }
  FeatureSchema schema;
  schema.label_name = "label";
  schema.class_labels = {"normal", "outlier"};
  schema.features = {Feature{.name = "temperature"}, Feature{.name = "rainfall"},
                     Feature{.name = "humidity"}, Feature{.name = "wind"}};
  Rng rng(seed);
  std::vector<Case> cases;
  std::int64_t id = first_id;
  // Regimes differ in temperature and rainfall only.
  auto draw = [&](double mean, double sd, int label) {
    Case c{.id = id++, .label = label};
    c.values = {rng.normal(mean, sd), rng.normal(mean, sd), rng.normal(0.0, 1.0),
                rng.normal(0.0, 1.0)};
    cases.push_back(std::move(c));
  };
  for (int i = 0; i < majority; ++i) draw(0.0, 1.0, 0);
  for (int i = 0; i < minority; ++i) draw(2.2, 0.8, 1);
  return CaseBase(std::move(schema), std::move(cases));
}

TimeSeriesDataset synth_series(int n_per_class, int length, std::uint64_t seed,
                               std::int64_t first_id) {
  if (n_per_class <= 0 || length <= 0) {
    throw DataError("synth_series needs positive counts");
  }
  TimeSeriesDataset ds;
  ds.class_labels = {"0", "1"};
  Rng rng(seed);
  const int width = std::max(2, length / 8);
  std::int64_t id = first_id;
  for (int cls = 0; cls < 2; ++cls) {
    for (int i = 0; i < n_per_class; ++i) {
      TimeSeriesInstance inst{.id = id++, .label = cls};
      inst.values.resize(length);
      for (auto& v : inst.values) v = rng.normal(0.0, 0.3);
      if (cls == 1) {
        const int start = static_cast<int>(
            rng.index(static_cast<std::size_t>(std::max(1, length - width + 1))));
        for (int t = 0; t < width && start + t < length; ++t) {
          const double phase = std::numbers::pi * (t + 0.5) / width;
          inst.values[start + t] += 2.0 * std::sin(phase);
        }
      }
      ds.instances.push_back(std::move(inst));
    }
  }
  return ds;
}

}  // namespace twincbr
