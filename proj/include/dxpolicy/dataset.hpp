/*
 * Copyright 2026 The dxpolicy Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef DXPOLICY_DATASET_HPP
#define DXPOLICY_DATASET_HPP

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "common.hpp"

namespace dxp {

//==============================================================================
// Raw tabular input

struct RawRecord {
  std::vector<std::optional<std::string>> values;  // nullopt = missing
  std::optional<std::string> label;
};

struct RawDataset {
  std::vector<std::string> attributes;
  std::string class_column;
  std::vector<RawRecord> rows;

  bool has_missing(const RawRecord& r) const {
    if (!r.label) return true;
    return std::any_of(r.values.begin(), r.values.end(),
                       [](const auto& v) { return !v.has_value(); });
  }
};

struct CsvSchema {
  std::string class_column;
  std::vector<std::string> missing_tokens{"?", ""};
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

/// Splits one CSV line; handles double-quoted fields with "" escapes.
inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
      was_quoted = true;
    } else if (c == ',') {
      out.push_back(was_quoted ? field : trim(field));
      field.clear();
      was_quoted = false;
    } else {
      field.push_back(c);
    }
  }
  out.push_back(was_quoted ? field : trim(field));
  return out;
}

inline std::optional<double> parse_number(std::string_view s) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc{} || p != end || !std::isfinite(v)) return std::nullopt;
  return v;
}

}  // namespace detail

inline RawDataset parse_csv(std::istream& in, const CsvSchema& schema) {
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  RawDataset raw;
  std::vector<std::string> header;
  std::size_t class_col = 0;
  const std::set<std::string> missing(schema.missing_tokens.begin(),
                                      schema.missing_tokens.end());

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!have_header) {
      if (detail::trim(line).empty()) continue;
      header = detail::split_csv_line(line);
      auto it = std::find(header.begin(), header.end(), schema.class_column);
      if (it == header.end())
        throw ConfigError("class column '" + schema.class_column +
                          "' not found in header");
      class_col = static_cast<std::size_t>(it - header.begin());
      std::set<std::string> seen;
      for (std::size_t i = 0; i < header.size(); ++i) {
        if (!seen.insert(header[i]).second)
          throw ParseError("duplicate column name '" + header[i] + "'");
        if (i != class_col) raw.attributes.push_back(header[i]);
      }
      raw.class_column = schema.class_column;
      have_header = true;
      continue;
    }
    if (detail::trim(line).empty()) continue;
    auto fields = detail::split_csv_line(line);
    if (fields.size() != header.size())
      throw ParseError("line " + std::to_string(line_no) + ": expected " +
                       std::to_string(header.size()) + " fields, got " +
                       std::to_string(fields.size()));
    RawRecord rec;
    rec.values.reserve(header.size() - 1);
    for (std::size_t i = 0; i < fields.size(); ++i) {
      std::optional<std::string> v;
      if (!missing.count(fields[i])) v = fields[i];
      if (i == class_col)
        rec.label = std::move(v);
      else
        rec.values.push_back(std::move(v));
    }
    raw.rows.push_back(std::move(rec));
  }
  if (!have_header) throw ParseError("empty CSV input");
  return raw;
}

inline RawDataset load_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  return parse_csv(in, schema);
}

/// Drops records with any missing cell, then relabels classes through
/// `class_merge` (labels absent from the map are kept as-is).
inline RawDataset preprocess(const RawDataset& raw,
                             const std::map<std::string, std::string>& class_merge) {
  RawDataset out;
  out.attributes = raw.attributes;
  out.class_column = raw.class_column;
  std::set<std::string> labels;
  for (const auto& r : raw.rows) {
    if (raw.has_missing(r)) continue;
    RawRecord rec = r;
    if (auto it = class_merge.find(*rec.label); it != class_merge.end())
      rec.label = it->second;
    labels.insert(*rec.label);
    out.rows.push_back(std::move(rec));
  }
  if (out.rows.empty())
    throw EmptyDatasetError("no records left after removing missing values");
  if (labels.size() < 2)
    throw ConfigError("class merge leaves fewer than two classes");
  return out;
}

//==============================================================================
// Discrete dataset

enum class AttributeKind { discrete, continuous };

struct AttributeMeta {
  std::string name;
  std::vector<std::string> values;
  AttributeKind original_kind = AttributeKind::discrete;
  std::vector<double> thresholds;  // present iff discretized

  std::size_t arity() const { return values.size(); }

  /// Bin of a real value: number of thresholds strictly below it.
  ValueIndex bin(double x) const {
    return static_cast<ValueIndex>(
        std::lower_bound(thresholds.begin(), thresholds.end(), x) -
        thresholds.begin());
  }

  friend bool operator==(const AttributeMeta&, const AttributeMeta&) = default;
};

struct Example {
  std::vector<ValueIndex> values;
  ClassIndex label = 0;

  friend bool operator==(const Example&, const Example&) = default;
};

struct Dataset {
  std::vector<AttributeMeta> attributes;
  std::vector<std::string> classes;
  std::vector<Example> examples;

  std::size_t num_attributes() const { return attributes.size(); }
  std::size_t num_classes() const { return classes.size(); }
  std::size_t size() const { return examples.size(); }

  std::optional<AttrIndex> attribute_index(std::string_view name) const {
    for (std::size_t i = 0; i < attributes.size(); ++i)
      if (attributes[i].name == name) return static_cast<AttrIndex>(i);
    return std::nullopt;
  }

  std::optional<ClassIndex> class_index(std::string_view name) const {
    for (std::size_t i = 0; i < classes.size(); ++i)
      if (classes[i] == name) return static_cast<ClassIndex>(i);
    return std::nullopt;
  }

  /// Same metadata, examples restricted to `idx` (in that order).
  Dataset subset(const std::vector<ExampleIndex>& idx) const {
    Dataset d;
    d.attributes = attributes;
    d.classes = classes;
    d.examples.reserve(idx.size());
    for (auto i : idx) d.examples.push_back(examples.at(i));
    return d;
  }

  std::vector<std::size_t> class_counts() const {
    std::vector<std::size_t> c(classes.size(), 0);
    for (const auto& e : examples) ++c[e.label];
    return c;
  }

  void validate() const {
    if (classes.size() < 2) throw ConfigError("dataset needs at least two classes");
    for (const auto& a : attributes)
      if (a.values.empty())
        throw ConfigError("attribute '" + a.name + "' has no values");
    for (const auto& e : examples) {
      if (e.values.size() != attributes.size())
        throw ConfigError("example arity does not match attribute count");
      for (std::size_t i = 0; i < e.values.size(); ++i)
        if (e.values[i] >= attributes[i].arity())
          throw ConfigError("value index out of range for '" +
                            attributes[i].name + "'");
      if (e.label >= classes.size()) throw ConfigError("class index out of range");
    }
  }

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

namespace detail {

inline double entropy_of_counts(const std::vector<std::size_t>& counts,
                                std::size_t total) {
  if (total == 0) return 0.0;
  double h = 0.0;
  for (auto c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / static_cast<double>(total);
    h -= p * std::log2(p);
  }
  return h;
}

}  // namespace detail

/// Cut points for one real-valued column that maximise information gain with
/// the class when the column is split into `levels` bins.
///
/// Candidates are midpoints between consecutive distinct values; every
/// combination of `levels - 1` candidates is scored and the first maximiser in
/// lexicographic order wins. With fewer distinct values than `levels`, every
/// midpoint is used.
inline std::vector<double> best_thresholds(const std::vector<double>& values,
                                           const std::vector<ClassIndex>& labels,
                                           std::size_t num_classes,
                                           std::size_t levels) {
  std::map<double, std::vector<std::size_t>> by_value;
  for (std::size_t i = 0; i < values.size(); ++i) {
    auto& c = by_value[values[i]];
    if (c.empty()) c.assign(num_classes, 0);
    ++c[labels[i]];
  }
  std::vector<double> distinct;
  std::vector<std::vector<std::size_t>> prefix{std::vector<std::size_t>(num_classes, 0)};
  for (const auto& [v, c] : by_value) {
    distinct.push_back(v);
    auto next = prefix.back();
    for (std::size_t k = 0; k < num_classes; ++k) next[k] += c[k];
    prefix.push_back(std::move(next));
  }
  const std::size_t d = distinct.size();
  if (d <= 1) return {};
  std::vector<double> candidates;
  for (std::size_t i = 0; i + 1 < d; ++i)
    candidates.push_back(distinct[i] + (distinct[i + 1] - distinct[i]) / 2.0);
  const std::size_t cuts = levels - 1;
  if (candidates.size() <= cuts) return candidates;

  // Bin b spans distinct values [lo, hi); cut at candidate i sits after
  // distinct value i.
  const std::size_t n = values.size();
  auto bin_cost = [&](std::size_t lo, std::size_t hi) {
    std::vector<std::size_t> c(num_classes);
    std::size_t tot = 0;
    for (std::size_t k = 0; k < num_classes; ++k) {
      c[k] = prefix[hi][k] - prefix[lo][k];
      tot += c[k];
    }
    return static_cast<double>(tot) / static_cast<double>(n) *
           detail::entropy_of_counts(c, tot);
  };

  std::vector<std::size_t> chosen(cuts), best;
  double best_cost = std::numeric_limits<double>::infinity();
  // Recursive lexicographic enumeration of increasing index tuples.
  auto recurse = [&](auto&& self, std::size_t depth, std::size_t start,
                     double acc) -> void {
    if (depth == cuts) {
      const std::size_t lo = depth == 0 ? 0 : chosen[depth - 1] + 1;
      const double total = acc + bin_cost(lo, d);
      if (total < best_cost - 1e-12) {
        best_cost = total;
        best = chosen;
      }
      return;
    }
    const std::size_t lo = depth == 0 ? 0 : chosen[depth - 1] + 1;
    for (std::size_t i = start; i + (cuts - depth) <= candidates.size(); ++i) {
      chosen[depth] = i;
      self(self, depth + 1, i + 1, acc + bin_cost(lo, i + 1));
    }
  };
  recurse(recurse, 0, 0, 0.0);

  std::vector<double> out;
  for (auto i : best) out.push_back(candidates[i]);
  return out;
}

namespace detail {

inline std::string format_bound(double x) {
  std::ostringstream os;
  os.precision(10);
  os << x;
  return os.str();
}

inline std::vector<std::string> interval_labels(const std::vector<double>& t) {
  std::vector<std::string> out;
  if (t.empty()) return {"all"};
  out.push_back("(-inf," + format_bound(t.front()) + "]");
  for (std::size_t i = 0; i + 1 < t.size(); ++i)
    out.push_back("(" + format_bound(t[i]) + "," + format_bound(t[i + 1]) + "]");
  out.push_back("(" + format_bound(t.back()) + ",inf)");
  return out;
}

}  // namespace detail

/// Converts a preprocessed raw dataset into discrete form. Columns whose every
/// value parses as a real number are discretized into `levels` bins unless
/// listed in `force_discrete`; other columns enumerate their values in
/// first-occurrence order. Classes are likewise ordered by first occurrence.
inline Dataset discretize(const RawDataset& raw, std::size_t levels = 3,
                          const std::set<std::string>& force_discrete = {}) {
  if (levels < 2) throw ConfigError("discretization needs at least 2 levels");
  for (const auto& r : raw.rows)
    if (raw.has_missing(r))
      throw ConfigError("discretize requires a dataset without missing values");
  if (raw.rows.empty()) throw EmptyDatasetError("dataset has no records");

  Dataset out;
  std::vector<ClassIndex> labels;
  labels.reserve(raw.rows.size());
  for (const auto& r : raw.rows) {
    auto it = std::find(out.classes.begin(), out.classes.end(), *r.label);
    if (it == out.classes.end()) {
      out.classes.push_back(*r.label);
      labels.push_back(static_cast<ClassIndex>(out.classes.size() - 1));
    } else {
      labels.push_back(static_cast<ClassIndex>(it - out.classes.begin()));
    }
  }
  if (out.classes.size() < 2) throw ConfigError("dataset needs at least two classes");

  out.examples.resize(raw.rows.size());
  for (std::size_t i = 0; i < raw.rows.size(); ++i) {
    out.examples[i].label = labels[i];
    out.examples[i].values.resize(raw.attributes.size());
  }

  for (std::size_t a = 0; a < raw.attributes.size(); ++a) {
    AttributeMeta meta;
    meta.name = raw.attributes[a];
    std::vector<double> numeric;
    bool is_numeric = !force_discrete.count(meta.name);
    if (is_numeric) {
      numeric.reserve(raw.rows.size());
      for (const auto& r : raw.rows) {
        auto v = detail::parse_number(*r.values[a]);
        if (!v) {
          is_numeric = false;
          break;
        }
        numeric.push_back(*v);
      }
    }
    if (is_numeric) {
      meta.original_kind = AttributeKind::continuous;
      meta.thresholds = best_thresholds(numeric, labels, out.classes.size(), levels);
      meta.values = detail::interval_labels(meta.thresholds);
      for (std::size_t i = 0; i < raw.rows.size(); ++i)
        out.examples[i].values[a] = meta.bin(numeric[i]);
    } else {
      for (std::size_t i = 0; i < raw.rows.size(); ++i) {
        const auto& s = *raw.rows[i].values[a];
        auto it = std::find(meta.values.begin(), meta.values.end(), s);
        if (it == meta.values.end()) {
          meta.values.push_back(s);
          out.examples[i].values[a] = static_cast<ValueIndex>(meta.values.size() - 1);
        } else {
          out.examples[i].values[a] = static_cast<ValueIndex>(it - meta.values.begin());
        }
      }
    }
    out.attributes.push_back(std::move(meta));
  }
  return out;
}

//==============================================================================
// Costs

/// Test costs per attribute and misdiagnosis costs mc[predicted][true].
struct CostModel {
  std::string name;
  std::vector<double> test_cost;
  std::vector<std::vector<double>> mc;

  CostModel() = default;
  CostModel(std::string n, std::vector<double> tests,
            std::vector<std::vector<double>> matrix)
      : name(std::move(n)), test_cost(std::move(tests)), mc(std::move(matrix)) {
    for (double c : test_cost)
      if (!(c > 0.0) || !std::isfinite(c))
        throw ConfigError("test costs must be positive");
    for (const auto& row : mc) {
      if (row.size() != mc.size()) throw ConfigError("misdiagnosis matrix must be square");
      for (double c : row)
        if (!(c >= 0.0) || !std::isfinite(c))
          throw ConfigError("misdiagnosis costs must be nonnegative");
    }
  }

  std::size_t num_classes() const { return mc.size(); }

  double max_mc() const {
    double m = 0.0;
    for (const auto& row : mc)
      for (double c : row) m = std::max(m, c);
    return m;
  }

  CostModel with_scaled_tests(double factor) const {
    CostModel c = *this;
    for (auto& t : c.test_cost) t *= factor;
    return c;
  }
};

/// Parsed cost configuration: test costs by attribute name plus named
/// misdiagnosis matrices, one per cost level.
struct CostConfig {
  std::map<std::string, double> test_costs;
  std::optional<std::vector<std::string>> classes;  // matrix row/col order
  std::vector<std::pair<std::string, std::vector<std::vector<double>>>> levels;

  std::vector<std::string> level_names() const {
    std::vector<std::string> n;
    for (const auto& l : levels) n.push_back(l.first);
    return n;
  }

  /// Binds one level to a dataset: resolves attribute names and reorders the
  /// matrix into the dataset's class order.
  CostModel model(const Dataset& data, const std::string& level) const {
    auto it = std::find_if(levels.begin(), levels.end(),
                           [&](const auto& l) { return l.first == level; });
    if (it == levels.end()) throw ConfigError("unknown cost level '" + level + "'");
    std::vector<double> tests;
    for (const auto& a : data.attributes) {
      auto t = test_costs.find(a.name);
      if (t == test_costs.end())
        throw ConfigError("no test cost for attribute '" + a.name + "'");
      tests.push_back(t->second);
    }
    const std::size_t k = data.num_classes();
    const auto& m = it->second;
    if (m.size() != k) throw ConfigError("cost level '" + level + "' is not KxK");
    std::vector<std::size_t> order(k);
    for (std::size_t i = 0; i < k; ++i) order[i] = i;
    if (classes) {
      if (classes->size() != k) throw ConfigError("cost config class list size mismatch");
      for (std::size_t i = 0; i < k; ++i) {
        auto pos = std::find(classes->begin(), classes->end(), data.classes[i]);
        if (pos == classes->end())
          throw ConfigError("class '" + data.classes[i] + "' missing from cost config");
        order[i] = static_cast<std::size_t>(pos - classes->begin());
      }
    }
    std::vector<std::vector<double>> mc(k, std::vector<double>(k));
    for (std::size_t p = 0; p < k; ++p) {
      if (m[order[p]].size() != k) throw ConfigError("cost level '" + level + "' is not KxK");
      for (std::size_t y = 0; y < k; ++y) mc[p][y] = m[order[p]][order[y]];
    }
    bool off_diag = false;
    for (std::size_t p = 0; p < k; ++p)
      for (std::size_t y = 0; y < k; ++y)
        if (p != y && mc[p][y] > 0.0) off_diag = true;
    if (!off_diag)
      throw ConfigError("cost level '" + level + "' has no positive off-diagonal entry");
    return CostModel(level, std::move(tests), std::move(mc));
  }
};

inline CostConfig parse_cost_config(const nlohmann::json& j) {
  CostConfig cfg;
  try {
    for (const auto& [name, cost] : j.at("test_costs").items())
      cfg.test_costs[name] = cost.get<double>();
    if (j.contains("classes")) cfg.classes = j.at("classes").get<std::vector<std::string>>();
    for (const auto& l : j.at("levels"))
      cfg.levels.emplace_back(l.at("name").get<std::string>(),
                              l.at("mc").get<std::vector<std::vector<double>>>());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid cost config: ") + e.what());
  }
  for (const auto& [name, cost] : cfg.test_costs)
    if (!(cost > 0.0)) throw ConfigError("test cost for '" + name + "' must be positive");
  if (cfg.levels.empty()) throw ConfigError("cost config lists no levels");
  return cfg;
}

inline CostConfig load_cost_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("cannot parse '" + path + "': " + e.what());
  }
  return parse_cost_config(j);
}

//==============================================================================
// Replicas

struct Replica {
  std::size_t id = 0;
  std::uint64_t seed = 0;
  std::vector<ExampleIndex> train;
  std::vector<ExampleIndex> test;

  friend bool operator==(const Replica&, const Replica&) = default;
};

/// Splits `labels` stratified by class: per class, shuffle, take
/// floor(frac * count), then hand the remaining quota of round(frac * total)
/// to the classes with the largest fractional parts (lower class first on
/// ties). Returns sorted (train, test).
inline std::pair<std::vector<ExampleIndex>, std::vector<ExampleIndex>>
stratified_split(const std::vector<ClassIndex>& labels, std::size_t num_classes,
                 double train_frac, Rng& rng) {
  std::vector<std::vector<ExampleIndex>> by_class(num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i)
    by_class[labels[i]].push_back(static_cast<ExampleIndex>(i));

  std::vector<std::size_t> take(num_classes);
  std::vector<std::pair<double, std::size_t>> frac;
  std::size_t taken = 0;
  for (std::size_t k = 0; k < num_classes; ++k) {
    const double want = train_frac * static_cast<double>(by_class[k].size());
    take[k] = static_cast<std::size_t>(std::floor(want + 1e-9));
    taken += take[k];
    frac.emplace_back(want - static_cast<double>(take[k]), k);
  }
  const auto target = static_cast<std::size_t>(
      std::llround(train_frac * static_cast<double>(labels.size())));
  std::stable_sort(frac.begin(), frac.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; taken < target && i < frac.size(); ++i) {
    const auto k = frac[i].second;
    if (take[k] < by_class[k].size()) {
      ++take[k];
      ++taken;
    }
  }

  std::vector<ExampleIndex> train, test;
  for (std::size_t k = 0; k < num_classes; ++k) {
    auto idx = by_class[k];
    shuffle(idx, rng);
    train.insert(train.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(take[k]));
    test.insert(test.end(), idx.begin() + static_cast<std::ptrdiff_t>(take[k]), idx.end());
  }
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {std::move(train), std::move(test)};
}

inline std::vector<Replica> make_replicas(const Dataset& data, std::size_t n = 20,
                                          double train_frac = 2.0 / 3.0,
                                          std::uint64_t seed = 0) {
  if (!(train_frac > 0.0 && train_frac < 1.0))
    throw ConfigError("train fraction must lie in (0, 1)");
  for (auto c : data.class_counts())
    if (c < 2) throw ConfigError("every class needs at least two examples");
  std::vector<ClassIndex> labels;
  for (const auto& e : data.examples) labels.push_back(e.label);

  std::vector<Replica> out;
  for (std::size_t r = 0; r < n; ++r) {
    Replica rep;
    rep.id = r;
    rep.seed = derive_seed(seed, {r});
    Rng rng(rep.seed);
    std::tie(rep.train, rep.test) =
        stratified_split(labels, data.num_classes(), train_frac, rng);
    out.push_back(std::move(rep));
  }
  return out;
}

//==============================================================================
// Serialization. Both files are JSON objects tagged with a format name and an
// integer version.

inline constexpr int kDatasetFormatVersion = 1;
inline constexpr int kReplicaFormatVersion = 1;

inline nlohmann::json dataset_to_json(const Dataset& d) {
  nlohmann::json j;
  j["format"] = "dxpolicy-dataset";
  j["version"] = kDatasetFormatVersion;
  j["classes"] = d.classes;
  auto& attrs = j["attributes"] = nlohmann::json::array();
  for (const auto& a : d.attributes) {
    nlohmann::json ja{{"name", a.name}, {"values", a.values}};
    ja["kind"] = a.original_kind == AttributeKind::continuous ? "continuous" : "discrete";
    if (a.original_kind == AttributeKind::continuous) ja["thresholds"] = a.thresholds;
    attrs.push_back(std::move(ja));
  }
  auto& ex = j["examples"] = nlohmann::json::array();
  for (const auto& e : d.examples) {
    auto row = nlohmann::json(e.values);
    row.push_back(e.label);
    ex.push_back(std::move(row));
  }
  return j;
}

inline Dataset dataset_from_json(const nlohmann::json& j) {
  Dataset d;
  try {
    if (j.at("format") != "dxpolicy-dataset") throw DecodeError("not a dataset file");
    const int v = j.at("version").get<int>();
    if (v != kDatasetFormatVersion)
      throw DecodeError("unsupported dataset format version " + std::to_string(v));
    d.classes = j.at("classes").get<std::vector<std::string>>();
    for (const auto& ja : j.at("attributes")) {
      AttributeMeta a;
      a.name = ja.at("name").get<std::string>();
      a.values = ja.at("values").get<std::vector<std::string>>();
      a.original_kind = ja.at("kind") == "continuous" ? AttributeKind::continuous
                                                      : AttributeKind::discrete;
      if (ja.contains("thresholds")) a.thresholds = ja.at("thresholds").get<std::vector<double>>();
      d.attributes.push_back(std::move(a));
    }
    for (const auto& row : j.at("examples")) {
      auto vals = row.get<std::vector<ValueIndex>>();
      if (vals.empty()) throw DecodeError("empty example row");
      Example e;
      e.label = vals.back();
      vals.pop_back();
      e.values = std::move(vals);
      d.examples.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DecodeError(std::string("malformed dataset file: ") + e.what());
  }
  try {
    d.validate();
  } catch (const ConfigError& e) {
    throw DecodeError(e.what());
  }
  return d;
}

inline nlohmann::json replicas_to_json(const std::vector<Replica>& reps,
                                       std::uint64_t seed, double train_frac) {
  nlohmann::json j;
  j["format"] = "dxpolicy-replicas";
  j["version"] = kReplicaFormatVersion;
  j["seed"] = seed;
  j["train_frac"] = train_frac;
  auto& arr = j["replicas"] = nlohmann::json::array();
  for (const auto& r : reps)
    arr.push_back({{"id", r.id}, {"seed", r.seed}, {"train", r.train}, {"test", r.test}});
  return j;
}

inline std::vector<Replica> replicas_from_json(const nlohmann::json& j) {
  std::vector<Replica> out;
  try {
    if (j.at("format") != "dxpolicy-replicas") throw DecodeError("not a replica manifest");
    const int v = j.at("version").get<int>();
    if (v != kReplicaFormatVersion)
      throw DecodeError("unsupported replica manifest version " + std::to_string(v));
    for (const auto& jr : j.at("replicas")) {
      Replica r;
      r.id = jr.at("id").get<std::size_t>();
      r.seed = jr.at("seed").get<std::uint64_t>();
      r.train = jr.at("train").get<std::vector<ExampleIndex>>();
      r.test = jr.at("test").get<std::vector<ExampleIndex>>();
      out.push_back(std::move(r));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DecodeError(std::string("malformed replica manifest: ") + e.what());
  }
  return out;
}

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  try {
    nlohmann::json j;
    in >> j;
    return j;
  } catch (const nlohmann::json::exception& e) {
    throw DecodeError("cannot parse '" + path + "': " + e.what());
  }
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << text;
}

}  // namespace dxp

#endif  // DXPOLICY_DATASET_HPP
