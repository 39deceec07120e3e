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

#ifndef DXPOLICY_POLICY_HPP
#define DXPOLICY_POLICY_HPP

#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "common.hpp"
#include "dataset.hpp"
#include "mdp.hpp"

namespace dxp {

/// One node of a diagnostic decision tree. Internal nodes name the attribute
/// to test and hold one child per attribute value; leaves name a class.
/// Attribute, value and class names (not indices) are stored so that a policy
/// file stays valid across reloads of the same dataset.
///
/// `prob`, `value` and `test_cost` are learning-time annotations only:
/// execution never reads them.
struct PolicyNode {
  std::string test;                   // empty for leaves
  std::vector<std::string> branches;  // value label of each child
  std::vector<PolicyNode> children;
  std::string diagnosis;              // leaves only

  std::optional<double> test_cost;
  std::optional<double> prob;   // probability of the branch into this node
  std::optional<double> value;  // V^pi here; expected misdiagnosis cost at leaves

  bool is_leaf() const { return test.empty(); }

  static PolicyNode leaf(std::string label, std::optional<double> cost = std::nullopt) {
    PolicyNode n;
    n.diagnosis = std::move(label);
    n.value = cost;
    return n;
  }

  friend bool operator==(const PolicyNode&, const PolicyNode&) = default;
};

struct Policy {
  PolicyNode root;

  std::size_t num_internal() const { return count(root, true); }
  std::size_t num_leaves() const { return count(root, false); }
  std::size_t depth() const { return depth_of(root); }

  friend bool operator==(const Policy&, const Policy&) = default;

 private:
  static std::size_t count(const PolicyNode& n, bool internal) {
    if (n.is_leaf()) return internal ? 0 : 1;
    std::size_t c = internal ? 1 : 0;
    for (const auto& ch : n.children) c += count(ch, internal);
    return c;
  }
  static std::size_t depth_of(const PolicyNode& n) {
    std::size_t d = 0;
    for (const auto& ch : n.children) d = std::max(d, 1 + depth_of(ch));
    return d;
  }
};

//==============================================================================
/// A policy resolved against one dataset's metadata for fast execution.
class BoundPolicy {
 public:
  BoundPolicy(const Policy& p, const Dataset& meta) : meta_(&meta) { compile(p.root, {}); }

  struct Result {
    ClassIndex label;
    double cost;
  };

  /// Follows the example's values down the tree. Cost is the sum of test costs
  /// on the path plus MC(leaf class, true class).
  Result execute(const Example& e, const CostModel& cm) const {
    std::size_t at = 0;
    double cost = 0.0;
    while (nodes_[at].attr) {
      const AttrIndex a = *nodes_[at].attr;
      if (a >= e.values.size())
        throw ExecutionError("example has no value for attribute '" +
                             meta_->attributes[a].name + "'");
      const ValueIndex v = e.values[a];
      if (v >= nodes_[at].child.size())
        throw ExecutionError("value out of range for attribute '" +
                             meta_->attributes[a].name + "'");
      cost += cm.test_cost[a];
      at = nodes_[at].child[v];
    }
    return {nodes_[at].label, cost + cm.mc[nodes_[at].label][e.label]};
  }

  /// Attributes tested on the path of `e`, in order.
  std::vector<AttrIndex> path(const Example& e) const {
    std::vector<AttrIndex> out;
    std::size_t at = 0;
    while (nodes_[at].attr) {
      out.push_back(*nodes_[at].attr);
      at = nodes_[at].child[e.values[*nodes_[at].attr]];
    }
    return out;
  }

 private:
  struct Node {
    std::optional<AttrIndex> attr;
    std::vector<std::size_t> child;  // by dataset value index
    ClassIndex label = 0;
  };

  std::size_t compile(const PolicyNode& n, std::vector<AttrIndex> on_path) {
    const std::size_t id = nodes_.size();
    nodes_.emplace_back();
    if (n.is_leaf()) {
      auto k = meta_->class_index(n.diagnosis);
      if (!k) throw ExecutionError("unknown class '" + n.diagnosis + "' in policy");
      nodes_[id].label = *k;
      return id;
    }
    auto a = meta_->attribute_index(n.test);
    if (!a) throw ExecutionError("unknown attribute '" + n.test + "' in policy");
    if (std::find(on_path.begin(), on_path.end(), *a) != on_path.end())
      throw ExecutionError("attribute '" + n.test + "' repeats on a policy path");
    const auto& meta = meta_->attributes[*a];
    if (n.children.size() != meta.arity() || n.branches.size() != meta.arity())
      throw ExecutionError("node for '" + n.test + "' needs one child per value");
    nodes_[id].attr = *a;
    on_path.push_back(*a);
    std::vector<std::size_t> child(meta.arity());
    for (std::size_t b = 0; b < n.children.size(); ++b) {
      auto it = std::find(meta.values.begin(), meta.values.end(), n.branches[b]);
      if (it == meta.values.end())
        throw ExecutionError("unknown value '" + n.branches[b] + "' for '" + n.test + "'");
      child[static_cast<std::size_t>(it - meta.values.begin())] = compile(n.children[b], on_path);
    }
    nodes_[id].child = std::move(child);
    return id;
  }

  const Dataset* meta_;
  std::vector<Node> nodes_;
};

inline BoundPolicy::Result execute(const Policy& p, const Dataset& meta, const Example& e,
                                   const CostModel& cm) {
  return BoundPolicy(p, meta).execute(e, cm);
}

/// Per-example total costs of processing `data` with `p`.
inline std::vector<double> example_costs(const Policy& p, const Dataset& data,
                                         const CostModel& cm) {
  BoundPolicy bp(p, data);
  std::vector<double> out;
  out.reserve(data.size());
  for (const auto& e : data.examples) out.push_back(bp.execute(e, cm).cost);
  return out;
}

/// Mean total cost per test example.
inline double v_test(const Policy& p, const Dataset& test, const CostModel& cm) {
  if (test.examples.empty()) throw EmptyDatasetError("v_test on an empty test set");
  double sum = 0.0;
  for (double c : example_costs(p, test, cm)) sum += c;
  return sum / static_cast<double>(test.size());
}

/// Expected total cost of the policy under the estimator's probabilities:
/// C(s, f_k) at leaves, C(x_n) + sum_v P(x_n = v | s) V(child) inside.
/// Branches with zero estimated probability are not visited.
inline double expected_value(const Policy& p, const Estimator& est, const CostModel& cm) {
  const Dataset& d = est.data();
  std::function<double(const PolicyNode&, const std::vector<ExampleIndex>&)> rec =
      [&](const PolicyNode& n, const std::vector<ExampleIndex>& match) -> double {
    if (n.is_leaf()) {
      auto k = d.class_index(n.diagnosis);
      if (!k) throw ExecutionError("unknown class '" + n.diagnosis + "' in policy");
      return diagnosis_cost(est.class_distribution(match), cm, *k);
    }
    auto a = d.attribute_index(n.test);
    if (!a) throw ExecutionError("unknown attribute '" + n.test + "' in policy");
    const auto& meta = d.attributes[*a];
    auto probs = est.outcome_distribution(match, *a);
    double v = cm.test_cost[*a];
    for (std::size_t b = 0; b < n.children.size(); ++b) {
      auto it = std::find(meta.values.begin(), meta.values.end(), n.branches[b]);
      if (it == meta.values.end())
        throw ExecutionError("unknown value '" + n.branches[b] + "' for '" + n.test + "'");
      const auto val = static_cast<ValueIndex>(it - meta.values.begin());
      if (probs[val] == 0.0) continue;
      v += probs[val] * rec(n.children[b], est.filter(match, *a, val));
    }
    return v;
  };
  return rec(p.root, est.all());
}

/// Refreshes the learning-time annotations (branch probabilities, test costs,
/// node values) from the estimator. Nodes on zero-probability branches keep
/// prob = 0 and lose their value.
inline void annotate(Policy& p, const Estimator& est, const CostModel& cm) {
  const Dataset& d = est.data();
  std::function<std::optional<double>(PolicyNode&, const std::vector<ExampleIndex>&)> rec =
      [&](PolicyNode& n, const std::vector<ExampleIndex>& match) -> std::optional<double> {
    const bool reachable = est.laplace() || !match.empty();
    if (n.is_leaf()) {
      n.value.reset();
      if (reachable)
        n.value = diagnosis_cost(est.class_distribution(match), cm, *d.class_index(n.diagnosis));
      return n.value;
    }
    const AttrIndex a = *d.attribute_index(n.test);
    const auto& meta = d.attributes[a];
    n.test_cost = cm.test_cost[a];
    std::vector<double> probs(meta.arity(), 0.0);
    if (reachable) probs = est.outcome_distribution(match, a);
    double v = cm.test_cost[a];
    for (std::size_t b = 0; b < n.children.size(); ++b) {
      const auto val = static_cast<ValueIndex>(
          std::find(meta.values.begin(), meta.values.end(), n.branches[b]) - meta.values.begin());
      n.children[b].prob = probs[val];
      auto cv = rec(n.children[b], est.filter(match, a, val));
      if (probs[val] > 0.0) v += probs[val] * cv.value_or(0.0);
    }
    n.value.reset();
    if (reachable) n.value = v;
    return n.value;
  };
  p.root.prob = 1.0;
  rec(p.root, est.all());
}

//==============================================================================
// Policy file format: JSON, {"format": "dxpolicy-policy", "version": 1,
// "root": node}. A node is either {"diagnosis": label} or
// {"test": name, "branches": [{"value": label, "node": node}, ...]}, plus the
// optional annotations "cost", "prob" and "value".

inline constexpr int kPolicyFormatVersion = 1;

namespace detail {

inline nlohmann::json node_to_json(const PolicyNode& n) {
  nlohmann::json j;
  if (n.is_leaf()) {
    j["diagnosis"] = n.diagnosis;
  } else {
    j["test"] = n.test;
    if (n.test_cost) j["cost"] = *n.test_cost;
    auto& br = j["branches"] = nlohmann::json::array();
    for (std::size_t i = 0; i < n.children.size(); ++i)
      br.push_back({{"value", n.branches[i]}, {"node", node_to_json(n.children[i])}});
  }
  if (n.prob) j["prob"] = *n.prob;
  if (n.value) j["value"] = *n.value;
  return j;
}

inline PolicyNode node_from_json(const nlohmann::json& j) {
  PolicyNode n;
  if (!j.is_object()) throw DecodeError("policy node is not an object");
  if (j.contains("test")) {
    n.test = j.at("test").get<std::string>();
    if (n.test.empty()) throw DecodeError("policy test name is empty");
    if (j.contains("cost")) n.test_cost = j.at("cost").get<double>();
    for (const auto& b : j.at("branches")) {
      n.branches.push_back(b.at("value").get<std::string>());
      n.children.push_back(node_from_json(b.at("node")));
    }
    if (n.children.empty()) throw DecodeError("policy test node has no branches");
  } else {
    n.diagnosis = j.at("diagnosis").get<std::string>();
  }
  if (j.contains("prob")) n.prob = j.at("prob").get<double>();
  if (j.contains("value")) n.value = j.at("value").get<double>();
  return n;
}

}  // namespace detail

inline std::string serialize(const Policy& p) {
  nlohmann::json j;
  j["format"] = "dxpolicy-policy";
  j["version"] = kPolicyFormatVersion;
  j["root"] = detail::node_to_json(p.root);
  return j.dump(1) + "\n";
}

inline Policy deserialize(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DecodeError(std::string("malformed policy: ") + e.what());
  }
  try {
    if (!j.is_object() || j.value("format", "") != "dxpolicy-policy")
      throw DecodeError("not a policy file");
    const int v = j.at("version").get<int>();
    if (v != kPolicyFormatVersion)
      throw DecodeError("unsupported policy format version " + std::to_string(v));
    return Policy{detail::node_from_json(j.at("root"))};
  } catch (const nlohmann::json::exception& e) {
    throw DecodeError(std::string("malformed policy: ") + e.what());
  }
}

//==============================================================================

namespace detail {

inline std::string dot_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  return out;
}

inline std::string short_number(double x) {
  std::ostringstream os;
  os.precision(4);
  os << x;
  return os.str();
}

}  // namespace detail

/// Graphviz rendering: tests as boxes labelled "name (cost)", leaves as
/// ellipses labelled with the class and expected misdiagnosis cost, edges
/// labelled "value (prob)".
inline std::string to_dot(const Policy& p) {
  std::ostringstream os;
  os << "digraph policy {\n";
  std::size_t next = 0;
  std::function<std::size_t(const PolicyNode&)> emit = [&](const PolicyNode& n) {
    const std::size_t id = next++;
    os << "  n" << id << " [";
    if (n.is_leaf()) {
      os << "shape=ellipse, label=\"" << detail::dot_escape(n.diagnosis);
      if (n.value) os << "\\n" << detail::short_number(*n.value);
      os << "\"];\n";
      return id;
    }
    os << "shape=box, label=\"" << detail::dot_escape(n.test);
    if (n.test_cost) os << " (" << detail::short_number(*n.test_cost) << ")";
    os << "\"];\n";
    for (std::size_t i = 0; i < n.children.size(); ++i) {
      const std::size_t c = emit(n.children[i]);
      os << "  n" << id << " -> n" << c << " [label=\"" << detail::dot_escape(n.branches[i]);
      if (n.children[i].prob) os << " (" << detail::short_number(*n.children[i].prob) << ")";
      os << "\"];\n";
    }
    return id;
  };
  emit(p.root);
  os << "}\n";
  return os.str();
}

}  // namespace dxp

#endif  // DXPOLICY_POLICY_HPP
