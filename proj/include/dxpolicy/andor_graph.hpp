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

#ifndef DXPOLICY_ANDOR_GRAPH_HPP
#define DXPOLICY_ANDOR_GRAPH_HPP

#include <functional>
#include <limits>
#include <queue>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "common.hpp"
#include "dataset.hpp"
#include "mdp.hpp"
#include "policy.hpp"

namespace dxp {

using OrHandle = std::uint32_t;
using AndHandle = std::uint32_t;
inline constexpr std::uint32_t kNoNode = std::numeric_limits<std::uint32_t>::max();

/// Accounted sizes, in bytes, of the graph's building blocks. These are a
/// fixed convention rather than measured allocator usage, so the limit is
/// reproducible across platforms.
struct MemoryCosts {
  static constexpr std::uint64_t or_node = 160;
  static constexpr std::uint64_t state_entry = 8;
  static constexpr std::uint64_t match_entry = 4;
  static constexpr std::uint64_t class_count = 8;
  static constexpr std::uint64_t test_edge = 32;
  static constexpr std::uint64_t and_node = 96;
  static constexpr std::uint64_t and_child = 16;
  static constexpr std::uint64_t parent_link = 8;
  static constexpr std::uint64_t index_entry = 48;
};

/// A candidate test at an OR node. `node` is set once the AND node exists
/// (i.e. the test has been expanded); until then its value is `heuristic`.
struct TestEdge {
  AttrIndex attr = 0;
  double cost = 0.0;
  double heuristic = 0.0;
  AndHandle node = kNoNode;
  bool pruned = false;

  bool expanded() const { return node != kNoNode; }
};

struct OrNode {
  State state;
  std::vector<ExampleIndex> matches;
  std::vector<std::size_t> class_counts;
  Diagnosis best;              // f_best and C(s, f_best)
  bool diagnosis_only = false;  // no example matches: tests are not offered
  std::vector<TestEdge> tests;  // unmeasured attributes, by attribute index
  double v_opt = 0.0;
  double v_real = 0.0;
  Action opt_action;
  Action real_action;
  std::vector<AndHandle> parents;

  std::size_t match_count() const { return matches.size(); }

  const TestEdge* edge(AttrIndex a) const {
    for (const auto& e : tests)
      if (e.attr == a) return &e;
    return nullptr;
  }
  TestEdge* edge(AttrIndex a) {
    for (auto& e : tests)
      if (e.attr == a) return &e;
    return nullptr;
  }
};

struct AndNode {
  OrHandle parent = kNoNode;
  AttrIndex attr = 0;
  double cost = 0.0;
  std::vector<double> probs;        // P(x_n = v | s), by value
  std::vector<OrHandle> children;   // by value; kNoNode for omitted outcomes
  double q_opt = 0.0;
  double q_real = 0.0;
  bool expanded = true;
};

//==============================================================================

namespace detail {

/// One-step lookahead bound shared by the graph and the free function below.
/// `min_other_test` is the cheapest test still unmeasured after measuring n.
inline double heuristic_from_counts(const Estimator& est, const CostModel& cm,
                                    const std::vector<std::vector<std::size_t>>& counts,
                                    std::size_t total, AttrIndex n,
                                    double min_other_test) {
  const bool laplace = est.laplace();
  const std::size_t arity = counts.size();
  double q = cm.test_cost[n];
  for (std::size_t v = 0; v < arity; ++v) {
    std::size_t mv = 0;
    for (auto c : counts[v]) mv += c;
    if (!laplace && mv == 0) continue;
    const double p = estimate(mv, total, arity, laplace);
    double child = best_diagnosis(class_distribution(counts[v], laplace), cm).cost;
    if (mv > 0) child = std::min(child, min_other_test);
    q += p * child;
  }
  return q;
}

inline std::vector<std::vector<std::size_t>> joint_counts(const Estimator& est,
                                                          std::span<const ExampleIndex> match,
                                                          AttrIndex a) {
  const Dataset& d = est.data();
  std::vector<std::vector<std::size_t>> c(d.attributes[a].arity(),
                                          std::vector<std::size_t>(d.num_classes(), 0));
  for (auto i : match) ++c[d.examples[i].values[a]][d.examples[i].label];
  return c;
}

}  // namespace detail

/// Admissible estimate of the cost of testing n in s: C(x_n) plus, for each
/// outcome, the cheapest action available in the child state (a diagnosis or
/// the bare cost of one more test).
inline double heuristic_q(const State& s, AttrIndex n, const Estimator& est,
                          const CostModel& cm) {
  if (s.measured(n)) throw std::logic_error("heuristic_q on a measured attribute");
  auto match = est.matching(s);
  double min_other = std::numeric_limits<double>::infinity();
  for (AttrIndex a = 0; a < est.data().num_attributes(); ++a)
    if (a != n && !s.measured(a)) min_other = std::min(min_other, cm.test_cost[a]);
  if (!est.laplace() && match.empty())
    throw UndefinedProbability("no training example matches the state");
  return detail::heuristic_from_counts(est, cm, detail::joint_counts(est, match, n),
                                       match.size(), n, min_other);
}

//==============================================================================
/// Explicit AND/OR search graph with one OR node per distinct state.
///
/// Every OR node keeps an optimistic value (unexpanded tests count at their
/// heuristic) and a realistic value (only expanded tests count; anything else
/// diagnoses f_best). Single writer; not thread-safe.
class Graph {
 public:
  struct Stats {
    std::size_t or_nodes = 0;
    std::size_t and_nodes = 0;
    std::uint64_t bytes_used = 0;
    std::uint64_t byte_limit = 0;
  };

  struct ExpandResult {
    bool ok = false;  // false: refused by the memory limit
    AndHandle node = kNoNode;
    std::vector<OrHandle> created;
  };

  Graph(const Estimator& est, const CostModel& cm,
        std::uint64_t byte_limit = kDefaultByteLimit)
      : est_(&est), cm_(&cm), byte_limit_(byte_limit) {
    if (est.data().examples.empty()) throw EmptyDatasetError("empty training set");
    if (cm.test_cost.size() != est.data().num_attributes() ||
        cm.num_classes() != est.data().num_classes())
      throw ConfigError("cost model does not match the dataset");
    bytes_used_ = or_bytes(0, est.data().size(), est.data().num_attributes()) +
                  MemoryCosts::index_entry;
    make_or(State{}, est.all());
  }

  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  const Estimator& estimator() const { return *est_; }
  const CostModel& costs() const { return *cm_; }
  OrHandle root() const { return 0; }
  const OrNode& or_node(OrHandle h) const { return ors_.at(h); }
  const AndNode& and_node(AndHandle h) const { return ands_.at(h); }
  std::size_t num_or() const { return ors_.size(); }
  std::size_t num_and() const { return ands_.size(); }
  std::uint64_t bytes_used() const { return bytes_used_; }
  std::uint64_t byte_limit() const { return byte_limit_; }
  Stats stats() const { return {ors_.size(), ands_.size(), bytes_used_, byte_limit_}; }

  std::optional<OrHandle> find(const State& s) const {
    auto it = index_.find(s.key());
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  /// Human-readable state, e.g. "{glu=(-inf,127.5], age=(28.5,inf)}".
  std::string describe(OrHandle h) const {
    const Dataset& d = est_->data();
    std::string out = "{";
    bool first = true;
    for (const auto& a : ors_[h].state.assignments()) {
      if (!first) out += ", ";
      first = false;
      out += d.attributes[a.attr].name + "=" + d.attributes[a.attr].values[a.value];
    }
    return out + "}";
  }

  /// Generates the children of test `attr` at OR node `s` (reusing existing
  /// OR nodes), creates the AND node and backs values up to the root. Refuses
  /// without modifying anything when the accounted memory would exceed the
  /// limit.
  ExpandResult expand(OrHandle s, AttrIndex attr) {
    {
      const TestEdge* e = ors_.at(s).edge(attr);
      if (!e) throw std::logic_error("expand: test not applicable at this node");
      if (e->expanded()) throw std::logic_error("expand: AND node already expanded");
      if (e->pruned) throw std::logic_error("expand: test was pruned");
    }
    const Dataset& d = est_->data();
    const bool laplace = est_->laplace();
    const std::size_t arity = d.attributes[attr].arity();
    const std::size_t n_attr = d.num_attributes();

    std::vector<std::vector<ExampleIndex>> child_match(arity);
    for (auto i : ors_[s].matches) child_match[d.examples[i].values[attr]].push_back(i);

    std::vector<State> child_state(arity);
    std::vector<std::optional<OrHandle>> existing(arity);
    std::uint64_t projected = MemoryCosts::and_node + arity * MemoryCosts::and_child;
    for (std::size_t v = 0; v < arity; ++v) {
      if (!laplace && child_match[v].empty()) continue;
      child_state[v] = ors_[s].state.with(attr, static_cast<ValueIndex>(v));
      existing[v] = find(child_state[v]);
      projected += MemoryCosts::parent_link;
      if (!existing[v]) {
        const std::size_t tests =
            child_match[v].empty() ? 0 : n_attr - child_state[v].size();
        projected += or_bytes(child_state[v].size(), child_match[v].size(), tests) +
                     MemoryCosts::index_entry + child_state[v].size() * 8;
      }
    }
    if (bytes_used_ + projected > byte_limit_) return {};
    bytes_used_ += projected;

    const auto h = static_cast<AndHandle>(ands_.size());
    AndNode node;
    node.parent = s;
    node.attr = attr;
    node.cost = cm_->test_cost[attr];
    node.probs.assign(arity, 0.0);
    node.children.assign(arity, kNoNode);
    const std::size_t total = ors_[s].matches.size();
    ExpandResult result;
    for (std::size_t v = 0; v < arity; ++v) {
      if (!laplace && child_match[v].empty()) continue;
      node.probs[v] = estimate(child_match[v].size(), total, arity, laplace);
      OrHandle c;
      if (existing[v]) {
        c = *existing[v];
      } else {
        c = make_or(std::move(child_state[v]), std::move(child_match[v]));
        result.created.push_back(c);
      }
      ors_[c].parents.push_back(h);
      node.children[v] = c;
    }
    ands_.push_back(std::move(node));
    ors_[s].edge(attr)->node = h;
    const OrHandle from[] = {s};
    backup(from);
    result.ok = true;
    result.node = h;
    return result;
  }

  /// Removes test `attr` from every minimization at `s` and backs up. Only
  /// unexpanded tests may be pruned, so realistic values cannot change.
  void prune(OrHandle s, AttrIndex attr) {
    TestEdge* e = ors_.at(s).edge(attr);
    if (!e) throw std::logic_error("prune: test not applicable at this node");
    if (e->expanded()) throw std::logic_error("prune: test already expanded");
    e->pruned = true;
    const OrHandle from[] = {s};
    backup(from);
  }

  /// Recomputes values at `from` and every ancestor whose values change,
  /// deepest states first so each node is settled once per call.
  void backup(std::span<const OrHandle> from) {
    auto deeper = [this](OrHandle a, OrHandle b) {
      return ors_[a].state.size() < ors_[b].state.size();
    };
    std::priority_queue<OrHandle, std::vector<OrHandle>, decltype(deeper)> queue(deeper);
    std::vector<char> queued(ors_.size(), 0);
    for (auto h : from)
      if (!queued[h]) {
        queued[h] = 1;
        queue.push(h);
      }
    while (!queue.empty()) {
      const OrHandle h = queue.top();
      queue.pop();
      queued[h] = 0;
      if (!recompute(h)) continue;
      for (auto p : ors_[h].parents) {
        const OrHandle up = ands_[p].parent;
        if (!queued[up]) {
          queued[up] = 1;
          queue.push(up);
        }
      }
    }
  }

  /// Recomputes one OR node (and its AND nodes) from its children. Returns
  /// whether v_opt or v_real changed.
  bool recompute(OrHandle h) {
    OrNode& n = ors_[h];
    const double old_opt = n.v_opt, old_real = n.v_real;
    n.v_opt = n.best.cost;
    n.opt_action = Action::diagnose(n.best.label);
    n.v_real = n.best.cost;
    n.real_action = Action::diagnose(n.best.label);
    for (const auto& e : n.tests) {
      if (e.pruned) continue;
      double q_opt = e.heuristic;
      if (e.expanded()) {
        AndNode& a = ands_[e.node];
        a.q_opt = a.cost;
        a.q_real = a.cost;
        for (std::size_t v = 0; v < a.children.size(); ++v) {
          if (a.children[v] == kNoNode) continue;
          a.q_opt += a.probs[v] * ors_[a.children[v]].v_opt;
          a.q_real += a.probs[v] * ors_[a.children[v]].v_real;
        }
        q_opt = a.q_opt;
        if (a.q_real < n.v_real) {
          n.v_real = a.q_real;
          n.real_action = Action::test(e.attr);
        }
      }
      if (q_opt < n.v_opt) {
        n.v_opt = q_opt;
        n.opt_action = Action::test(e.attr);
      }
    }
    return n.v_opt != old_opt || n.v_real != old_real;
  }

  //----------------------------------------------------------------------------
  // Realistic policy

  /// Child reached from `h` by its realistic test on an example with value v,
  /// or kNoNode for an outcome never seen in training.
  OrHandle real_child(OrHandle h, ValueIndex v) const {
    const OrNode& n = ors_[h];
    const TestEdge* e = n.edge(n.real_action.index);
    return ands_[e->node].children[v];
  }

  /// Total cost of processing `e` with the realistic policy from `h`.
  /// Outcomes with no OR node fall back to f_best of the last state reached.
  double realistic_cost(OrHandle h, const Example& e) const {
    double cost = 0.0;
    for (;;) {
      const OrNode& n = ors_[h];
      if (!n.real_action.is_test()) return cost + cm_->mc[n.best.label][e.label];
      const AttrIndex a = n.real_action.index;
      const OrHandle c = real_child(h, e.values[a]);
      cost += cm_->test_cost[a];
      if (c == kNoNode) return cost + cm_->mc[n.best.label][e.label];
      h = c;
    }
  }

  /// The realistic policy from `h` unrolled into a tree. Shared sub-policies
  /// are duplicated.
  Policy realistic_policy(OrHandle h = 0) const { return Policy{unroll(h, 1.0)}; }

  //----------------------------------------------------------------------------

  std::string to_dot() const {
    std::ostringstream os;
    os << "digraph andor {\n";
    for (std::size_t i = 0; i < ors_.size(); ++i) {
      const auto& n = ors_[i];
      os << "  o" << i << " [shape=box, label=\"" << detail::dot_escape(describe(static_cast<OrHandle>(i)))
         << "\\nopt=" << detail::short_number(n.v_opt)
         << " real=" << detail::short_number(n.v_real) << "\"];\n";
    }
    const Dataset& d = est_->data();
    for (std::size_t i = 0; i < ands_.size(); ++i) {
      const auto& a = ands_[i];
      os << "  a" << i << " [shape=ellipse, label=\""
         << detail::dot_escape(d.attributes[a.attr].name)
         << "\\nq=" << detail::short_number(a.q_opt) << "\"];\n";
      os << "  o" << a.parent << " -> a" << i << ";\n";
      for (std::size_t v = 0; v < a.children.size(); ++v)
        if (a.children[v] != kNoNode)
          os << "  a" << i << " -> o" << a.children[v] << " [label=\""
             << detail::short_number(a.probs[v]) << "\"];\n";
    }
    os << "}\n";
    return os.str();
  }

 private:
  static std::uint64_t or_bytes(std::size_t state_size, std::size_t matches,
                                std::size_t tests) {
    return MemoryCosts::or_node + state_size * MemoryCosts::state_entry +
           matches * MemoryCosts::match_entry + tests * MemoryCosts::test_edge;
  }

  OrHandle make_or(State s, std::vector<ExampleIndex> matches) {
    const Dataset& d = est_->data();
    const bool laplace = est_->laplace();
    OrNode n;
    n.class_counts = est_->class_counts(matches);
    n.best = best_diagnosis(class_distribution(n.class_counts, laplace), *cm_);
    n.diagnosis_only = matches.empty();
    if (!n.diagnosis_only) {
      // Cheapest and second-cheapest unmeasured tests give "min over the other
      // tests" for every candidate in O(1).
      double min1 = std::numeric_limits<double>::infinity(), min2 = min1;
      AttrIndex arg1 = 0;
      for (AttrIndex a = 0; a < d.num_attributes(); ++a) {
        if (s.measured(a)) continue;
        const double c = cm_->test_cost[a];
        if (c < min1) {
          min2 = min1;
          min1 = c;
          arg1 = a;
        } else if (c < min2) {
          min2 = c;
        }
      }
      for (AttrIndex a = 0; a < d.num_attributes(); ++a) {
        if (s.measured(a)) continue;
        TestEdge e;
        e.attr = a;
        e.cost = cm_->test_cost[a];
        e.heuristic = detail::heuristic_from_counts(
            *est_, *cm_, detail::joint_counts(*est_, matches, a), matches.size(), a,
            a == arg1 ? min2 : min1);
        n.tests.push_back(e);
      }
    }
    n.state = std::move(s);
    n.matches = std::move(matches);
    const auto h = static_cast<OrHandle>(ors_.size());
    index_.emplace(n.state.key(), h);
    ors_.push_back(std::move(n));
    recompute(h);
    return h;
  }

  PolicyNode unroll(OrHandle h, double prob) const {
    const OrNode& n = ors_[h];
    const Dataset& d = est_->data();
    if (!n.real_action.is_test()) {
      PolicyNode leaf = PolicyNode::leaf(d.classes[n.best.label], n.best.cost);
      leaf.prob = prob;
      return leaf;
    }
    const AttrIndex a = n.real_action.index;
    const AndNode& and_node = ands_[n.edge(a)->node];
    PolicyNode p;
    p.test = d.attributes[a].name;
    p.test_cost = cm_->test_cost[a];
    p.prob = prob;
    p.value = n.v_real;
    for (std::size_t v = 0; v < and_node.children.size(); ++v) {
      p.branches.push_back(d.attributes[a].values[v]);
      if (and_node.children[v] == kNoNode) {
        PolicyNode leaf = PolicyNode::leaf(d.classes[n.best.label]);
        leaf.prob = 0.0;
        p.children.push_back(std::move(leaf));
      } else {
        p.children.push_back(unroll(and_node.children[v], and_node.probs[v]));
      }
    }
    return p;
  }

  const Estimator* est_;
  const CostModel* cm_;
  std::uint64_t byte_limit_;
  std::uint64_t bytes_used_ = 0;
  std::vector<OrNode> ors_;
  std::vector<AndNode> ands_;
  std::unordered_map<std::string, OrHandle> index_;
};

}  // namespace dxp

#endif  // DXPOLICY_ANDOR_GRAPH_HPP
