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

#ifndef DXPOLICY_AOSTAR_HPP
#define DXPOLICY_AOSTAR_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "andor_graph.hpp"
#include "common.hpp"
#include "dataset.hpp"
#include "mdp.hpp"
#include "policy.hpp"

namespace dxp {

struct AoConfig {
  bool laplace = false;
  bool sp = false;   // statistical pruning
  bool es = false;   // early stopping on a validation half
  bool ppp = false;  // pessimistic post-pruning
  std::uint64_t byte_limit = kDefaultByteLimit;
  std::size_t max_iterations = 50'000'000;
  std::uint64_t seed = 0;  // only the early-stopping split is random
  double ci_z = kZ95;
  bool audit = false;  // snapshot realistic values around every SP prune
};

struct IterationRecord {
  enum class Kind { start, expand, prune };
  std::size_t iteration = 0;
  Kind kind = Kind::start;
  std::string node;  // state the action applies to
  std::string test;  // expanded or pruned test
  double v_opt = 0.0;
  double v_real = 0.0;
  std::optional<double> validation_cost;
};

/// One statistical-pruning decision that removed an action.
struct PruneEvent {
  std::string node;
  std::string test;
  std::size_t matches = 0;
  double v_opt = 0.0;
  double v_real = 0.0;
  double ci_low = 0.0;
  bool real_changed = false;  // only filled when AoConfig::audit is set
};

struct SearchTrace {
  std::vector<IterationRecord> iterations;
  std::vector<PruneEvent> prunes;
  std::size_t expansions = 0;
  bool converged = false;
  bool memory_exhausted = false;
  bool iteration_limit = false;
  Graph::Stats final_stats;

  /// Line-delimited JSON, one record per iteration.
  std::string to_jsonl() const {
    std::string out;
    std::size_t expanded = 0;
    for (const auto& r : iterations) {
      if (r.kind == IterationRecord::Kind::expand) ++expanded;
      nlohmann::json j;
      j["iteration"] = r.iteration;
      j["kind"] = r.kind == IterationRecord::Kind::start    ? "start"
                  : r.kind == IterationRecord::Kind::expand ? "expand"
                                                            : "prune";
      if (!r.node.empty()) j["node"] = r.node;
      if (!r.test.empty()) j["test"] = r.test;
      j["expansions"] = expanded;
      j["v_opt"] = r.v_opt;
      j["v_real"] = r.v_real;
      if (r.validation_cost) j["validation_cost"] = *r.validation_cost;
      out += j.dump() + "\n";
    }
    return out;
  }
};

struct SearchResult {
  Policy policy;
  SearchTrace trace;
};

//==============================================================================
// Tip selection

struct Tip {
  OrHandle node = kNoNode;
  AttrIndex attr = 0;
  double reach = 0.0;
};

/// Picks the unexpanded test to expand next: among the OR nodes of the
/// optimistic policy whose chosen test has no AND node yet, the one most
/// likely to be reached from the root (probability summed over all paths),
/// ties to the smallest state key. Returns nullopt once the optimistic
/// policy is complete.
inline std::optional<Tip> select_tip(const Graph& g) {
  std::vector<OrHandle> nodes{g.root()};
  std::vector<char> seen(g.num_or(), 0);
  seen[g.root()] = 1;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const OrNode& n = g.or_node(nodes[i]);
    if (!n.opt_action.is_test()) continue;
    const TestEdge* e = n.edge(n.opt_action.index);
    if (!e->expanded()) continue;
    for (auto c : g.and_node(e->node).children)
      if (c != kNoNode && !seen[c]) {
        seen[c] = 1;
        nodes.push_back(c);
      }
  }
  // Parents hold fewer assignments than children, so ordering by state size
  // is a topological order.
  std::stable_sort(nodes.begin(), nodes.end(), [&](OrHandle a, OrHandle b) {
    return g.or_node(a).state.size() < g.or_node(b).state.size();
  });
  std::vector<double> reach(g.num_or(), 0.0);
  reach[g.root()] = 1.0;
  std::optional<Tip> best;
  std::string best_key;
  for (auto h : nodes) {
    const OrNode& n = g.or_node(h);
    if (!n.opt_action.is_test()) continue;
    const TestEdge* e = n.edge(n.opt_action.index);
    if (e->expanded()) {
      const AndNode& a = g.and_node(e->node);
      for (std::size_t v = 0; v < a.children.size(); ++v)
        if (a.children[v] != kNoNode) reach[a.children[v]] += reach[h] * a.probs[v];
      continue;
    }
    std::string key = n.state.key();
    if (!best || reach[h] > best->reach || (reach[h] == best->reach && key < best_key)) {
      best = Tip{h, e->attr, reach[h]};
      best_key = std::move(key);
    }
  }
  return best;
}

//==============================================================================
// Statistical pruning

struct SpDecision {
  bool prune = false;
  std::size_t matches = 0;
  double center = 0.0;  // V^real(s)
  double mean = 0.0;    // of the per-example costs
  double stddev = 0.0;  // sample standard deviation (n - 1)
  double ci_low = 0.0;
};

inline double sample_mean(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

inline double sample_stddev(const std::vector<double>& x, double mean) {
  if (x.size() < 2) return 0.0;
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

/// Should the optimistic action at `s` be pruned? The confidence interval is
/// centred on V^real(s) with half-width z * sd / sqrt(m), where sd is the
/// sample deviation of the total costs of the m training examples matching s
/// under the realistic policy. Prunes when V^opt(s) reaches the lower limit.
/// With fewer than two examples nothing is pruned.
inline SpDecision sp_test(const Graph& g, OrHandle s, double z = kZ95) {
  const OrNode& n = g.or_node(s);
  SpDecision d;
  d.matches = n.match_count();
  d.center = n.v_real;
  if (d.matches < 2 || !n.opt_action.is_test()) return d;
  const Dataset& data = g.estimator().data();
  std::vector<double> costs;
  costs.reserve(n.matches.size());
  for (auto i : n.matches) costs.push_back(g.realistic_cost(s, data.examples[i]));
  d.mean = sample_mean(costs);
  d.stddev = sample_stddev(costs, d.mean);
  d.ci_low = d.center - z * d.stddev / std::sqrt(static_cast<double>(d.matches));
  d.prune = n.v_opt >= d.ci_low;
  return d;
}

/// Applies sp_test at `s` and prunes the optimistic action when it says so.
inline bool sp_check(Graph& g, OrHandle s, double z = kZ95) {
  const auto d = sp_test(g, s, z);
  if (d.prune) g.prune(s, g.or_node(s).opt_action.index);
  return d.prune;
}

//==============================================================================

/// Runs AO* on an existing graph until the optimistic policy is complete, the
/// memory limit refuses an expansion, or the iteration cap is reached.
/// `observe(graph, record)` runs after every iteration, including the
/// initial one, and may fill in record.validation_cost.
template <typename Observer>
SearchTrace run_search(Graph& g, const AoConfig& cfg, Observer&& observe) {
  SearchTrace t;
  const Dataset& d = g.estimator().data();
  auto record = [&](IterationRecord r) {
    r.v_opt = g.or_node(g.root()).v_opt;
    r.v_real = g.or_node(g.root()).v_real;
    t.iterations.push_back(std::move(r));
    observe(static_cast<const Graph&>(g), t.iterations.back());
  };
  record({0, IterationRecord::Kind::start, {}, {}, 0, 0, {}});

  for (std::size_t it = 1;; ++it) {
    if (it > cfg.max_iterations) {
      t.iteration_limit = true;
      break;
    }
    auto tip = select_tip(g);
    if (!tip) {
      t.converged = true;
      break;
    }
    const std::string where = g.describe(tip->node);
    const std::string test = d.attributes[tip->attr].name;
    if (cfg.sp) {
      const auto dec = sp_test(g, tip->node, cfg.ci_z);
      if (dec.prune) {
        PruneEvent ev;
        ev.node = where;
        ev.test = test;
        ev.matches = dec.matches;
        ev.v_opt = g.or_node(tip->node).v_opt;
        ev.v_real = g.or_node(tip->node).v_real;
        ev.ci_low = dec.ci_low;
        std::vector<double> before;
        if (cfg.audit)
          for (std::size_t h = 0; h < g.num_or(); ++h)
            before.push_back(g.or_node(static_cast<OrHandle>(h)).v_real);
        g.prune(tip->node, tip->attr);
        if (cfg.audit)
          for (std::size_t h = 0; h < g.num_or(); ++h)
            if (g.or_node(static_cast<OrHandle>(h)).v_real != before[h]) ev.real_changed = true;
        t.prunes.push_back(std::move(ev));
        record({it, IterationRecord::Kind::prune, where, test, 0, 0, {}});
        continue;
      }
    }
    if (!g.expand(tip->node, tip->attr).ok) {
      t.memory_exhausted = true;
      break;
    }
    ++t.expansions;
    record({it, IterationRecord::Kind::expand, where, test, 0, 0, {}});
  }
  t.final_stats = g.stats();
  return t;
}

inline SearchTrace run_search(Graph& g, const AoConfig& cfg) {
  return run_search(g, cfg, [](const Graph&, IterationRecord&) {});
}

//==============================================================================
// Pessimistic post-pruning

namespace detail {

/// Upper 95% limit for C(s, f) from the costs MC(f, y_i) of the matching
/// examples, plus one fake example per class under Laplace. States with no
/// matching example get a zero-width interval at C(s, f).
inline double misdiagnosis_upper_bound(const Estimator& est, const CostModel& cm,
                                       std::span<const ExampleIndex> match, ClassIndex f,
                                       double z) {
  if (match.empty()) {
    if (!est.laplace()) return 0.0;  // unreachable: probability zero
    return diagnosis_cost(est.class_distribution(match), cm, f);
  }
  std::vector<double> sample;
  sample.reserve(match.size() + cm.num_classes());
  for (auto i : match) sample.push_back(cm.mc[f][est.data().examples[i].label]);
  if (est.laplace())
    for (std::size_t k = 0; k < cm.num_classes(); ++k) sample.push_back(cm.mc[f][k]);
  const double mean = sample_mean(sample);
  const double sd = sample_stddev(sample, mean);
  return mean + z * sd / std::sqrt(static_cast<double>(sample.size()));
}

}  // namespace detail

/// Bottom-up contraction of a policy: leaves get an upper confidence bound
/// on their misdiagnosis cost, internal nodes C(test) plus the expected
/// bound of their children. An internal node becomes an f_best leaf when
/// the leaf bound is strictly smaller.
inline Policy ppp_prune(const Policy& policy, const Estimator& est, const CostModel& cm,
                        double z = kZ95) {
  const Dataset& d = est.data();
  std::function<double(PolicyNode&, const std::vector<ExampleIndex>&)> rec =
      [&](PolicyNode& n, const std::vector<ExampleIndex>& match) -> double {
    if (n.is_leaf()) {
      auto k = d.class_index(n.diagnosis);
      if (!k) throw ExecutionError("unknown class '" + n.diagnosis + "' in policy");
      return detail::misdiagnosis_upper_bound(est, cm, match, *k, z);
    }
    auto a = d.attribute_index(n.test);
    if (!a) throw ExecutionError("unknown attribute '" + n.test + "' in policy");
    const auto& meta = d.attributes[*a];
    const bool reachable = est.laplace() || !match.empty();
    double ub = cm.test_cost[*a];
    std::vector<double> probs(meta.arity(), 0.0);
    if (reachable) probs = est.outcome_distribution(match, *a);
    for (std::size_t b = 0; b < n.children.size(); ++b) {
      auto it = std::find(meta.values.begin(), meta.values.end(), n.branches[b]);
      if (it == meta.values.end())
        throw ExecutionError("unknown value '" + n.branches[b] + "' for '" + n.test + "'");
      const auto v = static_cast<ValueIndex>(it - meta.values.begin());
      const double child = rec(n.children[b], est.filter(match, *a, v));
      ub += probs[v] * child;
    }
    if (!reachable) return 0.0;
    const auto f = best_diagnosis(est.class_distribution(match), cm);
    const double leaf_ub = detail::misdiagnosis_upper_bound(est, cm, match, f.label, z);
    if (leaf_ub < ub) {
      PolicyNode leaf = PolicyNode::leaf(d.classes[f.label], f.cost);
      leaf.prob = n.prob;
      n = std::move(leaf);
      return leaf_ub;
    }
    return ub;
  };
  Policy out = policy;
  rec(out.root, est.all());
  annotate(out, est, cm);
  return out;
}

//==============================================================================
// Early stopping

/// Remembers the policy with the lowest validation cost seen so far; ties
/// keep the earlier one.
class BestSnapshot {
 public:
  template <typename MakePolicy>
  bool offer(double cost, std::size_t iteration, MakePolicy&& make) {
    if (policy_ && !(cost < cost_)) return false;
    cost_ = cost;
    iteration_ = iteration;
    policy_ = make();
    return true;
  }

  bool empty() const { return !policy_.has_value(); }
  double cost() const { return cost_; }
  std::size_t iteration() const { return iteration_; }
  const Policy& policy() const { return *policy_; }

 private:
  std::optional<Policy> policy_;
  double cost_ = 0.0;
  std::size_t iteration_ = 0;
};

/// Stratified half/half split of `train` used by early stopping.
inline std::pair<Dataset, Dataset> early_stopping_split(const Dataset& train,
                                                        std::uint64_t seed) {
  for (auto c : train.class_counts())
    if (c < 2) throw ConfigError("early stopping needs two examples of every class");
  std::vector<ClassIndex> labels;
  for (const auto& e : train.examples) labels.push_back(e.label);
  Rng rng(derive_seed(seed, {0x65735f73706c6974ull}));
  auto [sub, val] = stratified_split(labels, train.num_classes(), 0.5, rng);
  return {train.subset(sub), train.subset(val)};
}

/// AO* on one half of the training data; after every iteration the realistic
/// policy is scored on the other half, and the best-scoring one is returned.
inline SearchResult es_learn(const Dataset& train, const CostModel& cm, const AoConfig& cfg) {
  if (train.examples.empty()) throw EmptyDatasetError("empty training set");
  auto [sub, val] = early_stopping_split(train, cfg.seed);
  Estimator est(sub, cfg.laplace);
  Graph g(est, cm, cfg.byte_limit);
  BestSnapshot best;
  auto observe = [&](const Graph& graph, IterationRecord& r) {
    double sum = 0.0;
    for (const auto& e : val.examples) sum += graph.realistic_cost(graph.root(), e);
    const double cost = sum / static_cast<double>(val.size());
    r.validation_cost = cost;
    best.offer(cost, r.iteration, [&] { return graph.realistic_policy(); });
  };
  SearchResult out;
  out.trace = run_search(g, cfg, observe);
  out.policy = best.policy();
  if (cfg.ppp) out.policy = ppp_prune(out.policy, est, cm, cfg.ci_z);
  return out;
}

/// AO* with the regularizers selected in `cfg`. Without regularizers and
/// within the limits the policy is optimal for the training estimates.
inline SearchResult ao_star(const Dataset& train, const CostModel& cm, const AoConfig& cfg = {}) {
  if (train.examples.empty()) throw EmptyDatasetError("empty training set");
  if (cfg.es) return es_learn(train, cm, cfg);
  Estimator est(train, cfg.laplace);
  Graph g(est, cm, cfg.byte_limit);
  SearchResult out;
  out.trace = run_search(g, cfg);
  out.policy = g.realistic_policy();
  if (cfg.ppp) out.policy = ppp_prune(out.policy, est, cm, cfg.ci_z);
  return out;
}

}  // namespace dxp

#endif  // DXPOLICY_AOSTAR_HPP
