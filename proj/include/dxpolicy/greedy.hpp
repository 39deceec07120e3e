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

#ifndef DXPOLICY_GREEDY_HPP
#define DXPOLICY_GREEDY_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "common.hpp"
#include "dataset.hpp"
#include "mdp.hpp"
#include "policy.hpp"

namespace dxp {

enum class GreedyMethod { nor, mcn, voi };

struct GreedyConfig {
  GreedyMethod method = GreedyMethod::nor;
  bool laplace = false;
  // Minimum support: a test qualifies when at least `min_outcomes` of its
  // outcomes have at least `min_examples` matching examples each. Nor and
  // MC-N only.
  std::size_t min_outcomes = 2;
  std::size_t min_examples = 2;
  double c45_z = kZ75;
  bool post_prune = true;
};

/// Shannon entropy in bits; 0 log 0 = 0.
inline double entropy(const ClassDistribution& d) {
  double h = 0.0;
  for (double p : d.p)
    if (p > 0.0) h -= p * std::log2(p);
  return h;
}

/// I(x_n; y | s) for the examples `match` matching s.
inline double info_gain(const Estimator& est, std::span<const ExampleIndex> match, AttrIndex n) {
  const double parent = entropy(est.class_distribution(match));
  const auto probs = est.outcome_distribution(match, n);
  double cond = 0.0;
  for (std::size_t v = 0; v < probs.size(); ++v) {
    if (probs[v] == 0.0) continue;
    cond += probs[v] * entropy(est.class_distribution(
                           est.filter(match, n, static_cast<ValueIndex>(v))));
  }
  return parent - cond;
}

inline double info_gain(const Estimator& est, const State& s, AttrIndex n) {
  return info_gain(est, est.matching(s), n);
}

/// 1-step-LA(s, x_n): test once, then take the cheapest diagnosis in each
/// outcome.
inline double one_step_la(const Estimator& est, const CostModel& cm,
                          std::span<const ExampleIndex> match, AttrIndex n) {
  const auto probs = est.outcome_distribution(match, n);
  double q = cm.test_cost[n];
  for (std::size_t v = 0; v < probs.size(); ++v) {
    if (probs[v] == 0.0) continue;
    q += probs[v] * best_diagnosis(est.class_distribution(est.filter(
                                       match, n, static_cast<ValueIndex>(v))),
                                   cm)
                        .cost;
  }
  return q;
}

inline double one_step_la(const Estimator& est, const CostModel& cm, const State& s,
                          AttrIndex n) {
  return one_step_la(est, cm, est.matching(s), n);
}

//==============================================================================
// C4.5 pessimistic error

/// Upper limit of the one-sided normal interval for an error rate p observed
/// on n examples, with continuity correction, clamped to [0, 1].
inline double c45_upper_error_rate(double p, std::size_t n, double z = kZ75) {
  const double nn = static_cast<double>(n);
  const double ucl = p + z * std::sqrt(p * (1.0 - p) / nn) + 1.0 / (2.0 * nn);
  return std::clamp(ucl, 0.0, 1.0);
}

/// Pessimistic error count for e errors among n examples (n >= 1).
inline double c45_pessimistic_error(std::size_t n, std::size_t e, double z = kZ75) {
  if (n == 0) throw std::invalid_argument("c45_pessimistic_error needs n >= 1");
  return static_cast<double>(n) *
         c45_upper_error_rate(static_cast<double>(e) / static_cast<double>(n), n, z);
}

namespace detail {

/// Pessimistic error of predicting `k` on `match`; under Laplace the error
/// rate counts one fake example per class.
inline double leaf_pessimistic_error(const Estimator& est, std::span<const ExampleIndex> match,
                                     ClassIndex k, double z) {
  const std::size_t n = match.size();
  if (n == 0) return 0.0;
  const auto counts = est.class_counts(match);
  const std::size_t e = n - counts[k];
  if (!est.laplace()) return c45_pessimistic_error(n, e, z);
  const std::size_t kk = counts.size();
  const double p = static_cast<double>(e + kk - 1) / static_cast<double>(n + kk);
  return static_cast<double>(n) * c45_upper_error_rate(p, n, z);
}

inline ValueIndex branch_value(const AttributeMeta& meta, const std::string& label) {
  auto it = std::find(meta.values.begin(), meta.values.end(), label);
  if (it == meta.values.end())
    throw ExecutionError("unknown value '" + label + "' for '" + meta.name + "'");
  return static_cast<ValueIndex>(it - meta.values.begin());
}

}  // namespace detail

/// C4.5 post-pruning: bottom-up, a test node becomes a majority-class leaf
/// when its children's summed pessimistic errors are at least the error it
/// would have as a leaf.
inline Policy c45_post_prune(const Policy& policy, const Estimator& est, double z = kZ75) {
  const Dataset& d = est.data();
  std::function<double(PolicyNode&, const std::vector<ExampleIndex>&)> rec =
      [&](PolicyNode& n, const std::vector<ExampleIndex>& match) -> double {
    if (n.is_leaf())
      return detail::leaf_pessimistic_error(est, match, *d.class_index(n.diagnosis), z);
    const AttrIndex a = *d.attribute_index(n.test);
    double sum = 0.0;
    for (std::size_t b = 0; b < n.children.size(); ++b)
      sum += rec(n.children[b],
                 est.filter(match, a, detail::branch_value(d.attributes[a], n.branches[b])));
    if (match.empty()) return sum;
    const ClassIndex k = most_likely_class(est.class_distribution(match));
    const double as_leaf = detail::leaf_pessimistic_error(est, match, k, z);
    if (sum >= as_leaf) {
      auto prob = n.prob;
      n = PolicyNode::leaf(d.classes[k]);
      n.prob = prob;
      return as_leaf;
    }
    return sum;
  };
  Policy out = policy;
  rec(out.root, est.all());
  return out;
}

/// Bottom-up: a test node becomes an f_best leaf when C(s, f_best) is
/// strictly below Q^pi(s, x_n) = C(x_n) + sum P V^pi(s').
inline Policy post_prune_expected_cost(const Policy& policy, const Estimator& est,
                                       const CostModel& cm) {
  const Dataset& d = est.data();
  std::function<double(PolicyNode&, const std::vector<ExampleIndex>&)> rec =
      [&](PolicyNode& n, const std::vector<ExampleIndex>& match) -> double {
    const bool reachable = est.laplace() || !match.empty();
    if (n.is_leaf()) {
      if (!reachable) return 0.0;
      return diagnosis_cost(est.class_distribution(match), cm, *d.class_index(n.diagnosis));
    }
    const AttrIndex a = *d.attribute_index(n.test);
    std::vector<double> probs(d.attributes[a].arity(), 0.0);
    if (reachable) probs = est.outcome_distribution(match, a);
    double q = cm.test_cost[a];
    for (std::size_t b = 0; b < n.children.size(); ++b) {
      const ValueIndex v = detail::branch_value(d.attributes[a], n.branches[b]);
      const double child = rec(n.children[b], est.filter(match, a, v));
      q += probs[v] * child;
    }
    if (!reachable) return 0.0;
    const auto f = best_diagnosis(est.class_distribution(match), cm);
    if (f.cost < q) {
      auto prob = n.prob;
      n = PolicyNode::leaf(d.classes[f.label], f.cost);
      n.prob = prob;
      return f.cost;
    }
    return q;
  };
  Policy out = policy;
  rec(out.root, est.all());
  return out;
}

//==============================================================================
// Growth

namespace detail {

inline bool passes_min_support(const Estimator& est, std::span<const ExampleIndex> match,
                               AttrIndex a, const GreedyConfig& cfg) {
  std::size_t ok = 0;
  for (auto c : est.value_counts(match, a))
    if (c >= cfg.min_examples) ++ok;
  return ok >= cfg.min_outcomes;
}

inline bool pure(const Estimator& est, std::span<const ExampleIndex> match) {
  std::size_t nonzero = 0;
  for (auto c : est.class_counts(match))
    if (c > 0) ++nonzero;
  return nonzero <= 1;
}

class GreedyGrower {
 public:
  GreedyGrower(const Estimator& est, const CostModel& cm, const GreedyConfig& cfg)
      : est_(est), cm_(cm), cfg_(cfg), d_(est.data()) {}

  PolicyNode grow(const std::vector<ExampleIndex>& match, std::vector<char>& measured,
                  ClassIndex fallback) {
    if (match.empty() && (!est_.laplace() || cfg_.method == GreedyMethod::nor))
      return leaf(fallback);
    const auto dist = est_.class_distribution(match);
    const ClassIndex label = cfg_.method == GreedyMethod::nor
                                 ? most_likely_class(dist)
                                 : best_diagnosis(dist, cm_).label;
    if (match.empty()) return leaf(label);
    // Nothing can beat a free diagnosis.
    if (diagnosis_cost(dist, cm_, label) == 0.0) return leaf(label);

    std::optional<AttrIndex> pick;
    if (cfg_.method == GreedyMethod::voi) {
      pick = voi_pick(match, measured, best_diagnosis(dist, cm_).cost);
    } else if (!pure(est_, match)) {
      pick = norton_pick(match, measured);
    }
    if (!pick) return leaf(label);

    const AttrIndex a = *pick;
    const auto& meta = d_.attributes[a];
    PolicyNode n;
    n.test = meta.name;
    measured[a] = 1;
    for (ValueIndex v = 0; v < meta.arity(); ++v) {
      n.branches.push_back(meta.values[v]);
      n.children.push_back(grow(est_.filter(match, a, v), measured, label));
    }
    measured[a] = 0;
    return n;
  }

  /// argmax I/C over tests passing minimum support; lowest index on ties.
  std::optional<AttrIndex> norton_pick(const std::vector<ExampleIndex>& match,
                                       const std::vector<char>& measured) const {
    std::optional<AttrIndex> best;
    double best_score = -std::numeric_limits<double>::infinity();
    for (AttrIndex a = 0; a < d_.num_attributes(); ++a) {
      if (measured[a] || !passes_min_support(est_, match, a, cfg_)) continue;
      const double score = info_gain(est_, match, a) / cm_.test_cost[a];
      if (score > best_score) {
        best_score = score;
        best = a;
      }
    }
    return best;
  }

  /// argmin 1-step-LA, kept only when its value of information is positive.
  std::optional<AttrIndex> voi_pick(const std::vector<ExampleIndex>& match,
                                    const std::vector<char>& measured,
                                    double diagnose_now) const {
    std::optional<AttrIndex> best;
    double best_la = std::numeric_limits<double>::infinity();
    for (AttrIndex a = 0; a < d_.num_attributes(); ++a) {
      if (measured[a]) continue;
      const double la = one_step_la(est_, cm_, match, a);
      if (la < best_la) {
        best_la = la;
        best = a;
      }
    }
    if (best && diagnose_now - best_la > 0.0) return best;
    return std::nullopt;
  }

 private:
  PolicyNode leaf(ClassIndex k) const { return PolicyNode::leaf(d_.classes[k]); }

  const Estimator& est_;
  const CostModel& cm_;
  const GreedyConfig& cfg_;
  const Dataset& d_;
};

}  // namespace detail

/// Grows the tree for `cfg.method` without any post-pruning.
inline Policy grow_greedy_tree(const Estimator& est, const CostModel& cm,
                               const GreedyConfig& cfg) {
  const Dataset& d = est.data();
  if (d.examples.empty()) throw EmptyDatasetError("empty training set");
  detail::GreedyGrower grower(est, cm, cfg);
  std::vector<char> measured(d.num_attributes(), 0);
  Policy p{grower.grow(est.all(), measured, 0)};
  annotate(p, est, cm);
  return p;
}

/// Norton's criterion with most-likely-class leaves, then C4.5 pruning.
inline Policy grow_nor(const Dataset& train, const CostModel& cm, GreedyConfig cfg = {}) {
  cfg.method = GreedyMethod::nor;
  Estimator est(train, cfg.laplace);
  Policy p = grow_greedy_tree(est, cm, cfg);
  if (cfg.post_prune) {
    p = c45_post_prune(p, est, cfg.c45_z);
    annotate(p, est, cm);
  }
  return p;
}

/// Norton's criterion with minimum-expected-cost leaves, then expected-cost
/// post-pruning.
inline Policy grow_mcn(const Dataset& train, const CostModel& cm, GreedyConfig cfg = {}) {
  cfg.method = GreedyMethod::mcn;
  Estimator est(train, cfg.laplace);
  Policy p = grow_greedy_tree(est, cm, cfg);
  if (cfg.post_prune) {
    p = post_prune_expected_cost(p, est, cm);
    annotate(p, est, cm);
  }
  return p;
}

/// One-step value of information. Needs no post-pruning.
inline Policy grow_voi(const Dataset& train, const CostModel& cm, GreedyConfig cfg = {}) {
  cfg.method = GreedyMethod::voi;
  Estimator est(train, cfg.laplace);
  return grow_greedy_tree(est, cm, cfg);
}

}  // namespace dxp

#endif  // DXPOLICY_GREEDY_HPP
