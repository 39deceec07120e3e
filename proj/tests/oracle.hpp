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

// Reference implementations used by the tests. Nothing here calls into the
// estimator, the graph or the learners: probabilities are recounted from the
// raw examples and optima are found by plain recursion.

#ifndef DXPOLICY_TESTS_ORACLE_HPP
#define DXPOLICY_TESTS_ORACLE_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "dxpolicy/dataset.hpp"
#include "dxpolicy/policy.hpp"

namespace oracle {

using dxp::CostModel;
using dxp::Dataset;

struct Instance {
  Dataset data;
  CostModel costs;
};

/// Binary tests, two classes, a random number of examples and random costs.
inline Instance random_instance(std::mt19937_64& rng, std::size_t max_tests = 4,
                                std::size_t max_examples = 64) {
  std::uniform_int_distribution<std::size_t> n_tests(1, max_tests);
  std::uniform_int_distribution<std::size_t> n_examples(1, max_examples);
  std::uniform_real_distribution<double> test_cost(0.1, 10.0);
  std::uniform_real_distribution<double> mc(0.0, 100.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  Instance in;
  const std::size_t n = n_tests(rng);
  for (std::size_t a = 0; a < n; ++a)
    in.data.attributes.push_back({"x" + std::to_string(a), {"0", "1"}, {}, {}});
  in.data.classes = {"neg", "pos"};
  // A hidden noisy rule so that tests carry some information.
  std::vector<double> weight(n);
  for (auto& w : weight) w = unit(rng) * 2.0 - 1.0;
  const std::size_t m = n_examples(rng);
  for (std::size_t i = 0; i < m; ++i) {
    dxp::Example e;
    double score = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
      e.values.push_back(unit(rng) < 0.5 ? 0u : 1u);
      score += weight[a] * (e.values.back() ? 1.0 : -1.0);
    }
    e.label = unit(rng) < 1.0 / (1.0 + std::exp(-2.0 * score)) ? 1u : 0u;
    in.data.examples.push_back(std::move(e));
  }
  std::vector<double> tests(n);
  for (auto& t : tests) t = test_cost(rng);
  const double fp = mc(rng), fn = mc(rng);
  in.costs = CostModel("random", tests, {{0.0, fn}, {fp, 0.0}});
  return in;
}

/// A partial assignment: -1 for unmeasured.
using Partial = std::vector<int>;

inline std::vector<std::size_t> matching(const Dataset& d, const Partial& s) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < d.examples.size(); ++i) {
    bool ok = true;
    for (std::size_t a = 0; a < s.size(); ++a)
      if (s[a] >= 0 && d.examples[i].values[a] != static_cast<unsigned>(s[a])) ok = false;
    if (ok) out.push_back(i);
  }
  return out;
}

inline double prob(std::size_t count, std::size_t total, std::size_t arity, bool laplace) {
  if (laplace) return (static_cast<double>(count) + 1.0) / static_cast<double>(total + arity);
  return static_cast<double>(count) / static_cast<double>(total);
}

inline double best_diagnosis_cost(const Dataset& d, const CostModel& cm,
                                  const std::vector<std::size_t>& match, bool laplace) {
  const std::size_t k = d.classes.size();
  std::vector<std::size_t> counts(k, 0);
  for (auto i : match) ++counts[d.examples[i].label];
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t f = 0; f < k; ++f) {
    double c = 0.0;
    for (std::size_t y = 0; y < k; ++y) c += prob(counts[y], match.size(), k, laplace) * cm.mc[f][y];
    best = std::min(best, c);
  }
  return best;
}

/// Exhaustive backward induction over every reachable state. Under maximum
/// likelihood, outcomes with no matching example have probability zero and
/// are never visited.
class Dp {
 public:
  Dp(const Dataset& d, const CostModel& cm, bool laplace) : d_(d), cm_(cm), laplace_(laplace) {}

  double value(const Partial& s) {
    auto it = memo_.find(s);
    if (it != memo_.end()) return it->second;
    const auto match = matching(d_, s);
    double best = best_diagnosis_cost(d_, cm_, match, laplace_);
    if (!match.empty()) {
      for (std::size_t a = 0; a < s.size(); ++a) {
        if (s[a] >= 0) continue;
        const std::size_t arity = d_.attributes[a].arity();
        double q = cm_.test_cost[a];
        for (std::size_t v = 0; v < arity; ++v) {
          Partial c = s;
          c[a] = static_cast<int>(v);
          const std::size_t cnt = matching(d_, c).size();
          if (!laplace_ && cnt == 0) continue;
          q += prob(cnt, match.size(), arity, laplace_) * value(c);
        }
        best = std::min(best, q);
      }
    }
    memo_[s] = best;
    return best;
  }

  double root() { return value(Partial(d_.attributes.size(), -1)); }

 private:
  const Dataset& d_;
  const CostModel& cm_;
  bool laplace_;
  std::map<Partial, double> memo_;
};

inline double dp_optimum(const Dataset& d, const CostModel& cm, bool laplace = false) {
  return Dp(d, cm, laplace).root();
}

/// Expected cost of a policy under the training distribution, recounted from
/// scratch. Branches with probability zero contribute nothing.
inline double policy_value(const dxp::PolicyNode& n, const Dataset& d, const CostModel& cm,
                           const Partial& s, bool laplace) {
  const auto match = matching(d, s);
  const std::size_t k = d.classes.size();
  if (n.is_leaf()) {
    std::size_t f = 0;
    while (d.classes[f] != n.diagnosis) ++f;
    std::vector<std::size_t> counts(k, 0);
    for (auto i : match) ++counts[d.examples[i].label];
    double c = 0.0;
    for (std::size_t y = 0; y < k; ++y) c += prob(counts[y], match.size(), k, laplace) * cm.mc[f][y];
    return c;
  }
  std::size_t a = 0;
  while (d.attributes[a].name != n.test) ++a;
  const std::size_t arity = d.attributes[a].arity();
  double q = cm.test_cost[a];
  for (std::size_t b = 0; b < n.children.size(); ++b) {
    std::size_t v = 0;
    while (d.attributes[a].values[v] != n.branches[b]) ++v;
    Partial c = s;
    c[a] = static_cast<int>(v);
    const std::size_t cnt = matching(d, c).size();
    if (!laplace && cnt == 0) continue;
    q += prob(cnt, match.size(), arity, laplace) * policy_value(n.children[b], d, cm, c, laplace);
  }
  return q;
}

inline double policy_value(const dxp::Policy& p, const Dataset& d, const CostModel& cm,
                           bool laplace = false) {
  return policy_value(p.root, d, cm, Partial(d.attributes.size(), -1), laplace);
}

/// Entropy (bits) of a label multiset.
inline double label_entropy(const std::vector<int>& labels) {
  std::map<int, double> c;
  for (int l : labels) c[l] += 1.0;
  double h = 0.0;
  for (const auto& [l, n] : c) {
    const double p = n / static_cast<double>(labels.size());
    h -= p * std::log2(p);
  }
  return h;
}

/// Information gain of cutting `values` at `thresholds` (x <= t goes left).
inline double cut_gain(const std::vector<double>& values, const std::vector<int>& labels,
                       const std::vector<double>& thresholds) {
  std::map<std::size_t, std::vector<int>> bins;
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::size_t b = 0;
    while (b < thresholds.size() && values[i] > thresholds[b]) ++b;
    bins[b].push_back(labels[i]);
  }
  double rem = 0.0;
  for (const auto& [b, ls] : bins)
    rem += static_cast<double>(ls.size()) / static_cast<double>(values.size()) * label_entropy(ls);
  return label_entropy(labels) - rem;
}

/// Best gain over every pair of distinct midpoints.
inline double best_pair_gain(const std::vector<double>& values, const std::vector<int>& labels) {
  std::vector<double> u = values;
  std::sort(u.begin(), u.end());
  u.erase(std::unique(u.begin(), u.end()), u.end());
  std::vector<double> mids;
  for (std::size_t i = 0; i + 1 < u.size(); ++i) mids.push_back((u[i] + u[i + 1]) / 2.0);
  double best = -1.0;
  for (std::size_t i = 0; i < mids.size(); ++i)
    for (std::size_t j = i + 1; j < mids.size(); ++j)
      best = std::max(best, cut_gain(values, labels, {mids[i], mids[j]}));
  return best;
}

}  // namespace oracle

#endif  // DXPOLICY_TESTS_ORACLE_HPP
