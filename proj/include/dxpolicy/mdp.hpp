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

#ifndef DXPOLICY_MDP_HPP
#define DXPOLICY_MDP_HPP

#include <algorithm>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "common.hpp"
#include "dataset.hpp"

namespace dxp {

//==============================================================================
/// Set of measured (attribute, value) pairs, kept sorted by attribute so two
/// states with the same assignments compare equal whatever the test order.
class State {
 public:
  struct Assignment {
    AttrIndex attr;
    ValueIndex value;
    friend auto operator<=>(const Assignment&, const Assignment&) = default;
  };

  State() = default;
  State(std::initializer_list<Assignment> init) {
    for (const auto& a : init) *this = with(a.attr, a.value);
  }

  bool measured(AttrIndex a) const {
    auto it = find(a);
    return it != items_.end() && it->attr == a;
  }

  std::optional<ValueIndex> value_of(AttrIndex a) const {
    auto it = find(a);
    if (it != items_.end() && it->attr == a) return it->value;
    return std::nullopt;
  }

  /// s ∪ {a = v}. Re-measuring an attribute is a logic error.
  State with(AttrIndex a, ValueIndex v) const {
    if (measured(a)) throw std::logic_error("attribute already measured in state");
    State s = *this;
    s.items_.insert(s.find_mut(a), Assignment{a, v});
    return s;
  }

  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  std::span<const Assignment> assignments() const { return items_; }

  /// Byte-string key: equal iff the assignments are equal.
  std::string key() const {
    std::string k;
    k.reserve(items_.size() * 8);
    for (const auto& a : items_) {
      for (int s = 24; s >= 0; s -= 8) k.push_back(static_cast<char>((a.attr >> s) & 0xff));
      for (int s = 24; s >= 0; s -= 8) k.push_back(static_cast<char>((a.value >> s) & 0xff));
    }
    return k;
  }

  friend bool operator==(const State&, const State&) = default;

 private:
  std::vector<Assignment>::const_iterator find(AttrIndex a) const {
    return std::lower_bound(items_.begin(), items_.end(), a,
                            [](const Assignment& x, AttrIndex y) { return x.attr < y; });
  }
  std::vector<Assignment>::iterator find_mut(AttrIndex a) {
    return std::lower_bound(items_.begin(), items_.end(), a,
                            [](const Assignment& x, AttrIndex y) { return x.attr < y; });
  }

  std::vector<Assignment> items_;
};

inline std::string canonical_key(const State& s) { return s.key(); }

//==============================================================================

struct Action {
  enum class Kind { test, diagnose };
  Kind kind = Kind::diagnose;
  std::uint32_t index = 0;  // attribute for tests, class for diagnoses

  static Action test(AttrIndex a) { return {Kind::test, a}; }
  static Action diagnose(ClassIndex k) { return {Kind::diagnose, k}; }
  bool is_test() const { return kind == Kind::test; }

  friend bool operator==(const Action&, const Action&) = default;
};

struct ClassDistribution {
  std::vector<double> p;
};

struct Diagnosis {
  ClassIndex label = 0;
  double cost = 0.0;
};

//==============================================================================
// Estimation from counts. The search code works on counts directly; the
// Estimator wraps them for callers holding a State.

inline double estimate(std::size_t count, std::size_t total, std::size_t arity,
                       bool laplace) {
  if (laplace)
    return static_cast<double>(count + 1) / static_cast<double>(total + arity);
  if (total == 0) throw UndefinedProbability("no training example matches the state");
  return static_cast<double>(count) / static_cast<double>(total);
}

inline ClassDistribution class_distribution(std::span<const std::size_t> counts,
                                            bool laplace) {
  std::size_t total = 0;
  for (auto c : counts) total += c;
  ClassDistribution d;
  d.p.reserve(counts.size());
  for (auto c : counts) d.p.push_back(estimate(c, total, counts.size(), laplace));
  return d;
}

inline double diagnosis_cost(const ClassDistribution& d, const CostModel& cm,
                             ClassIndex k) {
  double c = 0.0;
  for (std::size_t y = 0; y < d.p.size(); ++y) c += d.p[y] * cm.mc[k][y];
  return c;
}

/// argmin_k C(s, f_k); ties go to the lowest class index.
inline Diagnosis best_diagnosis(const ClassDistribution& d, const CostModel& cm) {
  Diagnosis best{0, diagnosis_cost(d, cm, 0)};
  for (ClassIndex k = 1; k < d.p.size(); ++k) {
    const double c = diagnosis_cost(d, cm, k);
    if (c < best.cost) best = {k, c};
  }
  return best;
}

/// argmax_y P(y|s); ties go to the lowest class index.
inline ClassIndex most_likely_class(const ClassDistribution& d) {
  return static_cast<ClassIndex>(std::max_element(d.p.begin(), d.p.end()) - d.p.begin());
}

//==============================================================================
/// Probability estimates for MDP states, read off the training examples that
/// match each state (maximum likelihood, optionally add-one Laplace).
class Estimator {
 public:
  Estimator(const Dataset& train, bool laplace) : data_(&train), laplace_(laplace) {}

  const Dataset& data() const { return *data_; }
  bool laplace() const { return laplace_; }

  std::vector<ExampleIndex> all() const {
    std::vector<ExampleIndex> idx(data_->size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<ExampleIndex>(i);
    return idx;
  }

  std::vector<ExampleIndex> matching(const State& s) const {
    std::vector<ExampleIndex> out;
    for (std::size_t i = 0; i < data_->size(); ++i)
      if (matches(data_->examples[i], s)) out.push_back(static_cast<ExampleIndex>(i));
    return out;
  }

  /// Subset of `parent` with attribute a equal to v.
  std::vector<ExampleIndex> filter(std::span<const ExampleIndex> parent, AttrIndex a,
                                   ValueIndex v) const {
    std::vector<ExampleIndex> out;
    for (auto i : parent)
      if (data_->examples[i].values[a] == v) out.push_back(i);
    return out;
  }

  std::vector<std::size_t> class_counts(std::span<const ExampleIndex> match) const {
    std::vector<std::size_t> c(data_->num_classes(), 0);
    for (auto i : match) ++c[data_->examples[i].label];
    return c;
  }

  std::vector<std::size_t> value_counts(std::span<const ExampleIndex> match,
                                        AttrIndex a) const {
    std::vector<std::size_t> c(data_->attributes[a].arity(), 0);
    for (auto i : match) ++c[data_->examples[i].values[a]];
    return c;
  }

  ClassDistribution class_distribution(std::span<const ExampleIndex> match) const {
    return dxp::class_distribution(class_counts(match), laplace_);
  }

  /// P(x_a = v | s) for every v, from the examples matching s.
  std::vector<double> outcome_distribution(std::span<const ExampleIndex> match,
                                           AttrIndex a) const {
    auto counts = value_counts(match, a);
    std::vector<double> p;
    for (auto c : counts) p.push_back(estimate(c, match.size(), counts.size(), laplace_));
    return p;
  }

  double p_outcome(const State& s, AttrIndex a, ValueIndex v) const {
    if (s.measured(a)) throw std::logic_error("p_outcome on a measured attribute");
    auto m = matching(s);
    return estimate(value_counts(m, a)[v], m.size(), data_->attributes[a].arity(), laplace_);
  }

  double p_class(const State& s, ClassIndex y) const {
    auto m = matching(s);
    return estimate(class_counts(m)[y], m.size(), data_->num_classes(), laplace_);
  }

  double diagnosis_cost(const CostModel& cm, const State& s, ClassIndex k) const {
    return dxp::diagnosis_cost(class_distribution(matching(s)), cm, k);
  }

  Diagnosis best_diagnosis(const CostModel& cm, const State& s) const {
    return dxp::best_diagnosis(class_distribution(matching(s)), cm);
  }

  static bool matches(const Example& e, const State& s) {
    for (const auto& a : s.assignments())
      if (e.values[a.attr] != a.value) return false;
    return true;
  }

 private:
  const Dataset* data_;
  bool laplace_;
};

}  // namespace dxp

#endif  // DXPOLICY_MDP_HPP
