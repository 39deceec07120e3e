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

#ifndef DXPOLICY_ALGORITHMS_HPP
#define DXPOLICY_ALGORITHMS_HPP

#include <optional>
#include <string>
#include <vector>

#include "aostar.hpp"
#include "greedy.hpp"

namespace dxp {

enum class Method { ao, sp, es, ppp, nor, mcn, voi };

/// A learner by its short name: AO*, SP, ES, PPP, Nor, MC-N or VOI, each
/// optionally suffixed with "-L" for Laplace-corrected probabilities.
struct AlgorithmSpec {
  Method method = Method::ao;
  bool laplace = false;

  bool systematic() const {
    return method == Method::ao || method == Method::sp || method == Method::es ||
           method == Method::ppp;
  }

  std::string base_name() const {
    switch (method) {
      case Method::ao: return "AO*";
      case Method::sp: return "SP";
      case Method::es: return "ES";
      case Method::ppp: return "PPP";
      case Method::nor: return "Nor";
      case Method::mcn: return "MC-N";
      case Method::voi: return "VOI";
    }
    return "?";
  }

  std::string name() const { return base_name() + (laplace ? "-L" : ""); }

  static std::vector<std::string> all_names() {
    std::vector<std::string> out;
    for (bool l : {false, true})
      for (auto m : {Method::ao, Method::sp, Method::es, Method::ppp, Method::nor,
                     Method::mcn, Method::voi})
        out.push_back(AlgorithmSpec{m, l}.name());
    return out;
  }

  static AlgorithmSpec parse(const std::string& s) {
    std::string base = s;
    bool laplace = false;
    if (base.size() > 2 && base.compare(base.size() - 2, 2, "-L") == 0) {
      laplace = true;
      base.resize(base.size() - 2);
    }
    for (auto m : {Method::ao, Method::sp, Method::es, Method::ppp, Method::nor, Method::mcn,
                   Method::voi})
      if (AlgorithmSpec{m, false}.base_name() == base) return {m, laplace};
    if (base == "AO") return {Method::ao, laplace};
    std::string valid;
    for (const auto& n : all_names()) valid += (valid.empty() ? "" : ", ") + n;
    throw ConfigError("unknown algorithm '" + s + "' (valid: " + valid + ")");
  }

  friend bool operator==(const AlgorithmSpec&, const AlgorithmSpec&) = default;
};

struct LearnOptions {
  std::uint64_t byte_limit = kDefaultByteLimit;
  std::size_t max_iterations = AoConfig{}.max_iterations;
  std::uint64_t seed = 0;
  bool audit = false;
};

struct LearnOutcome {
  Policy policy;
  std::optional<SearchTrace> trace;  // systematic learners only
};

inline AoConfig ao_config(const AlgorithmSpec& spec, const LearnOptions& opt) {
  AoConfig cfg;
  cfg.laplace = spec.laplace;
  cfg.sp = spec.method == Method::sp;
  cfg.es = spec.method == Method::es;
  cfg.ppp = spec.method == Method::ppp;
  cfg.byte_limit = opt.byte_limit;
  cfg.max_iterations = opt.max_iterations;
  cfg.seed = opt.seed;
  cfg.audit = opt.audit;
  return cfg;
}

inline LearnOutcome learn(const AlgorithmSpec& spec, const Dataset& train, const CostModel& cm,
                          const LearnOptions& opt = {}) {
  if (spec.systematic()) {
    auto r = ao_star(train, cm, ao_config(spec, opt));
    return {std::move(r.policy), std::move(r.trace)};
  }
  GreedyConfig g;
  g.laplace = spec.laplace;
  switch (spec.method) {
    case Method::nor: return {grow_nor(train, cm, g), std::nullopt};
    case Method::mcn: return {grow_mcn(train, cm, g), std::nullopt};
    default: return {grow_voi(train, cm, g), std::nullopt};
  }
}

}  // namespace dxp

#endif  // DXPOLICY_ALGORITHMS_HPP
