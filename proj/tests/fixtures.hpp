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

#ifndef DXPOLICY_TESTS_FIXTURES_HPP
#define DXPOLICY_TESTS_FIXTURES_HPP

#include <string>
#include <vector>

#include "dxpolicy/dataset.hpp"
#include "dxpolicy/policy.hpp"

namespace fixture {

/// Dataset with attributes x0, x1, ... whose values are "0", "1", ...;
/// each row lists the attribute values followed by the class index.
inline dxp::Dataset table(const std::vector<std::size_t>& arities,
                          const std::vector<std::vector<unsigned>>& rows,
                          std::vector<std::string> classes = {"healthy", "sick"}) {
  dxp::Dataset d;
  for (std::size_t a = 0; a < arities.size(); ++a) {
    dxp::AttributeMeta m;
    m.name = "x" + std::to_string(a);
    for (std::size_t v = 0; v < arities[a]; ++v) m.values.push_back(std::to_string(v));
    d.attributes.push_back(std::move(m));
  }
  d.classes = std::move(classes);
  for (const auto& r : rows) {
    dxp::Example e;
    e.values.assign(r.begin(), r.end() - 1);
    e.label = r.back();
    d.examples.push_back(std::move(e));
  }
  d.validate();
  return d;
}

inline dxp::CostModel costs(std::vector<double> tests, double fp, double fn) {
  // classes (healthy, sick): fp = predict sick for a healthy patient
  return dxp::CostModel("fixture", std::move(tests), {{0.0, fn}, {fp, 0.0}});
}

inline dxp::PolicyNode test_node(std::string attr, std::vector<dxp::PolicyNode> kids) {
  dxp::PolicyNode n;
  n.test = std::move(attr);
  for (std::size_t v = 0; v < kids.size(); ++v) n.branches.push_back(std::to_string(v));
  n.children = std::move(kids);
  return n;
}

/// Two tests, three leaves: x0 = 0 diagnoses healthy, otherwise x1 decides.
inline dxp::Policy figure_one() {
  using dxp::PolicyNode;
  return {test_node("x0", {PolicyNode::leaf("healthy"),
                           test_node("x1", {PolicyNode::leaf("healthy"),
                                            PolicyNode::leaf("sick")})})};
}

}  // namespace fixture

#endif  // DXPOLICY_TESTS_FIXTURES_HPP
