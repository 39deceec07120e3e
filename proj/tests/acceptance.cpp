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

// Acceptance run: prints one PASS/FAIL line per criterion and exits nonzero
// if any criterion fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "cli.hpp"
#include "dxpolicy/algorithms.hpp"
#include "dxpolicy/eval.hpp"
#include "oracle.hpp"

using namespace dxp;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

double since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<oracle::Instance> instances() {
  std::mt19937_64 rng(20260101);
  std::vector<oracle::Instance> out;
  for (int i = 0; i < 200; ++i) out.push_back(oracle::random_instance(rng));
  return out;
}

bool complete(const PolicyNode& n, const Dataset& d) {
  if (n.is_leaf()) return d.class_index(n.diagnosis).has_value();
  const auto a = d.attribute_index(n.test);
  if (!a || n.children.size() != d.attributes[*a].arity()) return false;
  for (std::size_t v = 0; v < n.children.size(); ++v)
    if (n.branches[v] != d.attributes[*a].values[v] || !complete(n.children[v], d)) return false;
  return true;
}

struct Pima {
  Dataset data;
  std::vector<Replica> replicas;
  std::vector<CostModel> levels;
  CostConfig costs;
};

const Pima& pima() {
  static const Pima p = [] {
    Pima out;
    const std::string dir = DXPOLICY_DATA_DIR;
    out.data = discretize(preprocess(load_csv(dir + "/pima.csv", CsvSchema{"type", {"NA"}}), {}), 3);
    out.replicas = make_replicas(out.data, 5, 2.0 / 3.0, 606);
    out.costs = load_cost_config(dir + "/pima_costs.json");
    for (const auto& l : out.costs.level_names()) out.levels.push_back(out.costs.model(out.data, l));
    return out;
  }();
  return p;
}

const ExperimentResult& pima_tournament() {
  static const ExperimentResult r = [] {
    Experiment ex;
    ex.domain = "pima";
    ex.data = pima().data;
    ex.levels = pima().levels;
    ex.replicas = pima().replicas;
    for (const auto& n : AlgorithmSpec::all_names()) ex.algorithms.push_back(AlgorithmSpec::parse(n));
    ExperimentConfig cfg;
    cfg.seed = 31;
    return run_experiment(ex, cfg);
  }();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "dxpolicy");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  if (code != 0) std::fprintf(stderr, "%s", err.str().c_str());
  return code;
}

using Result = std::pair<bool, std::string>;

Result optimality() {
  const auto t0 = Clock::now();
  std::size_t bad = 0;
  double worst = 0.0;
  for (const auto& in : instances()) {
    const auto r = ao_star(in.data, in.costs);
    const double got = oracle::policy_value(r.policy, in.data, in.costs);
    const double want = oracle::dp_optimum(in.data, in.costs);
    worst = std::max(worst, std::abs(got - want));
    if (!(std::abs(got - want) <= 1e-9)) ++bad;
  }
  const double secs = since(t0);
  char buf[128];
  std::snprintf(buf, sizeof buf, "200 instances, %zu mismatches, max |diff| %.3g, %.2f s", bad, worst, secs);
  return {bad == 0 && secs < 10.0, buf};
}

Result sandwich() {
  std::size_t bad = 0, checks = 0;
  for (const auto& in : instances()) {
    const double opt = oracle::dp_optimum(in.data, in.costs);
    Estimator est(in.data, false);
    Graph g(est, in.costs);
    run_search(g, AoConfig{}, [&](const Graph&, const IterationRecord& r) {
      ++checks;
      if (!(r.v_opt <= opt + 1e-9 && opt <= r.v_real + 1e-9)) ++bad;
    });
  }
  return {bad == 0, std::to_string(checks) + " iterations, " + std::to_string(bad) + " violations"};
}

Result voi_pruning() {
  std::size_t bad = 0, nodes = 0;
  for (const auto& in : instances())
    for (bool laplace : {false, true}) {
      GreedyConfig cfg;
      cfg.laplace = laplace;
      const Policy p = grow_voi(in.data, in.costs, cfg);
      Estimator est(in.data, laplace);
      std::function<void(const PolicyNode&, const State&)> walk = [&](const PolicyNode& n,
                                                                       const State& s) {
        if (n.is_leaf()) return;
        const auto match = est.matching(s);
        const AttrIndex a = *in.data.attribute_index(n.test);
        ++nodes;
        Policy sub{n};
        annotate(sub, Estimator(in.data.subset(match), laplace), in.costs);
        const double la = one_step_la(est, in.costs, match, a);
        const double now = best_diagnosis(est.class_distribution(match), in.costs).cost;
        if (!(*sub.root.value <= la + 1e-9 && la < now)) ++bad;
        for (std::size_t v = 0; v < n.children.size(); ++v)
          if (!est.laplace() && est.matching(s.with(a, static_cast<ValueIndex>(v))).empty()) continue;
          else walk(n.children[v], s.with(a, static_cast<ValueIndex>(v)));
      };
      walk(p.root, State{});
    }
  return {bad == 0, std::to_string(nodes) + " internal nodes, " + std::to_string(bad) + " violations"};
}

Result trivial_policies() {
  std::size_t runs = 0;
  std::vector<std::string> bad;
  const auto& pm = pima();
  auto check = [&](const std::string& algo, const Dataset& train, const CostModel& cm,
                   const std::string& where) {
    ++runs;
    if (learn(AlgorithmSpec::parse(algo), train, cm).policy.num_internal() != 0)
      bad.push_back(algo + "@" + where);
  };
  for (const auto& rep : pm.replicas) {
    const Dataset train = pm.data.subset(rep.train);
    const CostModel zero("zero", pm.levels[0].test_cost, {{0, 0}, {0, 0}});
    for (const auto& a : AlgorithmSpec::all_names()) check(a, train, zero, "pima-mc0");
    const CostModel dear("dear", std::vector<double>(pm.data.num_attributes(), 120.5), pm.levels[2].mc);
    for (const char* a : {"VOI", "VOI-L", "MC-N", "MC-N-L"}) check(a, train, dear, "pima-dear");
  }
  for (const auto& in : instances()) {
    const CostModel zero("zero", in.costs.test_cost, {{0, 0}, {0, 0}});
    const auto counts = in.data.class_counts();
    for (const auto& a : AlgorithmSpec::all_names()) {
      if (a.rfind("ES", 0) == 0 && (counts[0] < 2 || counts[1] < 2)) continue;
      check(a, in.data, zero, "random-mc0");
    }
    double top = 0;
    for (const auto& row : in.costs.mc)
      for (double c : row) top = std::max(top, c);
    const CostModel dear("dear", std::vector<double>(in.costs.test_cost.size(), top + 0.01), in.costs.mc);
    for (const char* a : {"VOI", "VOI-L", "MC-N", "MC-N-L"}) check(a, in.data, dear, "random-dear");
  }
  std::string detail = std::to_string(runs) + " runs, " + std::to_string(bad.size()) + " with tests";
  if (!bad.empty()) detail += " (first: " + bad.front() + ")";
  return {bad.empty(), detail};
}

Result self_tie_and_chess() {
  std::size_t bad = 0, pairs = 0;
  const auto& pm = pima();
  const Dataset train = pm.data.subset(pm.replicas[0].train);
  const Dataset test = pm.data.subset(pm.replicas[0].test);
  for (const auto& lvl : pm.levels)
    for (const auto& a : AlgorithmSpec::all_names()) {
      const Policy p = learn(AlgorithmSpec::parse(a), train, lvl).policy;
      for (const Dataset* d : {&test, &train}) {
        ++pairs;
        const auto o = bdelta_cost(p, p, *d, lvl, 1000, pairs);
        if (o.verdict != Verdict::tie || o.low != 0.0 || o.high != 0.0) ++bad;
      }
    }

  // A real 7 x 5 x 20 grid on a small synthetic domain.
  std::mt19937_64 rng(5);
  Experiment ex;
  ex.domain = "grid";
  for (std::size_t a = 0; a < 3; ++a) ex.data.attributes.push_back({"x" + std::to_string(a), {"0", "1", "2"}, {}, {}});
  ex.data.classes = {"n", "p"};
  for (int i = 0; i < 60; ++i) {
    Example e;
    for (int a = 0; a < 3; ++a) e.values.push_back(static_cast<ValueIndex>(rng() % 3));
    e.label = (e.values[0] + e.values[1] + (rng() % 4 == 0)) % 2;
    ex.data.examples.push_back(e);
  }
  for (int l = 1; l <= 5; ++l)
    ex.levels.push_back(CostModel("l" + std::to_string(l), {1, 2, 3}, {{0, 8.0 * l}, {4.0 * l, 0}}));
  ex.replicas = make_replicas(ex.data, 20, 2.0 / 3.0, 1);
  for (const char* a : {"AO*", "SP", "ES", "PPP", "Nor", "MC-N", "VOI"}) ex.algorithms.push_back(AlgorithmSpec::parse(a));
  const auto res = run_experiment(ex, ExperimentConfig{});
  std::size_t grid_bad = 0;
  for (std::size_t i = 0; i < 7; ++i) {
    const auto w = res.table.overall(i);
    if (w.games() != 600 || w.tie_score() != 300.0) ++grid_bad;
  }
  return {bad == 0 && grid_bad == 0,
          std::to_string(pairs) + " self-comparisons, " + std::to_string(bad) +
              " not tie(0,0); grid algorithms off 600/300: " + std::to_string(grid_bad)};
}

Result pima_trend() {
  const auto& t = pima_tournament().table;
  std::size_t above = 0;
  std::string detail;
  for (const char* base : {"AO*", "SP", "ES", "PPP", "Nor", "MC-N", "VOI"}) {
    const auto& w = t.pair(std::string(base) + "-L", base);
    if (w.score() >= w.tie_score()) ++above;
    char buf[96];
    std::snprintf(buf, sizeof buf, "%s-L %.1f/%.1f ", base, w.score(), w.tie_score());
    detail += buf;
  }
  const auto& m = t.pair("MC-N-L", "Nor-L");
  char buf[128];
  std::snprintf(buf, sizeof buf, "| %zu/7 at or above tie-score | MC-N-L vs Nor-L %.1f/%.1f", above,
                m.score(), m.tie_score());
  detail += buf;
  return {above >= 5 && m.score() > m.tie_score(), detail};
}

Result performance() {
  const auto& res = pima_tournament();
  const auto& names = res.table.algorithms();
  double greedy = 0, systematic = 0;
  for (const auto& c : res.cells) {
    if (AlgorithmSpec::parse(names[c.algorithm]).systematic())
      systematic = std::max(systematic, c.seconds);
    else
      greedy = std::max(greedy, c.seconds);
  }
  // Completeness, including a search cut short by the memory limit.
  const auto& pm = pima();
  const Dataset train = pm.data.subset(pm.replicas[0].train);
  std::size_t incomplete = 0;
  for (const auto& a : AlgorithmSpec::all_names())
    for (const auto& lvl : pm.levels)
      if (!complete(learn(AlgorithmSpec::parse(a), train, lvl).policy.root, pm.data)) ++incomplete;
  LearnOptions tight;
  tight.byte_limit = 20000;
  bool exhausted = true;
  for (const char* a : {"AO*", "SP-L", "ES", "PPP-L"}) {
    const auto t0 = Clock::now();
    const auto r = learn(AlgorithmSpec::parse(a), train, pm.levels[2], tight);
    exhausted = exhausted && r.trace->memory_exhausted && since(t0) < 1000.0;
    if (!complete(r.policy.root, pm.data)) ++incomplete;
  }
  char buf[200];
  std::snprintf(buf, sizeof buf,
                "slowest greedy split %.4f s, slowest AO* variant %.3f s, incomplete policies %zu, "
                "memory-limited runs graceful: %s",
                greedy, systematic, incomplete, exhausted ? "yes" : "no");
  return {greedy < 0.1 && systematic < 1000.0 && incomplete == 0 && exhausted, buf};
}

Result determinism() {
  const fs::path dir = fs::temp_directory_path() / "dxpolicy_acceptance";
  fs::remove_all(dir);
  const std::string data = std::string(DXPOLICY_DATA_DIR);
  auto p = [&](const std::string& s) { return (dir / s).string(); };
  bool ok = cli({"prepare", "--data", data + "/pima.csv", "--class", "type", "--missing", "NA",
                 "--replicas", "5", "--seed", "606", "--out", p("prep")}) == 0;
  const std::vector<std::string> common{"tournament", "--data", p("prep/dataset.json"), "--split",
                                        p("prep/replicas.json"), "--costs", data + "/pima_costs.json"};
  auto first = common;
  first.insert(first.end(), {"--seed", "31", "--domain", "pima", "--out", p("run1")});
  auto again = common;
  again.insert(again.end(), {"--manifest", p("run1/seeds.json"), "--jobs", "2", "--out", p("run2")});
  ok = ok && cli(first) == 0 && cli(again) == 0;
  std::size_t same = 0;
  for (const char* f : {"report.csv", "summary.txt", "seeds.json"})
    if (ok && !slurp(p("run1/") + f).empty() && slurp(p("run1/") + f) == slurp(p("run2/") + f)) ++same;
  fs::remove_all(dir);
  return {ok && same == 3, std::to_string(same) + "/3 report files byte-identical after manifest rerun"};
}

Result sp_soundness() {
  std::size_t events = 0, bad = 0;
  LearnOptions opt;
  opt.audit = true;
  auto scan = [&](const SearchTrace& t) {
    for (const auto& e : t.prunes) {
      ++events;
      if (!(e.v_opt >= e.ci_low) || e.real_changed) ++bad;
    }
  };
  for (const auto& in : instances())
    for (const char* a : {"SP", "SP-L"}) scan(*learn(AlgorithmSpec::parse(a), in.data, in.costs, opt).trace);
  const auto& pm = pima();
  for (const auto& rep : pm.replicas)
    for (const auto& lvl : pm.levels)
      for (const char* a : {"SP", "SP-L"})
        scan(*learn(AlgorithmSpec::parse(a), pm.data.subset(rep.train), lvl, opt).trace);
  return {bad == 0 && events > 0, std::to_string(events) + " prune events, " + std::to_string(bad) + " violations"};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Result()>>> criteria{
      {"optimality oracle", optimality},
      {"admissibility sandwich", sandwich},
      {"VOI built-in pruning", voi_pruning},
      {"trivial-policy boundaries", trivial_policies},
      {"self-tie and chess arithmetic", self_tie_and_chess},
      {"pima Laplace and MC-N trends", pima_trend},
      {"performance envelope", performance},
      {"determinism", determinism},
      {"statistical-pruning soundness", sp_soundness},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Result r;
    try {
      r = criteria[i].second();
    } catch (const std::exception& e) {
      r = {false, std::string("exception: ") + e.what()};
    }
    if (!r.first) ++failed;
    std::printf("criterion %zu %s: %s (%s)\n", i + 1, r.first ? "PASS" : "FAIL", criteria[i].first,
                r.second.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
