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

#ifndef DXPOLICY_TOOLS_CLI_HPP
#define DXPOLICY_TOOLS_CLI_HPP

#include <cstdio>
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dxpolicy/algorithms.hpp"
#include "dxpolicy/dataset.hpp"
#include "dxpolicy/eval.hpp"
#include "dxpolicy/policy.hpp"

namespace dxp::cli {

namespace fs = std::filesystem;

struct SplitArgs {
  std::string data;
  std::string split;
  std::size_t replica = 0;
};

inline void add_split_flags(CLI::App* cmd, SplitArgs& a) {
  cmd->add_option("--data", a.data, "Prepared dataset file (dataset.json)")->required();
  cmd->add_option("--split", a.split, "Replica manifest (replicas.json); omit to use all examples");
  cmd->add_option("--replica", a.replica, "Replica id within the manifest");
}

/// (train, test) for the chosen replica, or (all, all) without a manifest.
inline std::pair<Dataset, Dataset> load_split(const SplitArgs& a) {
  Dataset d = dataset_from_json(read_json_file(a.data));
  if (a.split.empty()) return {d, d};
  for (const auto& r : replicas_from_json(read_json_file(a.split)))
    if (r.id == a.replica) return {d.subset(r.train), d.subset(r.test)};
  throw ConfigError("replica " + std::to_string(a.replica) + " not in '" + a.split + "'");
}

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", x);
  return buf;
}

/// Entry point shared by the dxpolicy binary and the tests.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Learn and evaluate cost-sensitive diagnostic policies"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  // prepare
  struct {
    std::string csv, class_col, out;
    std::vector<std::string> missing{"?", ""}, merge, discrete;
    std::size_t levels = 3, replicas = 20;
    double train_frac = 2.0 / 3.0;
    std::uint64_t seed = 0;
  } prep;
  auto* prepare = app.add_subcommand("prepare", "Preprocess a CSV file and generate replicas");
  prepare->add_option("--data", prep.csv, "Input CSV with a header row")->required();
  prepare->add_option("--class", prep.class_col, "Name of the class column")->required();
  prepare->add_option("--missing", prep.missing, "Tokens marking missing values")
      ->expected(1, -1)->delimiter(',');
  prepare->add_option("--merge", prep.merge, "Class relabelling FROM=TO")->delimiter(',');
  prepare->add_option("--discrete", prep.discrete, "Numeric columns to keep as categories")
      ->delimiter(',');
  prepare->add_option("--levels", prep.levels, "Bins per real-valued attribute");
  prepare->add_option("--replicas", prep.replicas, "Number of train/test replicas");
  prepare->add_option("--train-frac", prep.train_frac, "Training fraction per replica");
  prepare->add_option("--seed", prep.seed, "Master seed for the replicas");
  prepare->add_option("--out", prep.out, "Output directory")->required();

  // learn
  SplitArgs learn_split;
  struct {
    std::string costs, level, algo, out;
    std::uint64_t seed = 0, mem = kDefaultByteLimit;
  } lrn;
  auto* learn_cmd = app.add_subcommand("learn", "Learn one policy on a training split");
  add_split_flags(learn_cmd, learn_split);
  learn_cmd->add_option("--costs", lrn.costs, "Cost configuration (JSON)")->required();
  learn_cmd->add_option("--cost-level", lrn.level, "Misdiagnosis cost level name")->required();
  learn_cmd->add_option("--algo", lrn.algo, "Algorithm, e.g. AO*, SP-L, VOI")->required();
  learn_cmd->add_option("--seed", lrn.seed, "Seed for the early-stopping split");
  learn_cmd->add_option("--mem-limit", lrn.mem, "Accounted AND/OR graph byte limit");
  learn_cmd->add_option("--out", lrn.out, "Output directory")->required();

  // eval
  SplitArgs eval_split;
  struct {
    std::string costs, level, policy;
  } ev;
  auto* eval_cmd = app.add_subcommand("eval", "Mean total cost of a policy on a test split");
  add_split_flags(eval_cmd, eval_split);
  eval_cmd->add_option("--costs", ev.costs)->required();
  eval_cmd->add_option("--cost-level", ev.level)->required();
  eval_cmd->add_option("--policy", ev.policy)->required();

  // compare
  SplitArgs cmp_split;
  struct {
    std::string costs, level, policy, against;
    std::size_t bootstrap = 1000;
    std::uint64_t seed = 0;
  } cmp;
  auto* compare = app.add_subcommand("compare", "Bootstrap comparison of two policies");
  add_split_flags(compare, cmp_split);
  compare->add_option("--costs", cmp.costs)->required();
  compare->add_option("--cost-level", cmp.level)->required();
  compare->add_option("--policy", cmp.policy, "First policy")->required();
  compare->add_option("--against", cmp.against, "Second policy")->required();
  compare->add_option("--bootstrap", cmp.bootstrap, "Bootstrap replicates");
  compare->add_option("--seed", cmp.seed);

  // tournament
  struct {
    std::string data, split, costs, out, manifest, domain = "domain";
    std::vector<std::string> levels, algos;
    std::size_t replicas = 0, bootstrap = 1000, max_iter = AoConfig{}.max_iterations;
    std::uint64_t seed = 0, mem = kDefaultByteLimit;
    unsigned jobs = 1;
  } tour;
  auto* tournament = app.add_subcommand("tournament", "Full algorithm x level x replica grid");
  tournament->add_option("--data", tour.data)->required();
  tournament->add_option("--split", tour.split, "Replica manifest")->required();
  tournament->add_option("--costs", tour.costs)->required();
  tournament->add_option("--cost-level", tour.levels, "Levels to use (default: all)")
      ->delimiter(',');
  tournament->add_option("--algo", tour.algos, "Algorithms (default: all fourteen)")
      ->delimiter(',');
  tournament->add_option("--replicas", tour.replicas, "Use the first n replicas (0 = all)");
  tournament->add_option("--seed", tour.seed, "Master seed");
  tournament->add_option("--bootstrap", tour.bootstrap);
  tournament->add_option("--mem-limit", tour.mem);
  tournament->add_option("--max-iterations", tour.max_iter);
  tournament->add_option("--jobs", tour.jobs, "Parallel training jobs");
  tournament->add_option("--manifest", tour.manifest,
                         "Seed manifest from an earlier run; overrides seeds and selections");
  tournament->add_option("--domain", tour.domain, "Domain label for the report");
  tournament->add_option("--out", tour.out, "Output directory")->required();

  // export-dot
  struct {
    std::string policy, out;
  } dot;
  auto* export_dot = app.add_subcommand("export-dot", "Render a policy file as Graphviz DOT");
  export_dot->add_option("--policy", dot.policy)->required();
  export_dot->add_option("--out", dot.out, "Output file (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (*prepare) {
      std::map<std::string, std::string> merge;
      for (const auto& m : prep.merge) {
        const auto eq = m.find('=');
        if (eq == std::string::npos) throw ConfigError("--merge expects FROM=TO, got '" + m + "'");
        merge[m.substr(0, eq)] = m.substr(eq + 1);
      }
      auto raw = load_csv(prep.csv, CsvSchema{prep.class_col, prep.missing});
      const std::size_t before = raw.rows.size();
      raw = preprocess(raw, merge);
      const Dataset d = discretize(raw, prep.levels,
                                   std::set<std::string>(prep.discrete.begin(), prep.discrete.end()));
      const auto reps = make_replicas(d, prep.replicas, prep.train_frac, prep.seed);
      fs::create_directories(prep.out);
      write_text_file((fs::path(prep.out) / "dataset.json").string(), dataset_to_json(d).dump(1) + "\n");
      write_text_file((fs::path(prep.out) / "replicas.json").string(),
                      replicas_to_json(reps, prep.seed, prep.train_frac).dump(1) + "\n");
      out << "examples " << d.size() << " (dropped " << before - d.size() << " with missing values)\n"
          << "attributes " << d.num_attributes() << ", classes " << d.num_classes() << "\n"
          << "replicas " << reps.size() << ", train size " << reps.front().train.size() << "\n";
      return 0;
    }

    if (*learn_cmd) {
      const auto spec = AlgorithmSpec::parse(lrn.algo);
      auto [train, test] = load_split(learn_split);
      const auto cm = load_cost_config(lrn.costs).model(train, lrn.level);
      LearnOptions opt;
      opt.byte_limit = lrn.mem;
      opt.seed = lrn.seed;
      auto res = learn(spec, train, cm, opt);
      fs::create_directories(lrn.out);
      write_text_file((fs::path(lrn.out) / "policy.json").string(), serialize(res.policy));
      out << spec.name() << ": " << res.policy.num_internal() << " tests, "
          << res.policy.num_leaves() << " leaves, depth " << res.policy.depth() << "\n";
      if (res.trace) {
        write_text_file((fs::path(lrn.out) / "trace.jsonl").string(), res.trace->to_jsonl());
        out << "expansions " << res.trace->expansions << ", graph " << res.trace->final_stats.or_nodes
            << " OR / " << res.trace->final_stats.and_nodes << " AND nodes, "
            << res.trace->final_stats.bytes_used << " bytes"
            << (res.trace->memory_exhausted ? " (memory limit reached)" : "") << "\n";
      }
      return 0;
    }

    if (*eval_cmd) {
      auto [train, test] = load_split(eval_split);
      const auto cm = load_cost_config(ev.costs).model(test, ev.level);
      const Policy p = deserialize(read_text(ev.policy));
      out << "v_test " << fmt(v_test(p, test, cm)) << "\n";
      return 0;
    }

    if (*compare) {
      auto [train, test] = load_split(cmp_split);
      const auto cm = load_cost_config(cmp.costs).model(test, cmp.level);
      const Policy a = deserialize(read_text(cmp.policy));
      const Policy b = deserialize(read_text(cmp.against));
      const auto o = bdelta_cost(a, b, test, cm, cmp.bootstrap, cmp.seed);
      out << to_string(o.verdict) << " ci [" << fmt(o.low) << ", " << fmt(o.high) << "]\n";
      return 0;
    }

    if (*tournament) {
      Experiment ex;
      ex.data = dataset_from_json(read_json_file(tour.data));
      ex.domain = tour.domain;
      const auto costs = load_cost_config(tour.costs);
      auto reps = replicas_from_json(read_json_file(tour.split));
      ExperimentConfig cfg;
      cfg.seed = tour.seed;
      cfg.bootstrap = tour.bootstrap;
      cfg.jobs = tour.jobs;
      cfg.learn.byte_limit = tour.mem;
      cfg.learn.max_iterations = tour.max_iter;
      std::vector<std::string> level_names = tour.levels;
      std::vector<std::string> algos = tour.algos;
      std::vector<std::size_t> replica_ids;
      if (!tour.manifest.empty()) {
        const auto m = read_json_file(tour.manifest);
        if (m.value("format", "") != "dxpolicy-seeds") throw DecodeError("not a seed manifest");
        if (m.value("version", 0) != 1)
          throw DecodeError("unsupported seed manifest version " + m.value("version", nlohmann::json()).dump());
        cfg.seed = m.at("master_seed").get<std::uint64_t>();
        cfg.bootstrap = m.at("bootstrap").get<std::size_t>();
        cfg.learn.byte_limit = m.at("byte_limit").get<std::uint64_t>();
        ex.domain = m.at("domain").get<std::string>();
        algos = m.at("algorithms").get<std::vector<std::string>>();
        level_names = m.at("levels").get<std::vector<std::string>>();
        for (const auto& r : m.at("replicas")) replica_ids.push_back(r.at("id").get<std::size_t>());
      }
      if (level_names.empty()) level_names = costs.level_names();
      if (algos.empty()) algos = AlgorithmSpec::all_names();
      for (const auto& l : level_names) ex.levels.push_back(costs.model(ex.data, l));
      for (const auto& a : algos) ex.algorithms.push_back(AlgorithmSpec::parse(a));
      if (!replica_ids.empty()) {
        for (auto id : replica_ids) {
          auto it = std::find_if(reps.begin(), reps.end(), [&](const Replica& r) { return r.id == id; });
          if (it == reps.end()) throw ConfigError("manifest replica " + std::to_string(id) + " missing");
          ex.replicas.push_back(*it);
        }
      } else {
        const std::size_t n = tour.replicas == 0 ? reps.size() : std::min(tour.replicas, reps.size());
        ex.replicas.assign(reps.begin(), reps.begin() + static_cast<std::ptrdiff_t>(n));
      }
      const auto res = run_experiment(ex, cfg);
      fs::create_directories(tour.out);
      write_text_file((fs::path(tour.out) / "report.csv").string(), res.report_csv(ex.domain));
      write_text_file((fs::path(tour.out) / "summary.txt").string(), res.table.summary(ex.domain));
      write_text_file((fs::path(tour.out) / "seeds.json").string(), res.seeds.dump(1) + "\n");
      out << res.table.summary(ex.domain);
      return 0;
    }

    if (*export_dot) {
      const auto text = to_dot(deserialize(read_text(dot.policy)));
      if (dot.out.empty())
        out << text;
      else
        write_text_file(dot.out, text);
      return 0;
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace dxp::cli

#endif  // DXPOLICY_TOOLS_CLI_HPP
