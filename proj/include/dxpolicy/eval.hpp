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

#ifndef DXPOLICY_EVAL_HPP
#define DXPOLICY_EVAL_HPP

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <exception>
#include <map>
#include <mutex>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "algorithms.hpp"
#include "common.hpp"
#include "dataset.hpp"
#include "policy.hpp"

namespace dxp {

enum class Verdict { win, tie, loss };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::win: return "win";
    case Verdict::tie: return "tie";
    case Verdict::loss: return "loss";
  }
  return "?";
}

/// Result of comparing policy 1 against policy 2: a confidence interval for
/// mean(cost1 - cost2). Below zero means policy 1 is cheaper.
struct Outcome {
  Verdict verdict = Verdict::tie;
  double low = 0.0;
  double high = 0.0;

  static Outcome classify(double low, double high) {
    Verdict v = Verdict::tie;
    if (high < 0.0)
      v = Verdict::win;
    else if (low > 0.0)
      v = Verdict::loss;
    return {v, low, high};
  }

  Outcome mirrored() const { return classify(-high, -low); }
};

/// Bootstrap comparison on paired per-example costs. Resamples example
/// indices (so swapping the two cost vectors negates the interval exactly),
/// sorts the B replicate means and trims floor(0.025 B) from each tail.
inline Outcome bdelta_from_costs(std::span<const double> cost1, std::span<const double> cost2,
                                 std::size_t bootstrap, std::uint64_t seed) {
  if (cost1.empty()) throw EmptyDatasetError("bootstrap comparison on an empty test set");
  if (cost1.size() != cost2.size()) throw std::invalid_argument("cost vectors differ in size");
  if (bootstrap == 0) throw ConfigError("bootstrap needs at least one replicate");
  const std::size_t m = cost1.size();
  std::vector<double> delta(m);
  for (std::size_t i = 0; i < m; ++i) delta[i] = cost1[i] - cost2[i];
  Rng rng(seed);
  std::vector<double> means(bootstrap);
  for (auto& mean : means) {
    double sum = 0.0;
    for (std::size_t i = 0; i < m; ++i) sum += delta[uniform_below(rng, m)];
    mean = sum / static_cast<double>(m);
  }
  std::sort(means.begin(), means.end());
  const auto trim = static_cast<std::size_t>(0.025 * static_cast<double>(bootstrap));
  return Outcome::classify(means[trim], means[bootstrap - 1 - trim]);
}

inline Outcome bdelta_cost(const Policy& p1, const Policy& p2, const Dataset& test,
                           const CostModel& cm, std::size_t bootstrap = 1000,
                           std::uint64_t seed = 0) {
  if (test.examples.empty()) throw EmptyDatasetError("bootstrap comparison on an empty test set");
  const auto c1 = example_costs(p1, test, cm);
  const auto c2 = example_costs(p2, test, cm);
  return bdelta_from_costs(c1, c2, bootstrap, seed);
}

//==============================================================================
// Chess scoring

struct WinTieLoss {
  std::size_t wins = 0;
  std::size_t ties = 0;
  std::size_t losses = 0;

  std::size_t games() const { return wins + ties + losses; }
  double score() const { return static_cast<double>(wins) + 0.5 * static_cast<double>(ties); }
  double tie_score() const { return 0.5 * static_cast<double>(games()); }

  void add(Verdict v) {
    switch (v) {
      case Verdict::win: ++wins; break;
      case Verdict::tie: ++ties; break;
      case Verdict::loss: ++losses; break;
    }
  }

  WinTieLoss& operator+=(const WinTieLoss& o) {
    wins += o.wins;
    ties += o.ties;
    losses += o.losses;
    return *this;
  }
};

/// wins + 0.5 ties.
inline double chess_score(std::span<const Outcome> results) {
  WinTieLoss w;
  for (const auto& r : results) w.add(r.verdict);
  return w.score();
}

/// Head-to-head records between every pair of algorithms on one domain.
class ScoreTable {
 public:
  ScoreTable() = default;
  explicit ScoreTable(std::vector<std::string> algorithms)
      : names_(std::move(algorithms)),
        grid_(names_.size() * names_.size()) {}

  const std::vector<std::string>& algorithms() const { return names_; }

  /// Records `o` for algorithm i against j and the mirrored result for j.
  void record(std::size_t i, std::size_t j, const Outcome& o) {
    at(i, j).add(o.verdict);
    at(j, i).add(o.mirrored().verdict);
  }

  const WinTieLoss& pair(std::size_t i, std::size_t j) const {
    return grid_[i * names_.size() + j];
  }

  std::optional<std::size_t> index(const std::string& name) const {
    for (std::size_t i = 0; i < names_.size(); ++i)
      if (names_[i] == name) return i;
    return std::nullopt;
  }

  const WinTieLoss& pair(const std::string& a, const std::string& b) const {
    return pair(index(a).value(), index(b).value());
  }

  /// Cumulative record of `i` against every other algorithm.
  WinTieLoss overall(std::size_t i) const {
    WinTieLoss w;
    for (std::size_t j = 0; j < names_.size(); ++j)
      if (j != i) w += pair(i, j);
    return w;
  }

  /// One row per ordered pair, then one "*" row per algorithm.
  std::string to_csv(const std::string& domain) const {
    std::string out = "domain,algorithm,opponent,wins,ties,losses,score,tie_score\n";
    auto row = [&](const std::string& a, const std::string& b, const WinTieLoss& w) {
      char buf[128];
      std::snprintf(buf, sizeof buf, ",%zu,%zu,%zu,%.1f,%.1f\n", w.wins, w.ties, w.losses,
                    w.score(), w.tie_score());
      out += domain + "," + a + "," + b + buf;
    };
    for (std::size_t i = 0; i < names_.size(); ++i)
      for (std::size_t j = 0; j < names_.size(); ++j)
        if (i != j) row(names_[i], names_[j], pair(i, j));
    for (std::size_t i = 0; i < names_.size(); ++i) row(names_[i], "*", overall(i));
    return out;
  }

  std::string summary(const std::string& domain) const {
    std::string out = "domain " + domain + "\n";
    std::size_t top = 0;
    for (std::size_t i = 0; i < names_.size(); ++i) {
      const auto w = overall(i);
      char buf[160];
      std::snprintf(buf, sizeof buf, "  %-8s score %7.1f / tie-score %7.1f  (W %zu  T %zu  L %zu)%s\n",
                    names_[i].c_str(), w.score(), w.tie_score(), w.wins, w.ties, w.losses,
                    w.score() < w.tie_score() ? "  below tie-score" : "");
      out += buf;
      if (w.score() > overall(top).score()) top = i;
    }
    if (!names_.empty()) out += "  top algorithm: " + names_[top] + "\n";
    return out;
  }

 private:
  WinTieLoss& at(std::size_t i, std::size_t j) { return grid_[i * names_.size() + j]; }

  std::vector<std::string> names_;
  std::vector<WinTieLoss> grid_;
};

//==============================================================================
// Experiment grid

struct Experiment {
  std::string domain;
  Dataset data;
  std::vector<CostModel> levels;
  std::vector<Replica> replicas;
  std::vector<AlgorithmSpec> algorithms;
};

struct ExperimentConfig {
  std::size_t bootstrap = 1000;
  std::uint64_t seed = 0;
  unsigned jobs = 1;
  LearnOptions learn;
};

struct CellResult {
  std::size_t level = 0;
  std::size_t replica = 0;
  std::size_t algorithm = 0;
  double v_test = 0.0;
  double seconds = 0.0;
  bool memory_exhausted = false;
};

struct ExperimentResult {
  ScoreTable table;
  std::vector<CellResult> cells;
  nlohmann::json seeds;

  /// Tournament table followed by per-cell test values. Timing is excluded so
  /// reruns compare byte for byte.
  std::string report_csv(const std::string& domain) const {
    std::string out = table.to_csv(domain);
    out += "\nlevel,replica,algorithm,v_test,memory_exhausted\n";
    for (const auto& c : cells) {
      char buf[64];
      std::snprintf(buf, sizeof buf, ",%.9g,%d\n", c.v_test, c.memory_exhausted ? 1 : 0);
      out += std::to_string(c.level) + "," + std::to_string(c.replica) + "," +
             table.algorithms()[c.algorithm] + buf;
    }
    return out;
  }
};

inline std::uint64_t learn_seed(std::uint64_t master, std::size_t level, std::size_t replica) {
  return derive_seed(master, {2, level, replica});
}

inline std::uint64_t pair_seed(std::uint64_t master, std::size_t level, std::size_t replica,
                               std::size_t i, std::size_t j) {
  return derive_seed(master, {1, level, replica, i, j});
}

/// Trains every algorithm on every (cost level, replica) training split,
/// compares each unordered pair once per cell on the test split and credits
/// the mirrored result to the opponent. Training runs on `jobs` threads;
/// results do not depend on the thread count.
inline ExperimentResult run_experiment(const Experiment& ex, const ExperimentConfig& cfg) {
  if (ex.algorithms.size() < 2) throw ConfigError("a tournament needs at least two algorithms");
  const std::size_t nl = ex.levels.size(), nr = ex.replicas.size(), na = ex.algorithms.size();
  std::vector<std::string> names;
  for (const auto& a : ex.algorithms) names.push_back(a.name());

  std::vector<Dataset> train(nr), test(nr);
  for (std::size_t r = 0; r < nr; ++r) {
    train[r] = ex.data.subset(ex.replicas[r].train);
    test[r] = ex.data.subset(ex.replicas[r].test);
  }

  const std::size_t n_jobs = nl * nr * na;
  std::vector<std::vector<double>> costs(n_jobs);
  std::vector<CellResult> cells(n_jobs);
  std::vector<std::exception_ptr> errors(n_jobs);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t job = next++; job < n_jobs; job = next++) {
      const std::size_t l = job / (nr * na), r = (job / na) % nr, a = job % na;
      CellResult& cell = cells[job];
      cell.level = l;
      cell.replica = r;
      cell.algorithm = a;
      try {
        LearnOptions opt = cfg.learn;
        opt.seed = learn_seed(cfg.seed, l, r);
        const auto t0 = std::chrono::steady_clock::now();
        auto learned = learn(ex.algorithms[a], train[r], ex.levels[l], opt);
        cell.seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        cell.memory_exhausted = learned.trace && learned.trace->memory_exhausted;
        costs[job] = example_costs(learned.policy, test[r], ex.levels[l]);
        double sum = 0.0;
        for (double c : costs[job]) sum += c;
        cell.v_test = sum / static_cast<double>(costs[job].size());
      } catch (...) {
        errors[job] = std::current_exception();
      }
    }
  };
  const unsigned threads = std::max(1u, cfg.jobs);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (std::size_t job = 0; job < n_jobs; ++job) {
    if (!errors[job]) continue;
    const auto& c = cells[job];
    try {
      std::rethrow_exception(errors[job]);
    } catch (const std::exception& e) {
      throw Error("cell level=" + ex.levels[c.level].name + " replica=" +
                  std::to_string(ex.replicas[c.replica].id) + " algorithm=" +
                  names[c.algorithm] + ": " + e.what());
    }
  }

  ExperimentResult out{ScoreTable(names), cells, {}};
  nlohmann::json seed_cells = nlohmann::json::array();
  for (std::size_t l = 0; l < nl; ++l)
    for (std::size_t r = 0; r < nr; ++r) {
      nlohmann::json pairs = nlohmann::json::array();
      for (std::size_t i = 0; i < na; ++i)
        for (std::size_t j = i + 1; j < na; ++j) {
          const auto seed = pair_seed(cfg.seed, l, r, i, j);
          const auto o = bdelta_from_costs(costs[(l * nr + r) * na + i],
                                           costs[(l * nr + r) * na + j], cfg.bootstrap, seed);
          out.table.record(i, j, o);
          pairs.push_back({{"a", names[i]}, {"b", names[j]}, {"seed", seed}});
        }
      seed_cells.push_back({{"level", ex.levels[l].name},
                            {"replica", ex.replicas[r].id},
                            {"learn_seed", learn_seed(cfg.seed, l, r)},
                            {"pairs", std::move(pairs)}});
    }

  nlohmann::json levels = nlohmann::json::array();
  for (const auto& l : ex.levels) levels.push_back(l.name);
  nlohmann::json reps = nlohmann::json::array();
  for (const auto& r : ex.replicas) reps.push_back({{"id", r.id}, {"seed", r.seed}});
  out.seeds = {{"format", "dxpolicy-seeds"},
               {"version", 1},
               {"domain", ex.domain},
               {"master_seed", cfg.seed},
               {"bootstrap", cfg.bootstrap},
               {"byte_limit", cfg.learn.byte_limit},
               {"algorithms", names},
               {"levels", levels},
               {"replicas", reps},
               {"cells", seed_cells}};
  return out;
}

}  // namespace dxp

#endif  // DXPOLICY_EVAL_HPP
