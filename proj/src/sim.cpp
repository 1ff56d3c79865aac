#include "avgmdp/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <unordered_map>

#include <json.hpp>

#include "avgmdp/lowerbound.hpp"
#include "avgmdp/rng.hpp"

namespace avgmdp {

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string fnv1a64_hex(const std::string& text) {
  std::uint64_t h = fnv1a64(text);
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

Trace simulate(const Mdp& m, Learner& learner, long horizon, std::uint64_t master_seed,
               std::uint32_t run_seed, int start_state, const std::string& config_canonical) {
  if (horizon < 0) throw std::runtime_error("sim: negative horizon");
  if (start_state < 0 || start_state >= m.num_states()) {
    throw std::runtime_error("sim: start state out of range");
  }
  Trace tr;
  tr.model_name = m.name;
  tr.learner_name = learner.name();
  tr.config_hash = fnv1a64_hex(config_canonical);
  tr.master_seed = master_seed;
  tr.run_seed = run_seed;
  tr.start_state = start_state;
  tr.state.reserve(horizon);
  tr.action.reserve(horizon);
  tr.reward.reserve(horizon);
  tr.next_state.reserve(horizon);
  tr.step_class.reserve(horizon);
  tr.phase_id.reserve(horizon);

  RngStream reward_rng(master_seed, run_seed, RngPurpose::Reward);
  RngStream trans_rng(master_seed, run_seed, RngPurpose::Transition);
  learner.reset(master_seed, run_seed, make_shape(m));

  std::vector<std::vector<double>> rows(m.num_pairs());
  for (int p = 0; p < m.num_pairs(); ++p) {
    rows[p].assign(m.kernel[p].data(), m.kernel[p].data() + m.num_states());
  }

  std::unordered_map<std::string, std::uint16_t> phase_ids;
  int s = start_state;
  for (long t = 1; t <= horizon; ++t) {
    int a = learner.act(s);
    if (a < 0 || a >= m.num_actions(s)) {
      throw std::runtime_error("sim: learner chose an out-of-range action at step " +
                               std::to_string(t) + " (IllegalAction)");
    }
    int p = m.pair_index(s, a);
    bool win = reward_rng.bernoulli(m.reward[p]);
    int s2 = trans_rng.sample_index(rows[p]);
    learner.observe(s, a, win ? 1.0 : 0.0, s2);

    std::string phase = learner.last_phase_name();
    auto it = phase_ids.find(phase);
    std::uint16_t pid;
    if (it == phase_ids.end()) {
      pid = static_cast<std::uint16_t>(tr.phase_names.size());
      phase_ids.emplace(phase, pid);
      tr.phase_names.push_back(phase);
    } else {
      pid = it->second;
    }
    tr.state.push_back(s);
    tr.action.push_back(a);
    tr.reward.push_back(win ? 1 : 0);
    tr.next_state.push_back(s2);
    tr.step_class.push_back(static_cast<std::uint8_t>(learner.last_step_class()));
    tr.phase_id.push_back(pid);
    tr.cumulative_reward += win ? 1.0 : 0.0;
    s = s2;
  }
  tr.panic_count = learner.panic_count();
  tr.explore_steps = learner.explore_steps();
  tr.coexplore_steps = learner.coexplore_steps();
  return tr;
}

void write_trace_csv(const Trace& trace, const Mdp& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("sim: cannot open trace file " + path);
  out << "t,state,action,reward,next_state,phase,class\n";
  for (long i = 0; i < trace.horizon(); ++i) {
    int s = trace.state[i];
    int a = trace.action[i];
    out << (i + 1) << ',' << m.state_names[s] << ',' << m.action_names[s][a] << ','
        << static_cast<int>(trace.reward[i]) << ',' << m.state_names[trace.next_state[i]] << ','
        << trace.phase_names[trace.phase_id[i]] << ','
        << step_class_token(static_cast<StepClass>(trace.step_class[i])) << '\n';
  }
  if (!out) throw std::runtime_error("sim: failed writing trace file " + path);
}

RegretReport regret_report(const Trace& trace, const Mdp& m, const SolveOptions& opts,
                           double k_reference) {
  OptimalSolution sol = solve_optimal(m, opts);
  RegretReport rep;
  rep.opt_gain = sol.opt_gain;
  rep.span_bias = sol.opt_bias.size() > 0 ? sol.opt_bias.maxCoeff() - sol.opt_bias.minCoeff() : 0.0;
  rep.k_reference = k_reference;
  rep.visit_counts = Eigen::VectorXd::Zero(m.num_pairs());

  const long T = trace.horizon();
  std::vector<long> grid;
  for (long g = 1; g <= T; g *= 2) grid.push_back(g);
  if (grid.empty() || grid.back() != T) grid.push_back(T);
  rep.grid = grid;

  double reward_sum = 0.0;
  double gap_sum = 0.0;
  std::size_t gi = 0;
  for (long t = 1; t <= T; ++t) {
    int p = m.pair_index(trace.state[t - 1], trace.action[t - 1]);
    reward_sum += trace.reward[t - 1];
    gap_sum += sol.gaps(p);
    rep.visit_counts(p) += 1.0;
    while (gi < grid.size() && grid[gi] == t) {
      rep.empirical.push_back(t * sol.opt_gain - reward_sum);
      rep.pseudo.push_back(gap_sum);
      rep.fluctuation_band.push_back(rep.span_bias +
                                     2.0 * std::sqrt(t * std::log(std::max<double>(t, 2.0))));
      ++gi;
    }
  }
  return rep;
}

namespace {

struct RunSpec {
  int learner_index = 0;
  int seed_index = 0;
  std::uint32_t seed = 0;
};

struct RunResult {
  RegretReport report;
  long panics = 0;
  long explores = 0;
  long travels = 0;
  std::string trace_path;
  std::string error;  // empty on success
};

}  // namespace

std::string run_experiment(const std::string& config_json, int jobs,
                           std::uint64_t default_master_seed) {
  nlohmann::json cfg;
  try {
    cfg = nlohmann::json::parse(config_json);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("experiment config: invalid JSON: ") + e.what());
  }
  for (const char* key : {"model", "learners", "horizon", "seeds", "out_dir"}) {
    if (!cfg.contains(key)) {
      throw std::runtime_error(std::string("experiment config: missing key '") + key + "'");
    }
  }
  Mdp m = load_mdp(cfg["model"].get<std::string>());
  long horizon = cfg["horizon"].get<long>();
  std::string out_dir = cfg["out_dir"].get<std::string>();
  std::filesystem::create_directories(out_dir);
  std::uint64_t master_seed = cfg.value("master_seed", default_master_seed);
  int start_state = 0;
  if (cfg.contains("start_state")) start_state = m.state_index(cfg["start_state"].get<std::string>());

  std::vector<LearnerConfig> learners;
  for (const auto& lj : cfg["learners"]) {
    std::string text = lj.is_string() ? std::string("{\"algo\": \"") + lj.get<std::string>() + "\"}"
                                      : lj.dump();
    learners.push_back(parse_learner_config(text));
  }
  std::vector<std::uint32_t> seeds;
  if (cfg["seeds"].is_number()) {
    // Scalar N runs seeds 0..N-1; an explicit array selects specific seeds.
    std::uint32_t n = cfg["seeds"].get<std::uint32_t>();
    for (std::uint32_t i = 0; i < n; ++i) seeds.push_back(i);
  } else {
    for (const auto& sj : cfg["seeds"]) seeds.push_back(sj.get<std::uint32_t>());
  }
  if (learners.empty() || seeds.empty()) {
    throw std::runtime_error("experiment config: learners and seeds must be nonempty");
  }

  SolveOptions solve_opts;
  double k_reference = std::numeric_limits<double>::quiet_NaN();
  try {
    k_reference = vanilla_lower_bound(m, 3).value;
  } catch (const std::exception&) {
  }
  bool have_central = false;
  CentralMeasureResult central;
  try {
    central = central_measure(m);
    have_central = true;
  } catch (const std::exception&) {
  }

  std::vector<RunSpec> specs;
  for (int li = 0; li < static_cast<int>(learners.size()); ++li) {
    for (int si = 0; si < static_cast<int>(seeds.size()); ++si) {
      specs.push_back(RunSpec{li, si, seeds[si]});
    }
  }
  std::vector<RunResult> results(specs.size());

  auto run_one = [&](std::size_t idx) {
    const RunSpec& spec = specs[idx];
    RunResult& res = results[idx];
    try {
      const LearnerConfig& lc = learners[spec.learner_index];
      std::unique_ptr<Learner> learner = make_learner(lc);
      Trace tr = simulate(m, *learner, horizon, master_seed, spec.seed, start_state, lc.canonical);
      std::ostringstream name;
      name << "trace_" << m.name << '_' << lc.algo << '_' << spec.seed << ".csv";
      res.trace_path = (std::filesystem::path(out_dir) / name.str()).string();
      write_trace_csv(tr, m, res.trace_path);
      res.report = regret_report(tr, m, solve_opts, k_reference);
      res.panics = tr.panic_count;
      res.explores = tr.explore_steps;
      res.travels = tr.coexplore_steps;
    } catch (const std::exception& e) {
      res.error = e.what();
    }
  };

  jobs = std::max(jobs, 1);
  if (jobs == 1 || specs.size() <= 1) {
    for (std::size_t i = 0; i < specs.size(); ++i) run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    int n = std::min<int>(jobs, static_cast<int>(specs.size()));
    for (int w = 0; w < n; ++w) {
      pool.emplace_back([&]() {
        while (true) {
          std::size_t i = next.fetch_add(1);
          if (i >= specs.size()) break;
          run_one(i);
        }
      });
    }
    for (auto& th : pool) th.join();
  }

  for (const RunResult& res : results) {
    if (!res.error.empty()) throw std::runtime_error("experiment run failed: " + res.error);
  }

  double log_T = std::log(std::max<double>(horizon, 2.0));
  nlohmann::ordered_json summary;
  summary["model"] = m.name;
  summary["horizon"] = horizon;
  summary["master_seed"] = master_seed;
  summary["seeds"] = seeds;
  summary["start_state"] = m.state_names[start_state];
  if (std::isfinite(k_reference)) summary["k_reference"] = k_reference;
  if (have_central) {
    nlohmann::ordered_json tgt;
    for (int p = 0; p < m.num_pairs(); ++p) {
      tgt[m.pair_label(p)] = central.measure.weights(p) * central.total_mass;
    }
    summary["central_measure_rate"] = tgt;  // predicted visits per log t
  }

  nlohmann::ordered_json learners_json = nlohmann::ordered_json::array();
  for (int li = 0; li < static_cast<int>(learners.size()); ++li) {
    const LearnerConfig& lc = learners[li];
    nlohmann::ordered_json lj;
    lj["algo"] = lc.algo;
    lj["config_hash"] = fnv1a64_hex(lc.canonical);

    const RegretReport* first = nullptr;
    std::vector<const RunResult*> runs;
    for (std::size_t i = 0; i < specs.size(); ++i) {
      if (specs[i].learner_index == li) runs.push_back(&results[i]);
    }
    first = &runs.front()->report;

    lj["grid"] = first->grid;
    std::vector<double> mean_emp(first->grid.size(), 0.0), mean_pseudo(first->grid.size(), 0.0);
    std::vector<double> var_emp(first->grid.size(), 0.0);
    for (const RunResult* r : runs) {
      for (std::size_t g = 0; g < first->grid.size(); ++g) {
        mean_emp[g] += r->report.empirical[g];
        mean_pseudo[g] += r->report.pseudo[g];
      }
    }
    for (auto& v : mean_emp) v /= runs.size();
    for (auto& v : mean_pseudo) v /= runs.size();
    for (const RunResult* r : runs) {
      for (std::size_t g = 0; g < first->grid.size(); ++g) {
        double d = r->report.empirical[g] - mean_emp[g];
        var_emp[g] += d * d;
      }
    }
    std::vector<double> stderr_emp(first->grid.size(), 0.0);
    for (std::size_t g = 0; g < first->grid.size(); ++g) {
      stderr_emp[g] = runs.size() > 1
                          ? std::sqrt(var_emp[g] / (runs.size() - 1) / runs.size())
                          : 0.0;
    }
    lj["mean_empirical_regret"] = mean_emp;
    lj["mean_pseudo_regret"] = mean_pseudo;
    lj["stderr_empirical_regret"] = stderr_emp;
    lj["mean_regret_over_log_t_tail"] = mean_pseudo.back() / log_T;

    Eigen::VectorXd mean_visits = Eigen::VectorXd::Zero(m.num_pairs());
    for (const RunResult* r : runs) mean_visits += r->report.visit_counts;
    mean_visits /= static_cast<double>(runs.size());
    nlohmann::ordered_json rates;
    for (int p = 0; p < m.num_pairs(); ++p) {
      rates[m.pair_label(p)] = mean_visits(p) / log_T;
    }
    lj["mean_visits_over_log_t"] = rates;

    nlohmann::ordered_json per_seed = nlohmann::ordered_json::array();
    for (std::size_t ri = 0; ri < runs.size(); ++ri) {
      const RunResult* r = runs[ri];
      nlohmann::ordered_json sj;
      sj["seed"] = seeds[ri];
      sj["final_empirical_regret"] = r->report.empirical.back();
      sj["final_pseudo_regret"] = r->report.pseudo.back();
      sj["regret_over_log_t"] = r->report.pseudo.back() / log_T;
      sj["explore_steps"] = r->explores;
      sj["travel_steps"] = r->travels;
      sj["panic_count"] = r->panics;
      sj["trace"] = r->trace_path;
      per_seed.push_back(sj);
    }
    lj["per_seed"] = per_seed;
    learners_json.push_back(lj);
  }
  summary["learners"] = learners_json;

  std::string text = summary.dump(2);
  std::ofstream out(std::filesystem::path(out_dir) / "summary.json", std::ios::binary);
  if (!out) throw std::runtime_error("experiment: cannot write summary.json");
  out << text << '\n';
  return text;
}

}  // namespace avgmdp
