#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "avgmdp/learner.hpp"
#include "avgmdp/model.hpp"
#include "avgmdp/solve.hpp"

namespace avgmdp {

/// 64-bit FNV-1a hash (used to fingerprint learner configurations in traces).
std::uint64_t fnv1a64(const std::string& text);
std::string fnv1a64_hex(const std::string& text);

/// Full record of one simulated run. Per-step columns are stored compactly;
/// step t (1-based) occupied `state[t-1]`, played `action[t-1]`, received the
/// realized Bernoulli reward `reward[t-1]` and moved to `next_state[t-1]`.
struct Trace {
  std::string model_name;
  std::string learner_name;
  std::string config_hash;  ///< FNV-1a of the canonical learner config
  std::uint64_t master_seed = 0;
  std::uint32_t run_seed = 0;
  int start_state = 0;

  std::vector<std::int32_t> state;
  std::vector<std::int32_t> action;
  std::vector<std::uint8_t> reward;  ///< realized 0/1
  std::vector<std::int32_t> next_state;
  std::vector<std::uint8_t> step_class;  ///< StepClass values
  std::vector<std::uint16_t> phase_id;   ///< index into phase_names
  std::vector<std::string> phase_names;

  double cumulative_reward = 0.0;
  long panic_count = 0;
  long explore_steps = 0;
  long coexplore_steps = 0;

  long horizon() const { return static_cast<long>(state.size()); }
};

/// Runs one episode. Rewards are Bernoulli draws from the pair means; rewards,
/// transitions and learner randomness use independent derived streams, so a
/// fixed (model, learner config, master_seed, run_seed, start_state, horizon)
/// reproduces the trace byte for byte. Throws on an out-of-range action
/// ("IllegalAction", with the step index).
Trace simulate(const Mdp& m, Learner& learner, long horizon, std::uint64_t master_seed,
               std::uint32_t run_seed, int start_state = 0,
               const std::string& config_canonical = "");

/// Writes "t,state,action,reward,next_state,phase,class" rows (names, not
/// indices; class tokens -, +-, +, !).
void write_trace_csv(const Trace& trace, const Mdp& m, const std::string& path);

/// Cumulative regret along a dyadic time grid.
struct RegretReport {
  std::vector<long> grid;                 ///< powers of two, then the horizon
  std::vector<double> empirical;          ///< t g* - realized reward sum
  std::vector<double> pseudo;             ///< summed per-step optimality gaps
  std::vector<double> fluctuation_band;   ///< bias span + 2 sqrt(t ln t), context only
  Eigen::VectorXd visit_counts;           ///< per pair, at the horizon
  double opt_gain = 0.0;
  double span_bias = 0.0;
  double k_reference = 0.0;  ///< caller-provided rate constant (NaN when absent)
};

RegretReport regret_report(const Trace& trace, const Mdp& m, const SolveOptions& opts = {},
                           double k_reference = std::numeric_limits<double>::quiet_NaN());

/// Runs the experiment described by a JSON config:
///   {"model": path, "learners": [algo-or-config, ...], "horizon": N,
///    "seeds": count-or-[u32, ...], "start_state": name?, "out_dir": dir,
///    "master_seed": u64?}
/// A scalar seed count N expands to run seeds 0..N-1.
/// writing one trace CSV per (learner, seed) and a summary JSON with regret
/// curves, tail regret-over-log ratios, visit rates against the central
/// measure's prediction, travel and panic counts. Runs execute on `jobs`
/// threads; all aggregates are independent of the thread schedule. Returns the
/// summary JSON text (also written to out_dir/summary.json).
std::string run_experiment(const std::string& config_json, int jobs,
                           std::uint64_t default_master_seed);

}  // namespace avgmdp
