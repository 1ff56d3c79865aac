#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "avgmdp/lowerbound.hpp"
#include "avgmdp/measures.hpp"
#include "avgmdp/model.hpp"
#include "avgmdp/rng.hpp"
#include "avgmdp/schedule.hpp"
#include "avgmdp/solve.hpp"

namespace avgmdp {

/// The part of a model a learner is allowed to see: state and action names,
/// and the transition kernel of every pair marked Known. Rewards and
/// free-simplex kernels are withheld.
struct LearnerShape {
  std::vector<std::string> state_names;
  std::vector<std::vector<std::string>> action_names;
  std::vector<int> pair_offset;
  std::vector<KernelSpace> kernel_space;       ///< per pair
  std::vector<Eigen::VectorXd> known_kernel;   ///< per pair; zero length when withheld

  int num_states() const { return static_cast<int>(state_names.size()); }
  int num_pairs() const { return pair_offset.empty() ? 0 : pair_offset.back(); }
  int num_actions(int s) const { return pair_offset[s + 1] - pair_offset[s]; }
  int pair_index(int s, int a) const { return pair_offset[s] + a; }
};

LearnerShape make_shape(const Mdp& m);

/// Running maximum-likelihood statistics over observed transitions.
struct Estimator {
  LearnerShape shape;
  std::vector<long> counts;                       ///< per pair
  std::vector<double> reward_sums;                ///< per pair
  std::vector<Eigen::VectorXd> transition_counts; ///< per pair, over next states
  long total = 0;

  void reset(const LearnerShape& s);
  void record(int state, int action, double reward, int next_state);
  Eigen::VectorXd count_vector() const;

  /// Point estimate: empirical mean rewards (kept even on the 0/1 boundary),
  /// known kernels where declared, empirical kernels otherwise. Unvisited
  /// pairs get the prior reward 1/2 and, when the kernel is not known, the
  /// uniform kernel over all states.
  Mdp mle() const;
};

/// Pairs observed often enough to be statistically settled at time t:
/// counts(p) >= (ln t)^2.
std::vector<int> count_skeleton(const Eigen::VectorXd& counts, double t);

/// Generalized-likelihood-ratio stopping rule on the estimated model: returns
/// true ("keep exploring") when the cheapest confusing alternative against the
/// current counts costs at most (1 + eps_test(t)) ln t, protecting the count
/// skeleton and the eps_flat(t)-leveled optimal pairs. Solver failures count
/// as true (conservative).
bool glr_exploration_test(const Estimator& est, double t, const Schedule& schedule,
                          const SolveOptions& opts = {});

/// Uniform over the leveled optimal actions at their states, uniform over all
/// actions elsewhere.
StochasticPolicy exploitation_policy(const Mdp& m_hat, double eps_flat,
                                     const SolveOptions& opts = {});

struct ExplorationPolicyResult {
  StochasticPolicy policy;
  InvariantMeasure measure;   ///< the optimizing measure (possibly blended)
  LowerBoundSolution lb;
};

/// The induced policy of the regularized lower bound's optimizing measure.
/// When that measure leaves some state with mass below 1e-12 it is blended
/// with the covering measure at weight eps_unif before inducing.
ExplorationPolicyResult exploration_policy(const Mdp& m_hat, const RegularizerTriple& E,
                                           const std::vector<ConfusingCandidate>& warm_cuts,
                                           const LowerBoundOptions& opts = {});

/// True when the least-visited leveled optimal pair overall has strictly
/// fewer visits than the square root of the least-visited pair of the
/// component currently exploited.
bool square_trick_travel(const Eigen::VectorXd& counts,
                         const std::vector<std::vector<int>>& components, int current_component);

/// Time classes of a learner step. Tokens: Explore "-", CoExplore "+-",
/// Exploit "+", Panic "!".
enum class StepClass : std::uint8_t { Explore = 0, CoExplore = 1, Exploit = 2, Panic = 3 };

const char* step_class_token(StepClass c);
const char* step_class_name(StepClass c);

struct PhaseRecord {
  long index = 0;
  long start_t = 0;         ///< time of the phase's first step (1-based)
  long length = 0;
  StepClass label = StepClass::Exploit;  ///< Panic when the phase was aborted
};

/// Sequential decision maker driven by the simulation harness. The harness
/// calls act, samples the environment, then calls observe; the step's labels
/// are valid after observe.
class Learner {
 public:
  virtual ~Learner() = default;
  virtual void reset(std::uint64_t master_seed, std::uint32_t run_seed,
                     const LearnerShape& shape) = 0;
  virtual int act(int state) = 0;
  virtual void observe(int state, int action, double reward, int next_state) = 0;
  virtual StepClass last_step_class() const = 0;
  virtual const char* last_phase_name() const = 0;
  virtual std::string name() const = 0;
  virtual long panic_count() const { return 0; }
  virtual long explore_steps() const { return 0; }    ///< "-" and "+-" steps
  virtual long coexplore_steps() const { return 0; }  ///< "+-" steps only
  virtual const std::vector<PhaseRecord>* phase_records() const { return nullptr; }
};

/// Caps forwarded to the embedded solvers (kept small: these run per phase).
struct LearnerCaps {
  int enum_cap = 20000;
  int max_cuts = 60;
  int outer_rounds = 40;
  long hull_iters = 4000;
};

struct LearnerConfig {
  std::string algo = "ecoe";  ///< "ecoe" | "uniform" | "greedy"
  Schedule schedule;
  LearnerCaps caps;
  std::string canonical;      ///< normalized JSON text, used for trace hashing
};

/// Parses {"algo": ..., "schedule": "default" | {four constants}, "caps": {...}}.
/// Unknown keys raise std::runtime_error.
LearnerConfig parse_learner_config(const std::string& json_text);

std::unique_ptr<Learner> make_learner(const LearnerConfig& cfg);

}  // namespace avgmdp
