#pragma once

#include <Eigen/Dense>
#include <vector>

#include "avgmdp/chains.hpp"
#include "avgmdp/model.hpp"

namespace avgmdp {

/// Nonnegative weights over state-action pairs satisfying the flow equations:
/// for every state, outgoing mass equals incoming mass under the kernels.
struct InvariantMeasure {
  Eigen::VectorXd weights;      ///< per pair
  bool is_probability = false;  ///< weights sum to one
};

/// Per-state mass: sum of the measure over the state's actions.
Eigen::VectorXd state_marginal(const InvariantMeasure& mu, const Mdp& m);

/// Largest absolute flow defect over states.
double flow_residual(const InvariantMeasure& mu, const Mdp& m);

/// True iff mu is nonnegative, satisfies the flow equations within 1e-9,
/// sums to one when flagged as a probability, and - when eps > 0 - gives every
/// pair at least eps times its state mass (uniformity), all within 1e-9.
bool is_invariant(const InvariantMeasure& mu, const Mdp& m, double eps = 0.0);

/// Probability invariant measure of a unichain policy: stationary law of the
/// induced chain spread over the policy's action probabilities. Throws when
/// the induced chain has more than one recurrent class.
InvariantMeasure unichain_policy_measure(const Mdp& m, const StochasticPolicy& pi);

/// Probability invariant measure of a fully randomized policy on a
/// communicating model. Throws NotFullySupported when some action probability
/// is zero.
InvariantMeasure policy_stationary_measure(const StochasticPolicy& pi, const Mdp& m);

/// Conditional policy of a measure with positive mass at every state:
/// pi(a|s) = mu(s,a) / mu(s). Throws DegenerateMeasure on zero state mass.
StochasticPolicy induced_policy(const InvariantMeasure& mu, const Mdp& m);

/// Probability invariant measure maximizing its smallest entry (linear
/// program). The optimum is at least 1 / (num_pairs * diameter).
InvariantMeasure covering_measure(const Mdp& m);

struct UniformizedMeasure {
  InvariantMeasure measure;
  double epsilon_effective = 0.0;  ///< after clamping, if any
  bool clamped = false;
};

/// Blends mu toward the covering measure just enough to make every pair carry
/// at least eps times its state mass; the blend moves mu by at most
/// num_pairs * diameter * eps in sup norm. eps is clamped below
/// 0.99 / (num_pairs * diameter) when necessary.
UniformizedMeasure uniformize(const InvariantMeasure& mu, const Mdp& m, double eps);

struct UnichainTerm {
  double coefficient = 0.0;       ///< nonnegative scale
  StochasticPolicy policy;        ///< unichain policy
  InvariantMeasure measure;       ///< its probability invariant measure
  std::vector<int> cycle_pairs;   ///< the seed cycle this term grew from
};

struct UnichainDecomposition {
  std::vector<UnichainTerm> terms;
  double residual = 0.0;  ///< sup-norm mismatch of the reconstruction
};

/// Writes mu as sum_i coefficient_i * measure_i with at most num_pairs terms:
/// repeatedly extracts a simple supported pair-cycle (depth-first walk from
/// the lowest supported pair), completes it into a unichain policy, and
/// subtracts the largest feasible multiple of that policy's measure. With
/// deterministic kernels each term's support is exactly its seed cycle; with
/// branching kernels it may also cover further recurrent pairs.
/// Throws NotInvariant when mu fails the flow equations.
UnichainDecomposition decompose_unichain(const InvariantMeasure& mu, const Mdp& m);

}  // namespace avgmdp
