#pragma once

#include <Eigen/Dense>
#include <vector>

#include "avgmdp/chains.hpp"
#include "avgmdp/model.hpp"

namespace avgmdp {

/// Value of a fixed stationary policy.
struct PolicyValue {
  Eigen::VectorXd gain;  ///< per state
  Eigen::VectorXd bias;  ///< per state, Cesaro bias (class-stationary orthogonal)
  Eigen::VectorXd gaps;  ///< per pair: gain(s) + bias(s) - r(s,a) - k(s,a).bias
  std::vector<std::vector<int>> recurrent_classes;   ///< pair index sets
  std::vector<std::vector<double>> class_stationary; ///< per class, over its pairs
};

PolicyValue evaluate_policy(const Mdp& m, const StochasticPolicy& pi);
PolicyValue evaluate_policy(const Mdp& m, const DeterministicPolicy& pi);

struct SolveOptions {
  double tol_solve = 1e-10;  ///< iterative-solver convergence threshold
  double tol_gap = 1e-8;     ///< zero-gap classification threshold
  int enum_cap = 20000;      ///< cap on policy / action-selector enumeration
};

/// Optimal solution of a communicating model.
///
/// The per-pair gap reported here is the worst-case optimality residual
///   sup { g* + h(s) - r(s,a) - k(s,a).h : h solves the optimality equation }
/// over all solutions h of the average-reward optimality equation (pinned at
/// the first state). It is computed exactly by enumerating action selectors
/// and solving one small linear program per (selector, pair).
struct OptimalSolution {
  double opt_gain = 0.0;           ///< g*, constant across states
  Eigen::VectorXd opt_bias;        ///< bias of the returned bias-optimal policy
  Eigen::VectorXd gaps;            ///< per pair, always >= 0 up to tolerance
  DeterministicPolicy bias_opt_policy;
  std::vector<int> weakly_optimal_pairs;     ///< gaps <= tol_gap
  std::vector<int> optimal_pairs;            ///< union of the components below
  std::vector<std::vector<int>> components;  ///< communicating components of optimal pairs
};

/// Throws std::runtime_error when the model is not communicating.
OptimalSolution solve_optimal(const Mdp& m, const SolveOptions& opts = {});

/// Gain, gaps and optimal-pair classification only; skips the bias-optimal
/// policy search. `opt_bias` is left empty and `bias_opt_policy` is default
/// constructed. Roughly twice as fast as solve_optimal; intended for callers
/// that re-solve models in a hot loop.
OptimalSolution classify_optimal(const Mdp& m, const SolveOptions& opts = {});

/// Exact optimal gain alone (one linear program; cheaper than solve_optimal).
double optimal_gain(const Mdp& m);

/// True when every state can reach every other under some action sequence.
bool is_communicating(const Mdp& m);

/// Arrival-count diameter: 1 + max over ordered state pairs (s != s') of the
/// minimal expected number of transitions from s to s' over all policies.
/// Equals 1 for single-state models.
double diameter(const Mdp& m);

/// Arrival-count diameter of the chain induced by a policy (see chain_diameter).
double policy_diameter(const Mdp& m, const StochasticPolicy& pi);
double policy_diameter(const Mdp& m, const DeterministicPolicy& pi);

/// Worst-case policy diameter D_w over deterministic policies.
double weighted_diameter(const Mdp& m, const SolveOptions& opts = {});

/// Smallest sup-norm gain deficit over deterministic policies that are not
/// gain optimal (gain optimal = gain equal to g* at every state). Returns
/// +infinity when every deterministic policy is gain optimal.
double gain_gap(const Mdp& m, const SolveOptions& opts = {});

/// Communicating components of an arbitrary pair set: maximal subsets that are
/// closed (kernel supports inside their own state set, every state keeping an
/// action) and strongly connected. Pairs that belong to no such subset are
/// dropped.
std::vector<std::vector<int>> pair_components(const Mdp& m, const std::vector<int>& pairs);

/// Explicit perturbation bounds for the chain of one policy evaluated in two
/// models of identical shape (same kernel supports). All quantities compare
/// the induced state chains k1 (policy in `base`) and k2 (policy in `other`):
/// gain vectors, Cesaro biases, per-class stationary laws, and arrival-count
/// chain diameters.
struct DeviationBounds {
  double gain_bound = 0.0;               ///< for max_s |g2(s) - g1(s)|
  double bias_bound = 0.0;               ///< for max_s |h2(s) - h1(s)|
  double invariant_measure_bound = 0.0;  ///< for max_s |nu2(s) - nu1(s)| (unichain)
  double diameter_bound = 0.0;           ///< for |D(k2) - D(k1)|
  double reaching_prob_bound = 0.0;      ///< for absorption-probability deviations
  bool unichain = true;                  ///< which bound family applies
};

DeviationBounds deviation_bounds(const Mdp& base, const Mdp& other, const StochasticPolicy& pi);

}  // namespace avgmdp
