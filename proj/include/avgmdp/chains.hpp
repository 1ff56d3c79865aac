#pragma once

#include <Eigen/Dense>
#include <vector>

#include "avgmdp/model.hpp"

namespace avgmdp {

/// Deterministic stationary policy: one local action index per state.
using DeterministicPolicy = std::vector<int>;

/// Randomized stationary policy: a probability vector over local actions per state.
struct StochasticPolicy {
  std::vector<Eigen::VectorXd> probs;

  static StochasticPolicy uniform(const Mdp& m);
  static StochasticPolicy pure(const Mdp& m, const DeterministicPolicy& d);

  /// Validates shape and per-state normalization within tol; throws on defect.
  void validate(const Mdp& m, double tol = 1e-9) const;
};

/// The Markov reward chain induced by a stationary policy.
struct MarkovChain {
  Eigen::MatrixXd P;  ///< S x S row-stochastic
  Eigen::VectorXd r;  ///< per-state mean reward
};

MarkovChain induced_chain(const Mdp& m, const StochasticPolicy& pi);
MarkovChain induced_chain(const Mdp& m, const DeterministicPolicy& pi);

/// Full structural and ergodic analysis of a fixed finite chain.
struct ChainAnalysis {
  std::vector<std::vector<int>> recurrent_classes;  ///< sorted state lists, ordered by least state
  std::vector<int> state_class;                     ///< class id per state; -1 for transient states
  std::vector<Eigen::VectorXd> stationary;          ///< per class, over its states (same order)
  Eigen::MatrixXd reach;                            ///< S x C: absorption probability into each class
  Eigen::VectorXd gain;                             ///< long-run average reward from each state
  Eigen::VectorXd bias;                             ///< Cesaro bias; each class satisfies stationary . bias = 0
};

ChainAnalysis analyze_chain(const MarkovChain& chain);

/// Strongly connected components of a directed graph (adjacency lists),
/// ordered by their smallest vertex.
std::vector<std::vector<int>> strongly_connected_components(
    const std::vector<std::vector<int>>& adj);

/// Expected number of transitions until first arrival in `targets` under P.
/// Zero on targets; +infinity from states that do not reach them almost surely.
Eigen::VectorXd expected_hitting_steps(const Eigen::MatrixXd& P, const std::vector<int>& targets);

/// Arrival-count diameter of a fixed chain: the maximum over covers (sets
/// holding exactly one state of each recurrent class) of
///   1 + max_s E_s[transitions until the cover is hit].
/// A single self-looping state has diameter 1; a deterministic n-cycle has n.
/// Cover enumeration is capped at `cover_cap` combinations; past the cap only
/// the lexicographically first cover of each class is used.
double chain_diameter(const Eigen::MatrixXd& P, int cover_cap = 4096);

}  // namespace avgmdp
