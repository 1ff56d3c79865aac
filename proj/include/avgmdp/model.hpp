#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

namespace avgmdp {

/// Whether a pair's transition kernel is fixed and known to any estimator, or
/// ranges over the full probability simplex (and must be learned).
enum class KernelSpace { Known, FreeSimplex };

/// A finite average-reward Markov decision process with Bernoulli rewards.
///
/// Pairs (state, action) are flattened state-major: all actions of state 0
/// first, in the order of `action_names[0]`, then state 1, and so on.
struct Mdp {
  std::string name;
  std::vector<std::string> state_names;
  std::vector<std::vector<std::string>> action_names;  ///< [state][local action]
  std::vector<int> pair_offset;                        ///< size S+1; pairs of s are [offset[s], offset[s+1])
  std::vector<Eigen::VectorXd> kernel;                 ///< per pair, length S, row-stochastic
  std::vector<double> reward;                          ///< per pair, mean in [0,1]
  std::vector<KernelSpace> kernel_space;               ///< per pair

  int num_states() const { return static_cast<int>(state_names.size()); }
  int num_pairs() const { return static_cast<int>(reward.size()); }
  int num_actions(int s) const { return pair_offset[s + 1] - pair_offset[s]; }
  int pair_index(int s, int a) const { return pair_offset[s] + a; }

  /// Inverse of pair_index: (state, local action index).
  std::pair<int, int> state_action(int p) const;

  /// "state,action" label of a pair, as used in JSON keys.
  std::string pair_label(int p) const;

  /// Index of a named state; throws std::out_of_range if unknown.
  int state_index(const std::string& state_name) const;

  /// Pair index of "state,action" names; throws std::out_of_range if unknown.
  int pair_by_names(const std::string& state_name, const std::string& action_name) const;

  /// Recomputes pair offsets from action_names (loader helper).
  void rebuild_offsets();
};

/// Parses a model from its JSON text. Kernel rows whose sum deviates from 1 by
/// at most 1e-9 are renormalized; larger deviations, negative probabilities,
/// rewards outside [0,1], or structural defects raise std::runtime_error.
Mdp parse_mdp(const std::string& json_text);

/// Loads a model from a JSON file; raises std::runtime_error on I/O failure.
Mdp load_mdp(const std::string& path);

/// Serializes a model to JSON (stable key order; round-trips via parse_mdp).
std::string mdp_to_json(const Mdp& m, bool pretty);

/// True when the two models share states, actions, kernel supports and kernel
/// space flags (rewards and in-support probabilities may differ).
bool same_shape(const Mdp& a, const Mdp& b);

/// True when the two models share states, actions and kernel space flags,
/// ignoring kernels and rewards entirely.
bool same_skeleton(const Mdp& a, const Mdp& b);

}  // namespace avgmdp
