#pragma once

#include <Eigen/Dense>
#include <vector>

#include "avgmdp/measures.hpp"
#include "avgmdp/model.hpp"
#include "avgmdp/solve.hpp"

namespace avgmdp {

/// kl(p||q) between Bernoulli laws; q is clamped to [1e-9, 1-1e-9].
double bernoulli_kl(double p, double q);

/// KL between categorical laws; +infinity when q misses mass of p.
double categorical_kl(const Eigen::VectorXd& p, const Eigen::VectorXd& q);

/// Per-pair divergence between two models of identical skeleton: Bernoulli
/// divergence of the rewards plus categorical divergence of the kernels.
Eigen::VectorXd pair_kl(const Mdp& base, const Mdp& other);

/// Regularization levels of the lower bound: a flattening width for the
/// protected pairs, a uniformity floor for the measure cone, and an l2
/// penalty weight.
struct RegularizerTriple {
  double eps_flat = 0.0;
  double eps_unif = 0.0;
  double eps_reg = 0.0;
};

/// An alternative model that matches the base model on every protected pair
/// yet reaches the base optimal gain on some other recurrent class.
struct ConfusingCandidate {
  Mdp model;
  std::vector<int> target_class;  ///< pair set raised to the optimal gain
  double achieved_gain = 0.0;
  Eigen::VectorXd kl_per_pair;    ///< divergence from the base model, per pair
};

struct InnerResult {
  double value = 0.0;  ///< +infinity when infeasible
  bool feasible = false;
  ConfusingCandidate best;  ///< meaningful only when feasible
};

/// One recurrent class reachable by a deterministic policy: its pair set, its
/// stationary law over those pairs, and the states it covers.
struct RecurrentClassInfo {
  std::vector<int> pairs;
  Eigen::VectorXd nu;       ///< stationary law over `pairs`
  std::vector<int> states;
};

/// All distinct recurrent classes of deterministic policies (at most `cap`
/// policies are visited). Depends only on the kernels, so callers that query
/// models with fixed kernels repeatedly may compute this once and pass it to
/// confusing_weighted_kl_min below.
std::vector<RecurrentClassInfo> enumerate_recurrent_classes(const Mdp& m, long cap = 20000);

/// Smallest weighted divergence sum(w(p) * kl(p)) needed to turn some
/// unprotected recurrent class optimal, minimized over alternative models
/// that agree with m on the protected pairs. Candidates are the recurrent
/// classes of deterministic policies; each is solved exactly in the rewards
/// (dual bisection) and refined over free kernels by mirror descent when the
/// model's kernels are free. Throws InvalidWeights on negative weights.
InnerResult confusing_weighted_kl_min(const Eigen::VectorXd& w, const Mdp& m,
                                      const std::vector<int>& protected_pairs,
                                      const SolveOptions& opts = {});

/// Same, with the candidate classes precomputed by enumerate_recurrent_classes
/// (must have been produced for a model with these kernels).
InnerResult confusing_weighted_kl_min(const Eigen::VectorXd& w, const Mdp& m,
                                      const std::vector<int>& protected_pairs,
                                      const std::vector<RecurrentClassInfo>& classes,
                                      const SolveOptions& opts = {});

/// confusing_weighted_kl_min weighted by mu and protecting the eps_flat
/// leveled optimal pairs (eps_flat = 0 protects exactly the optimal pairs).
double information_value(const InvariantMeasure& mu, const Mdp& m, double eps_flat,
                         const SolveOptions& opts = {});

struct LowerBoundOptions {
  double cut_tol = 1e-6;      ///< slack accepted on the information constraint
  int max_cuts = 200;
  int outer_rounds = 80;      ///< vertex-generation rounds per quadratic solve
  long hull_iters = 20000;    ///< gradient iterations per hull subproblem
  long hull_iter_cap = 100000;
  SolveOptions solve;
};

struct LowerBoundSolution {
  double value = 0.0;
  InvariantMeasure measure;
  std::vector<ConfusingCandidate> cuts;
  int iterations = 0;      ///< separation-oracle calls
  bool converged = false;  ///< information constraint met within cut_tol
  double eps_unif_effective = 0.0;
};

/// Regret-rate lower bound at fixed regularization: minimize
/// sum(mu * gap) + eps_reg ||mu||^2 over invariant measures with per-state
/// uniformity floor eps_unif, subject to the information constraint
/// inf over confusing models of sum(mu * kl) >= 1, handled by cutting planes.
/// eps_unif is clamped below the covering measure's minimum when necessary.
LowerBoundSolution regularized_lower_bound(const Mdp& m, const RegularizerTriple& E,
                                           const LowerBoundOptions& opts = {});

/// Same, reusing previously discovered cuts that are still valid (used when
/// re-solving for slowly drifting models or shrinking regularization).
LowerBoundSolution regularized_lower_bound(const Mdp& m, const RegularizerTriple& E,
                                           const std::vector<ConfusingCandidate>& warm_cuts,
                                           const LowerBoundOptions& opts = {});

/// The pinned decreasing regularization schedule (6 levels).
std::vector<RegularizerTriple> vanilla_levels();

struct VanillaLevelResult {
  RegularizerTriple E;
  double value = 0.0;
  bool converged = false;
};

struct VanillaReport {
  std::vector<VanillaLevelResult> levels;
  double value = 0.0;         ///< finest-level value
  double extrapolated = 0.0;  ///< one-step Richardson extrapolation
};

/// Runs regularized_lower_bound along the first num_levels pinned levels,
/// reusing cuts, and reports the value sequence with an extrapolation.
VanillaReport vanilla_lower_bound(const Mdp& m, int num_levels = 6,
                                  const LowerBoundOptions& opts = {});

/// Brute-force upper estimate: minimum over a per-state simplex grid of fully
/// randomized policies of (optimal gain - policy gain) / information value of
/// the policy's measure. Throws ResourceLimit when the model or grid is too
/// large (more than 8 pairs or over 2e6 grid policies).
double policywise_oracle(const Mdp& m, double grid_resolution, const SolveOptions& opts = {});

struct CentralMeasureResult {
  InvariantMeasure measure;  ///< normalized to a probability
  double total_mass = 0.0;   ///< mass before normalization
};

/// Normalized optimizing measure at the pinned reporting level
/// (1e-3, 1e-6, 1e-4). Throws NoExplorationNeeded when the bound is zero.
CentralMeasureResult central_measure(const Mdp& m, const LowerBoundOptions& opts = {});

/// Coarse closed-form ceiling: 16 * num_pairs * diameter^3 / gain_gap^2.
double simple_bound(const Mdp& m, const SolveOptions& opts = {});

}  // namespace avgmdp
