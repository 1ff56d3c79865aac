#pragma once

#include <Eigen/Dense>
#include <vector>

#include "avgmdp/model.hpp"
#include "avgmdp/solve.hpp"

namespace avgmdp {

/// Reward transform that lifts every pair whose optimality gap is strictly
/// between 0 and epsilon up to optimality: new reward = r + gap on those
/// pairs, unchanged elsewhere. Kernels are untouched; lifted rewards may
/// exceed 1 (the transformed model is only ever re-solved, never sampled).
struct LeveledModel {
  Mdp base;
  double epsilon = 0.0;
  Eigen::VectorXd leveled_reward;
  std::vector<int> bumped_pairs;  ///< pairs with 0 < gap < epsilon

  /// The transformed model (base with leveled rewards).
  Mdp transformed() const;
};

/// Conservative robustness scale: perturbations smaller than epsilon /
/// c_total keep the leveled optimal structure intact.
struct LevelingConstant {
  double c_gain = 0.0;   ///< 2 (1+|S|) D_w
  double c_gaps = 0.0;   ///< 32 (1+|S|) D_w^2
  double c_total = 0.0;  ///< max(c_gain, c_gaps * D_w)
};

/// Throws InvalidEpsilon for eps <= 0 and when the model is not communicating.
LeveledModel level(const Mdp& m, double eps, const SolveOptions& opts = {});

struct LeveledOptimalPairs {
  std::vector<int> pairs;
  std::vector<std::vector<int>> components;
  LeveledModel leveled;  ///< the transform that produced the result
};

/// Optimal pairs of the leveled model. eps = 0 means no transform (the base
/// model's optimal pairs); eps < 0 throws.
LeveledOptimalPairs leveled_optimal_pairs(const Mdp& m, double eps, const SolveOptions& opts = {});

LevelingConstant leveling_constant(const Mdp& m, const SolveOptions& opts = {});

/// Largest per-pair deviation |r-r'| + l1 kernel distance; the support-aware
/// variant returns +infinity as soon as any pair's kernel supports differ.
double model_distance(const Mdp& a, const Mdp& b);
double support_aware_distance(const Mdp& a, const Mdp& b);

}  // namespace avgmdp
