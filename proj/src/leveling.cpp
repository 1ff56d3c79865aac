#include "avgmdp/leveling.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace avgmdp {

Mdp LeveledModel::transformed() const {
  Mdp out = base;
  out.reward.assign(leveled_reward.data(), leveled_reward.data() + leveled_reward.size());
  return out;
}

namespace {
Eigen::VectorXd reward_vector(const Mdp& m) {
  return Eigen::Map<const Eigen::VectorXd>(m.reward.data(), m.num_pairs());
}
}  // namespace

LeveledModel level(const Mdp& m, double eps, const SolveOptions& opts) {
  if (eps <= 0.0) {
    throw std::runtime_error("leveling: epsilon must be positive (InvalidEpsilon)");
  }
  OptimalSolution sol = classify_optimal(m, opts);
  LeveledModel out;
  out.base = m;
  out.epsilon = eps;
  out.leveled_reward = reward_vector(m);
  for (int p = 0; p < m.num_pairs(); ++p) {
    double gap = sol.gaps(p);
    if (gap < eps) {
      out.leveled_reward(p) += gap;
      if (gap > opts.tol_gap) out.bumped_pairs.push_back(p);
    }
  }
  return out;
}

LeveledOptimalPairs leveled_optimal_pairs(const Mdp& m, double eps, const SolveOptions& opts) {
  if (eps < 0.0) {
    throw std::runtime_error("leveling: epsilon must be nonnegative (InvalidEpsilon)");
  }
  LeveledOptimalPairs out;
  if (eps == 0.0) {
    OptimalSolution sol = classify_optimal(m, opts);
    out.pairs = sol.optimal_pairs;
    out.components = sol.components;
    out.leveled.base = m;
    out.leveled.epsilon = 0.0;
    out.leveled.leveled_reward = reward_vector(m);
    return out;
  }
  out.leveled = level(m, eps, opts);
  OptimalSolution sol = classify_optimal(out.leveled.transformed(), opts);
  out.pairs = sol.optimal_pairs;
  out.components = sol.components;
  return out;
}

LevelingConstant leveling_constant(const Mdp& m, const SolveOptions& opts) {
  if (!is_communicating(m)) {
    throw std::runtime_error("leveling: model is not communicating (NotCommunicating)");
  }
  double dw = weighted_diameter(m, opts);
  LevelingConstant c;
  c.c_gain = 2.0 * (1.0 + m.num_states()) * dw;
  c.c_gaps = 32.0 * (1.0 + m.num_states()) * dw * dw;
  c.c_total = std::max(c.c_gain, c.c_gaps * dw);
  return c;
}

double model_distance(const Mdp& a, const Mdp& b) {
  if (!same_skeleton(a, b)) {
    throw std::runtime_error("leveling: models have different state/action sets");
  }
  double worst = 0.0;
  for (int p = 0; p < a.num_pairs(); ++p) {
    double d = std::abs(a.reward[p] - b.reward[p]) + (a.kernel[p] - b.kernel[p]).cwiseAbs().sum();
    worst = std::max(worst, d);
  }
  return worst;
}

double support_aware_distance(const Mdp& a, const Mdp& b) {
  if (!same_skeleton(a, b)) {
    throw std::runtime_error("leveling: models have different state/action sets");
  }
  for (int p = 0; p < a.num_pairs(); ++p) {
    for (int t = 0; t < a.num_states(); ++t) {
      if ((a.kernel[p](t) > 0.0) != (b.kernel[p](t) > 0.0)) {
        return std::numeric_limits<double>::infinity();
      }
    }
  }
  return model_distance(a, b);
}

}  // namespace avgmdp
