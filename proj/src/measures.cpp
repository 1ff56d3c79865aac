#include "avgmdp/measures.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>

#include "avgmdp/simplex.hpp"
#include "avgmdp/solve.hpp"

namespace avgmdp {

namespace {
constexpr double kTolFlow = 1e-9;
}

Eigen::VectorXd state_marginal(const InvariantMeasure& mu, const Mdp& m) {
  Eigen::VectorXd mass = Eigen::VectorXd::Zero(m.num_states());
  for (int p = 0; p < m.num_pairs(); ++p) {
    mass(m.state_action(p).first) += mu.weights(p);
  }
  return mass;
}

double flow_residual(const InvariantMeasure& mu, const Mdp& m) {
  Eigen::VectorXd mass = state_marginal(mu, m);
  Eigen::VectorXd inflow = Eigen::VectorXd::Zero(m.num_states());
  for (int p = 0; p < m.num_pairs(); ++p) {
    inflow += mu.weights(p) * m.kernel[p];
  }
  return (mass - inflow).cwiseAbs().maxCoeff();
}

bool is_invariant(const InvariantMeasure& mu, const Mdp& m, double eps) {
  if (mu.weights.size() != m.num_pairs()) return false;
  if (mu.weights.minCoeff() < -kTolFlow) return false;
  if (flow_residual(mu, m) > kTolFlow) return false;
  if (mu.is_probability && std::abs(mu.weights.sum() - 1.0) > kTolFlow) return false;
  if (eps > 0.0) {
    Eigen::VectorXd mass = state_marginal(mu, m);
    for (int p = 0; p < m.num_pairs(); ++p) {
      if (mu.weights(p) < eps * mass(m.state_action(p).first) - kTolFlow) return false;
    }
  }
  return true;
}

InvariantMeasure unichain_policy_measure(const Mdp& m, const StochasticPolicy& pi) {
  ChainAnalysis ca = analyze_chain(induced_chain(m, pi));
  if (ca.recurrent_classes.size() != 1) {
    throw std::runtime_error("measures: policy is not unichain");
  }
  InvariantMeasure mu;
  mu.weights = Eigen::VectorXd::Zero(m.num_pairs());
  const auto& states = ca.recurrent_classes[0];
  for (std::size_t i = 0; i < states.size(); ++i) {
    int s = states[i];
    for (int a = 0; a < m.num_actions(s); ++a) {
      mu.weights(m.pair_index(s, a)) = ca.stationary[0](i) * pi.probs[s][a];
    }
  }
  mu.is_probability = true;
  return mu;
}

InvariantMeasure policy_stationary_measure(const StochasticPolicy& pi, const Mdp& m) {
  pi.validate(m, 1e-9);
  for (int s = 0; s < m.num_states(); ++s) {
    for (int a = 0; a < m.num_actions(s); ++a) {
      if (pi.probs[s][a] <= 0.0) {
        throw std::runtime_error("measures: policy not fully randomized (NotFullySupported)");
      }
    }
  }
  return unichain_policy_measure(m, pi);
}

StochasticPolicy induced_policy(const InvariantMeasure& mu, const Mdp& m) {
  Eigen::VectorXd mass = state_marginal(mu, m);
  StochasticPolicy pi;
  pi.probs.resize(m.num_states());
  for (int s = 0; s < m.num_states(); ++s) {
    if (mass(s) <= 0.0) {
      throw std::runtime_error("measures: zero state mass (DegenerateMeasure)");
    }
    pi.probs[s].resize(m.num_actions(s));
    for (int a = 0; a < m.num_actions(s); ++a) {
      pi.probs[s][a] = mu.weights(m.pair_index(s, a)) / mass(s);
    }
  }
  return pi;
}

InvariantMeasure covering_measure(const Mdp& m) {
  if (!is_communicating(m)) {
    throw std::runtime_error("measures: model is not communicating (NotCommunicating)");
  }
  const int S = m.num_states();
  const int P = m.num_pairs();
  // Variables [mu_0 .. mu_{P-1}, delta]; maximize delta subject to flow,
  // total mass one, and mu(p) >= delta.
  LinearProgram lp(P + 1);
  for (int s = 0; s < S; ++s) {
    std::vector<double> row(P + 1, 0.0);
    for (int p = 0; p < P; ++p) {
      double coef = (m.state_action(p).first == s ? 1.0 : 0.0) - m.kernel[p](s);
      row[p] = coef;
    }
    lp.add_eq(row, 0.0);
  }
  {
    std::vector<double> row(P + 1, 0.0);
    for (int p = 0; p < P; ++p) row[p] = 1.0;
    lp.add_eq(row, 1.0);
  }
  for (int p = 0; p < P; ++p) {
    std::vector<double> row(P + 1, 0.0);
    row[p] = 1.0;
    row[P] = -1.0;
    lp.add_ge(row, 0.0);
  }
  lp.c[P] = -1.0;  // maximize delta
  LpSolution sol = solve_lp(lp);
  if (sol.status != LpStatus::Optimal) {
    throw std::runtime_error("measures: covering linear program did not converge");
  }
  InvariantMeasure mu;
  mu.weights = Eigen::VectorXd(P);
  for (int p = 0; p < P; ++p) mu.weights(p) = std::max(sol.x(p), 0.0);
  mu.weights /= mu.weights.sum();
  mu.is_probability = true;
  return mu;
}

UniformizedMeasure uniformize(const InvariantMeasure& mu, const Mdp& m, double eps) {
  UniformizedMeasure out;
  out.epsilon_effective = eps;
  if (eps <= 0.0) {
    out.measure = mu;
    out.epsilon_effective = std::max(eps, 0.0);
    return out;
  }
  double bound = 1.0 / (m.num_pairs() * diameter(m));
  if (eps >= bound) {
    out.epsilon_effective = 0.99 * bound;
    out.clamped = true;
  }
  InvariantMeasure cov = covering_measure(m);
  double lambda = out.epsilon_effective / cov.weights.minCoeff();
  out.measure.weights = (1.0 - lambda) * mu.weights + lambda * cov.weights;
  out.measure.is_probability = mu.is_probability;
  return out;
}

UnichainDecomposition decompose_unichain(const InvariantMeasure& mu, const Mdp& m) {
  const int S = m.num_states();
  const int P = m.num_pairs();
  if (mu.weights.minCoeff() < -kTolFlow || flow_residual(mu, m) > kTolFlow) {
    throw std::runtime_error("measures: measure is not invariant (NotInvariant)");
  }
  UnichainDecomposition out;
  Eigen::VectorXd work = mu.weights.cwiseMax(0.0);
  const double scale = std::max(1.0, work.maxCoeff());
  const double thresh = 1e-12 * scale;

  for (int round = 0; round <= P && work.maxCoeff() > thresh; ++round) {
    std::vector<char> supported(P, 0);
    for (int p = 0; p < P; ++p) supported[p] = work(p) > thresh;

    // Islands: closed strongly connected components of the supported-pair
    // state graph. Every state carrying mass of an invariant measure lies in
    // one.
    std::vector<char> has_state(S, 0);
    std::vector<std::vector<int>> adj(S);
    for (int p = 0; p < P; ++p) {
      if (!supported[p]) continue;
      int s = m.state_action(p).first;
      has_state[s] = 1;
      for (int t = 0; t < S; ++t) {
        if (m.kernel[p](t) > 0.0) adj[s].push_back(t);
      }
    }
    auto sccs = strongly_connected_components(adj);
    std::vector<int> scc_of(S, -1);
    for (std::size_t c = 0; c < sccs.size(); ++c)
      for (int s : sccs[c]) scc_of[s] = static_cast<int>(c);
    std::vector<char> closed(sccs.size(), 1);
    for (int s = 0; s < S; ++s) {
      for (int t : adj[s]) {
        if (scc_of[t] != scc_of[s]) closed[scc_of[s]] = 0;
      }
    }

    // Lowest supported pair whose state sits in a closed component.
    int p0 = -1;
    for (int p = 0; p < P; ++p) {
      if (!supported[p]) continue;
      int s = m.state_action(p).first;
      if (closed[scc_of[s]]) {
        p0 = p;
        break;
      }
    }
    if (p0 < 0) break;  // numerically degenerate leftovers
    int island_id = scc_of[m.state_action(p0).first];
    std::vector<char> in_island(S, 0);
    for (int s : sccs[island_id])
      if (has_state[s]) in_island[s] = 1;

    // Simple cycle: walk lowest supported pairs until a state repeats.
    std::vector<int> walk_pair, walk_state;
    std::vector<int> seen(S, -1);
    int s = m.state_action(p0).first;
    while (seen[s] < 0) {
      seen[s] = static_cast<int>(walk_state.size());
      int chosen = -1;
      for (int a = 0; a < m.num_actions(s); ++a) {
        int p = m.pair_index(s, a);
        if (supported[p]) {
          chosen = p;
          break;
        }
      }
      walk_state.push_back(s);
      walk_pair.push_back(chosen);
      int next = -1;
      for (int t = 0; t < S; ++t) {
        if (m.kernel[chosen](t) > 0.0 && in_island[t]) {
          next = t;
          break;
        }
      }
      s = next;
    }
    std::vector<int> cycle_pairs(walk_pair.begin() + seen[s], walk_pair.end());
    std::vector<char> on_cycle(S, 0);
    for (int p : cycle_pairs) on_cycle[m.state_action(p).first] = 1;

    // Unichain completion: cycle actions on the cycle, uniform over supported
    // pairs elsewhere in the island, and a funnel policy stepping down a
    // breadth-first distance to the island everywhere else.
    std::vector<double> dist(S, std::numeric_limits<double>::infinity());
    std::deque<int> queue;
    for (int t = 0; t < S; ++t) {
      if (in_island[t]) {
        dist[t] = 0.0;
        queue.push_back(t);
      }
    }
    std::vector<std::vector<int>> rev(S);
    for (int p = 0; p < P; ++p) {
      int ps = m.state_action(p).first;
      for (int t = 0; t < S; ++t) {
        if (m.kernel[p](t) > 0.0) rev[t].push_back(ps);
      }
    }
    while (!queue.empty()) {
      int t = queue.front();
      queue.pop_front();
      for (int u : rev[t]) {
        if (!std::isfinite(dist[u])) {
          dist[u] = dist[t] + 1.0;
          queue.push_back(u);
        }
      }
    }
    StochasticPolicy pi;
    pi.probs.resize(S);
    for (int st = 0; st < S; ++st) {
      pi.probs[st] = Eigen::VectorXd::Zero(m.num_actions(st));
      if (on_cycle[st]) {
        for (int p : cycle_pairs) {
          if (m.state_action(p).first == st) pi.probs[st][m.state_action(p).second] = 1.0;
        }
      } else if (in_island[st]) {
        int count = 0;
        for (int a = 0; a < m.num_actions(st); ++a)
          if (supported[m.pair_index(st, a)]) ++count;
        for (int a = 0; a < m.num_actions(st); ++a)
          if (supported[m.pair_index(st, a)]) pi.probs[st][a] = 1.0 / count;
      } else if (std::isfinite(dist[st])) {
        int best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (int a = 0; a < m.num_actions(st); ++a) {
          int p = m.pair_index(st, a);
          double d = std::numeric_limits<double>::infinity();
          for (int t = 0; t < S; ++t) {
            if (m.kernel[p](t) > 0.0) d = std::min(d, dist[t]);
          }
          if (d < best_d - 1e-12) {
            best_d = d;
            best = a;
          }
        }
        pi.probs[st][best] = 1.0;
      } else {
        for (int a = 0; a < m.num_actions(st); ++a) pi.probs[st][a] = 1.0 / m.num_actions(st);
      }
    }

    // Invariant measure of the recurrent class containing the cycle.
    ChainAnalysis ca = analyze_chain(induced_chain(m, pi));
    int cls = -1;
    int cycle_state = m.state_action(cycle_pairs[0]).first;
    for (std::size_t c = 0; c < ca.recurrent_classes.size(); ++c) {
      if (std::find(ca.recurrent_classes[c].begin(), ca.recurrent_classes[c].end(), cycle_state) !=
          ca.recurrent_classes[c].end()) {
        cls = static_cast<int>(c);
        break;
      }
    }
    if (cls < 0) break;
    InvariantMeasure mu0;
    mu0.weights = Eigen::VectorXd::Zero(P);
    const auto& states = ca.recurrent_classes[cls];
    for (std::size_t i = 0; i < states.size(); ++i) {
      int st = states[i];
      for (int a = 0; a < m.num_actions(st); ++a) {
        mu0.weights(m.pair_index(st, a)) = ca.stationary[cls](i) * pi.probs[st][a];
      }
    }
    mu0.is_probability = true;

    double lambda = std::numeric_limits<double>::infinity();
    int argmin = -1;
    for (int p = 0; p < P; ++p) {
      if (mu0.weights(p) > 1e-15) {
        double ratio = work(p) / mu0.weights(p);
        if (ratio < lambda) {
          lambda = ratio;
          argmin = p;
        }
      }
    }
    if (!(lambda > 0.0) || !std::isfinite(lambda)) break;
    work -= lambda * mu0.weights;
    work = work.cwiseMax(0.0);
    if (argmin >= 0) work(argmin) = 0.0;
    out.terms.push_back(UnichainTerm{lambda, pi, mu0, cycle_pairs});
  }
  out.residual = work.maxCoeff();
  return out;
}

}  // namespace avgmdp
