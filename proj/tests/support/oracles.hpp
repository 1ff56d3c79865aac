#pragma once

// Independent reference computations used by the unit and acceptance tests.
// Everything here is deliberately written from first principles (value
// iteration, explicit small linear programs, closed forms) so it cannot share
// a bug with the library's production solvers.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <avgmdp/model.hpp>
#include <avgmdp/simplex.hpp>

namespace oracles {

inline double kl_bernoulli(double p, double q) {
  const double lo = 1e-9, hi = 1.0 - 1e-9;
  q = std::min(std::max(q, lo), hi);
  double v = 0.0;
  if (p > 0.0) v += p * std::log(p / q);
  if (p < 1.0) v += (1.0 - p) * std::log((1.0 - p) / (1.0 - q));
  return v;
}

// ---------------------------------------------------------------------------
// Optimal gain by plain value iteration (span seminorm stopping).  This is an
// independent check of the linear-programming gain solver.
inline double gain_value_iteration(const avgmdp::Mdp& m, double tol = 1e-11,
                                   long max_iter = 2000000) {
  const int S = m.num_states();
  Eigen::VectorXd v = Eigen::VectorXd::Zero(S);
  Eigen::VectorXd w(S);
  for (long it = 0; it < max_iter; ++it) {
    for (int s = 0; s < S; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      for (int a = 0; a < m.num_actions(s); ++a) {
        int p = m.pair_index(s, a);
        best = std::max(best, m.reward[p] + m.kernel[p].dot(v));
      }
      w(s) = best;
    }
    Eigen::VectorXd d = w - v;
    double span = d.maxCoeff() - d.minCoeff();
    if (span < tol) return 0.5 * (d.maxCoeff() + d.minCoeff());
    // Damping guards against periodic chains.
    v = 0.5 * v + 0.5 * w;
    v.array() -= v(0);
  }
  throw std::runtime_error("oracle: value iteration did not settle");
}

// ---------------------------------------------------------------------------
// Worst-case optimality residuals, straight from the definition: for every
// action selector f whose solution polytope
//   P_f = { h : g + h(s) = r(s,f(s)) + k(s,f(s)).h  for all s,
//               g + h(s) >= r(p) + k(p).h            for all pairs,
//               h(first state) = 0 }
// is nonempty, maximize each pair's residual g + h(s) - r(p) - k(p).h over
// P_f with one explicit LP, and take the maximum over selectors.
inline bool gaps_selector_lps(const avgmdp::Mdp& m, double g, Eigen::VectorXd& gaps,
                              long selector_cap = 20000) {
  const int S = m.num_states();
  const int P = m.num_pairs();
  gaps = Eigen::VectorXd::Zero(P);
  if (S == 1) {
    for (int p = 0; p < P; ++p) gaps(p) = g - m.reward[p];
    return true;
  }
  // Variables: h(1..S-1) split into positive and negative parts (h(0) = 0).
  const int n = 2 * (S - 1);
  auto residual_row = [&](int p) {
    // residual(p) = g + h(s_p) - r(p) - k(p).h  =  g - r(p) + c.h
    std::vector<double> c(S - 1, 0.0);
    auto [s, a] = m.state_action(p);
    (void)a;
    if (s >= 1) c[s - 1] += 1.0;
    for (int t = 1; t < S; ++t) c[t - 1] -= m.kernel[p](t);
    return c;
  };
  std::vector<int> f(S, 0);
  long visited = 0;
  bool any_feasible = false;
  while (true) {
    if (++visited > selector_cap) return any_feasible;
    // Check feasibility of P_f and maximize each pair's residual over it.
    bool feasible = true;
    std::vector<double> maxres(P, 0.0);
    for (int p = 0; p < P && feasible; ++p) {
      avgmdp::LinearProgram lp(n);
      for (int s = 0; s < S; ++s) {
        int q = m.pair_index(s, f[s]);
        std::vector<double> c = residual_row(q);
        std::vector<double> row(n, 0.0);
        for (int j = 0; j < S - 1; ++j) {
          row[j] = c[j];
          row[S - 1 + j] = -c[j];
        }
        lp.add_eq(row, m.reward[q] - g);
      }
      for (int q = 0; q < P; ++q) {
        std::vector<double> c = residual_row(q);
        std::vector<double> row(n, 0.0);
        for (int j = 0; j < S - 1; ++j) {
          row[j] = c[j];
          row[S - 1 + j] = -c[j];
        }
        lp.add_ge(row, m.reward[q] - g);
      }
      {
        // Objective: maximize residual(p)  ==  minimize -(g - r(p) + c.h).
        std::vector<double> c = residual_row(p);
        for (int j = 0; j < S - 1; ++j) {
          lp.c(j) = -c[j];
          lp.c(S - 1 + j) = c[j];
        }
      }
      avgmdp::LpSolution sol = avgmdp::solve_lp(lp);
      if (sol.status == avgmdp::LpStatus::Infeasible) {
        feasible = false;
      } else if (sol.status == avgmdp::LpStatus::Optimal) {
        maxres[p] = g - m.reward[p] - sol.objective;
      } else {
        // Unbounded residual direction: skip this pair's contribution, the
        // production solver does the same (the polytope is bounded for
        // communicating models, so this only guards numerical corner cases).
        maxres[p] = -std::numeric_limits<double>::infinity();
      }
    }
    if (feasible) {
      any_feasible = true;
      for (int p = 0; p < P; ++p) {
        if (std::isfinite(maxres[p])) gaps(p) = std::max(gaps(p), maxres[p]);
      }
    }
    // Next selector (odometer).
    int s = 0;
    while (s < S) {
      if (++f[s] < m.num_actions(s)) break;
      f[s] = 0;
      ++s;
    }
    if (s == S) break;
  }
  for (int p = 0; p < P; ++p) gaps(p) = std::max(gaps(p), 0.0);
  return any_feasible;
}

// ---------------------------------------------------------------------------
// Random communicating instances for the property suites: up to max_states
// states and max_actions actions per state, known kernels, rewards distinct
// multiples of 0.05 inside [0.05, 0.95], kernels from a rounded Dirichlet with
// entries either 0 or at least 0.05.
inline avgmdp::Mdp random_mdp_candidate(std::mt19937& rng, int max_states, int max_actions) {
  std::uniform_int_distribution<int> du(1, max_states);
  avgmdp::Mdp m;
  int S = du(rng);
  std::uniform_int_distribution<int> da(1, max_actions);
  m.name = "random";
  for (int s = 0; s < S; ++s) {
    m.state_names.push_back("s" + std::to_string(s));
    int A = da(rng);
    std::vector<std::string> names;
    for (int a = 0; a < A; ++a) names.push_back("a" + std::to_string(a));
    m.action_names.push_back(names);
  }
  m.rebuild_offsets();
  const int P = m.pair_offset.back();  // rewards not filled yet

  // Distinct reward grid points.
  std::vector<int> ticks;
  for (int k = 1; k <= 19; ++k) ticks.push_back(k);  // 0.05 .. 0.95
  std::shuffle(ticks.begin(), ticks.end(), rng);
  if (P > static_cast<int>(ticks.size())) throw std::runtime_error("oracle: too many pairs");
  m.reward.resize(P);
  for (int p = 0; p < P; ++p) m.reward[p] = 0.05 * ticks[p];

  std::gamma_distribution<double> gamma(0.8, 1.0);
  std::uniform_real_distribution<double> un(0.0, 1.0);
  m.kernel.resize(P);
  m.kernel_space.assign(P, avgmdp::KernelSpace::Known);
  for (int p = 0; p < P; ++p) {
    Eigen::VectorXd w(S);
    for (int t = 0; t < S; ++t) {
      w(t) = un(rng) < 0.35 ? 0.0 : gamma(rng);  // sparse-ish supports
    }
    if (w.sum() <= 0.0) w(static_cast<int>(un(rng) * S)) = 1.0;
    w /= w.sum();
    // Round to 3 decimals, floor nonzero entries at 0.05, renormalize exactly.
    for (int t = 0; t < S; ++t) {
      if (w(t) > 0.0 && w(t) < 0.05) w(t) = 0.05;
      w(t) = std::round(w(t) * 1000.0) / 1000.0;
    }
    double total = w.sum();
    if (total <= 0.0) {
      w.setZero();
      w(0) = 1.0;
      total = 1.0;
    }
    // Put the rounding remainder on the largest entry to keep the 3-decimal grid.
    int arg = 0;
    w.maxCoeff(&arg);
    w(arg) += 1.0 - total;
    m.kernel[p] = w;
  }
  return m;
}

// ---------------------------------------------------------------------------
// Same-support multiplicative perturbation of size at most delta in the
// per-pair norm |r' - r| + l1(k' - k).
inline avgmdp::Mdp perturb_same_support(const avgmdp::Mdp& base, std::mt19937& rng,
                                        double delta) {
  std::uniform_real_distribution<double> un(-1.0, 1.0);
  avgmdp::Mdp out = base;
  const int S = base.num_states();
  for (int p = 0; p < base.num_pairs(); ++p) {
    double dr = 0.5 * delta * un(rng);
    out.reward[p] = std::min(1.0, std::max(0.0, base.reward[p] + dr));
    Eigen::VectorXd k = base.kernel[p];
    // Shift mass between two supported states, keeping the support.
    std::vector<int> sup;
    for (int t = 0; t < S; ++t) {
      if (k(t) > 0.0) sup.push_back(t);
    }
    if (sup.size() >= 2) {
      std::uniform_int_distribution<int> pick(0, static_cast<int>(sup.size()) - 1);
      int i = sup[pick(rng)];
      int j = sup[pick(rng)];
      if (i != j) {
        double room = std::min(k(i) - 1e-4, delta / 8.0);
        if (room > 0.0) {
          double move = room * std::abs(un(rng));
          k(i) -= move;
          k(j) += move;
        }
      }
    }
    out.kernel[p] = k;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Closed-form-grade reference for the two-state family with one costly
// self-loop (reward 0.1), a symmetric detour cycle at reward 0.5 - theta, and
// a free self-loop at reward 0.5.  Reference value of the regularized bound:
//   K  =  0.4 / kl(0.1, 0.5)  +  2 theta / f*  +  eps_reg * ||mu||^2
// where f* = min over x of kl(0.5-theta, x) + kl(0.5-theta, 1-x), minimized
// on a fine grid, and mu is the witness measure (cycle mass 1/f* per pair,
// loop mass 1/kl(0.1,0.5), plus the uniformity floor on the free loop).
inline double theta_reference_bound(double theta, double eps_unif, double eps_reg) {
  const double r_cycle = 0.5 - theta;
  double fstar = std::numeric_limits<double>::infinity();
  for (int i = 1; i < 200000; ++i) {
    double x = i / 200000.0;
    double y = 1.0 - x;
    if (x <= r_cycle || y >= 1.0) continue;
    fstar = std::min(fstar, kl_bernoulli(r_cycle, x) + kl_bernoulli(r_cycle, std::max(y, r_cycle)));
  }
  double m_loop = 1.0 / kl_bernoulli(0.1, 0.5);
  double m_cycle = 1.0 / fstar;  // per pair of the two-pair cycle
  double mu_star = m_cycle, mu_dag = m_cycle, mu_par = m_loop;
  double mu_ddag = eps_unif * (mu_dag + 1e-300) / (1.0 - eps_unif);  // floor at state 2
  double penalty = eps_reg * (mu_star * mu_star + mu_par * mu_par + mu_dag * mu_dag +
                              mu_ddag * mu_ddag);
  return 0.4 * m_loop + 2.0 * theta * m_cycle + penalty;
}

}  // namespace oracles
