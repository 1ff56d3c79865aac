#include "avgmdp/solve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "avgmdp/simplex.hpp"

namespace avgmdp {

namespace {

constexpr double kGainTol = 1e-9;       // policy counts as gain optimal within this
constexpr double kDominanceTol = 1e-9;  // pointwise bias-dominance slack

// Calls fn with every deterministic policy (lexicographic order, action index
// 0 first at every state). Returns false without calling fn when the number of
// policies exceeds cap.
template <class F>
bool for_each_selector(const Mdp& m, long cap, F&& fn) {
  const int S = m.num_states();
  long total = 1;
  for (int s = 0; s < S; ++s) {
    total *= m.num_actions(s);
    if (total > cap) return false;
  }
  DeterministicPolicy f(S, 0);
  while (true) {
    fn(const_cast<const DeterministicPolicy&>(f));
    int s = S - 1;
    while (s >= 0) {
      if (++f[s] < m.num_actions(s)) break;
      f[s] = 0;
      --s;
    }
    if (s < 0) break;
  }
  return true;
}

// Coefficients of h(1..S-1) in the optimality residual of pair p:
//   res(p; h) = (g - r(p)) + sum_j coef_j h_j,  coef_j = [s(p)==j] - k_j(p).
Eigen::VectorXd residual_coeffs(const Mdp& m, int p) {
  const int S = m.num_states();
  auto [s, a] = m.state_action(p);
  (void)a;
  Eigen::VectorXd coef = Eigen::VectorXd::Zero(S - 1);
  for (int j = 1; j < S; ++j) {
    coef(j - 1) = (j == s ? 1.0 : 0.0) - m.kernel[p](j);
  }
  return coef;
}

// Exact optimal gain via linear programming:
//   minimize g  s.t.  g + h(s) - k(s,a).h >= r(s,a) for all pairs, h(0) = 0.
// Free variables are split into nonnegative parts.
double optimal_gain_lp(const Mdp& m) {
  const int S = m.num_states();
  const int P = m.num_pairs();
  if (S == 1) {
    double g = 0.0;
    for (int p = 0; p < P; ++p) g = std::max(g, m.reward[p]);
    return g;
  }
  const int n = 2 + 2 * (S - 1);  // g+/g-, then h+_j / h-_j for j = 1..S-1
  LinearProgram lp(n);
  for (int p = 0; p < P; ++p) {
    Eigen::VectorXd coef = residual_coeffs(m, p);
    std::vector<double> row(n, 0.0);
    row[0] = 1.0;
    row[1] = -1.0;
    for (int j = 0; j < S - 1; ++j) {
      row[2 + j] = coef(j);
      row[2 + (S - 1) + j] = -coef(j);
    }
    lp.add_ge(row, m.reward[p]);
  }
  lp.c[0] = 1.0;
  lp.c[1] = -1.0;
  LpSolution sol = solve_lp(lp);
  if (sol.status != LpStatus::Optimal) {
    throw SolverError("solve: optimal-gain linear program did not converge");
  }
  return sol.objective;
}

// Exact worst-case residuals for two-state models, avoiding the generic
// simplex: with h(0) pinned to zero each selector's solution set is an
// interval in x = h(1), and linear residuals are maximized at its endpoints.
// Returns false when no selector is feasible (caller falls back).
bool gaps_two_state(const Mdp& m, double g, Eigen::VectorXd& gaps) {
  const int P = m.num_pairs();
  const double inf = std::numeric_limits<double>::infinity();
  constexpr double kZero = 1e-9;   // coefficient treated as zero below this
  constexpr double kFeas = 1e-8;   // feasibility slack, matches the LP phase-1 tolerance
  std::vector<double> c(P), d(P);  // res(p; x) = d[p] + c[p] * x
  for (int p = 0; p < P; ++p) {
    int s = m.state_action(p).first;
    c[p] = (s == 1 ? 1.0 : 0.0) - m.kernel[p](1);
    d[p] = g - m.reward[p];
  }
  Eigen::VectorXd best = Eigen::VectorXd::Constant(P, -inf);
  bool any = false;
  for (int a0 = 0; a0 < m.num_actions(0); ++a0) {
    for (int a1 = 0; a1 < m.num_actions(1); ++a1) {
      bool feasible = true;
      bool pinned = false;
      double pin = 0.0;
      auto add_eq = [&](int p) {
        if (std::abs(c[p]) > kZero) {
          double x = -d[p] / c[p];
          if (pinned && std::abs(x - pin) > kFeas) feasible = false;
          if (!pinned) pin = x;
          pinned = true;
        } else if (std::abs(d[p]) > kFeas) {
          feasible = false;
        }
      };
      add_eq(m.pair_index(0, a0));
      add_eq(m.pair_index(1, a1));
      if (!feasible) continue;
      double lo = -inf, hi = inf;
      for (int p = 0; p < P && feasible; ++p) {
        if (c[p] > kZero) {
          lo = std::max(lo, -d[p] / c[p]);
        } else if (c[p] < -kZero) {
          hi = std::min(hi, -d[p] / c[p]);
        } else if (d[p] < -kFeas) {
          feasible = false;
        }
      }
      if (!feasible) continue;
      if (pinned) {
        if (pin < lo - kFeas || pin > hi + kFeas) continue;
        lo = hi = pin;
      } else if (lo > hi + kFeas) {
        continue;
      }
      any = true;
      for (int p = 0; p < P; ++p) {
        double end = c[p] > kZero ? hi : (c[p] < -kZero ? lo : 0.0);
        if (!std::isfinite(end)) continue;  // unbounded residual: skip, as the LP path does
        double v = d[p] + c[p] * end;
        best(p) = std::max(best(p), v);
      }
    }
  }
  if (!any) return false;
  gaps = best;
  return true;
}

// Damped relative value iteration; used as a fallback when selector
// enumeration is out of budget. Returns (gain, bias pinned at state 0).
std::pair<double, Eigen::VectorXd> rvi_gain_bias(const Mdp& m, double tol, long max_iter) {
  const int S = m.num_states();
  Eigen::VectorXd v = Eigen::VectorXd::Zero(S);
  double g = 0.0;
  for (long it = 0; it < max_iter; ++it) {
    Eigen::VectorXd tv(S);
    for (int s = 0; s < S; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      for (int a = 0; a < m.num_actions(s); ++a) {
        int p = m.pair_index(s, a);
        best = std::max(best, m.reward[p] + m.kernel[p].dot(v));
      }
      tv(s) = best;
    }
    Eigen::VectorXd delta = tv - v;
    double lo = delta.minCoeff(), hi = delta.maxCoeff();
    g = 0.5 * (lo + hi);
    v = 0.5 * v + 0.5 * tv;
    if (hi - lo < tol) break;
  }
  Eigen::VectorXd h = v.array() - v(0);
  return {g, h};
}

struct SelectorLpBase {
  LinearProgram lp;  // feasibility program for one selector's solution set
  explicit SelectorLpBase(int n) : lp(n) {}
};

// Builds the constraint system of P_f = { h : res(p; h) >= 0 for all pairs,
// res(s, f(s); h) = 0 for all states, h(0) = 0 } on split variables
// [h+_1.., h-_1..]. Residual constants (g - r) are moved to the right side.
LinearProgram selector_polytope(const Mdp& m, const DeterministicPolicy& f, double g,
                                const std::vector<Eigen::VectorXd>& coefs) {
  const int S = m.num_states();
  const int P = m.num_pairs();
  const int n = 2 * (S - 1);
  LinearProgram lp(n);
  auto fill = [&](int p, std::vector<double>& row) {
    for (int j = 0; j < S - 1; ++j) {
      row[j] = coefs[p](j);
      row[(S - 1) + j] = -coefs[p](j);
    }
  };
  for (int s = 0; s < S; ++s) {
    int p = m.pair_index(s, f[s]);
    std::vector<double> row(n, 0.0);
    fill(p, row);
    lp.add_eq(row, m.reward[p] - g);
  }
  for (int p = 0; p < P; ++p) {
    std::vector<double> row(n, 0.0);
    fill(p, row);
    lp.add_ge(row, m.reward[p] - g);
  }
  return lp;
}

Eigen::MatrixXd induced_matrix(const Mdp& m, const DeterministicPolicy& f) {
  return induced_chain(m, f).P;
}

// Minimal expected arrival times to `target` over all policies, solved by
// value iteration plus policy-iteration refinement. Entry `target` is 0.
Eigen::VectorXd min_hitting_times(const Mdp& m, int target) {
  const int S = m.num_states();
  Eigen::VectorXd v = Eigen::VectorXd::Zero(S);
  auto apply = [&](const Eigen::VectorXd& x) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(S);
    for (int s = 0; s < S; ++s) {
      if (s == target) continue;
      double best = std::numeric_limits<double>::infinity();
      for (int a = 0; a < m.num_actions(s); ++a) {
        int p = m.pair_index(s, a);
        double val = 1.0;
        for (int t = 0; t < S; ++t) {
          if (t == target) continue;
          val += m.kernel[p](t) * x(t);
        }
        best = std::min(best, val);
      }
      out(s) = best;
    }
    return out;
  };
  for (long it = 0; it < 200000; ++it) {
    Eigen::VectorXd nv = apply(v);
    double diff = (nv - v).cwiseAbs().maxCoeff();
    v = nv;
    if (diff < 1e-13) break;
  }
  auto greedy = [&](const Eigen::VectorXd& x) {
    DeterministicPolicy f(S, 0);
    for (int s = 0; s < S; ++s) {
      if (s == target) continue;
      double best = std::numeric_limits<double>::infinity();
      for (int a = 0; a < m.num_actions(s); ++a) {
        int p = m.pair_index(s, a);
        double val = 1.0;
        for (int t = 0; t < S; ++t) {
          if (t == target) continue;
          val += m.kernel[p](t) * x(t);
        }
        if (val < best - 1e-12) {
          best = val;
          f[s] = a;
        }
      }
    }
    return f;
  };
  auto eval = [&](const DeterministicPolicy& f) -> Eigen::VectorXd {
    // Solve (I - Q) x = 1 on states != target, Q = rows/cols of the induced
    // kernel without the target.
    std::vector<int> keep;
    for (int s = 0; s < S; ++s)
      if (s != target) keep.push_back(s);
    const int n = static_cast<int>(keep.size());
    Eigen::MatrixXd A = Eigen::MatrixXd::Identity(n, n);
    for (int i = 0; i < n; ++i) {
      int p = m.pair_index(keep[i], f[keep[i]]);
      for (int j = 0; j < n; ++j) A(i, j) -= m.kernel[p](keep[j]);
    }
    Eigen::VectorXd x = A.partialPivLu().solve(Eigen::VectorXd::Ones(n));
    Eigen::VectorXd full = Eigen::VectorXd::Zero(S);
    for (int i = 0; i < n; ++i) full(keep[i]) = x(i);
    return full;
  };
  DeterministicPolicy f = greedy(v);
  for (int round = 0; round < 200; ++round) {
    Eigen::VectorXd x = eval(f);
    bool ok = x.allFinite() && x.minCoeff() > -1e-9;
    if (!ok) return v;  // keep the value-iteration estimate
    DeterministicPolicy f2 = greedy(x);
    if (f2 == f) return x;
    f = f2;
    v = x;
  }
  return eval(f);
}

}  // namespace

double optimal_gain(const Mdp& m) { return optimal_gain_lp(m); }

bool is_communicating(const Mdp& m) {
  const int S = m.num_states();
  std::vector<std::vector<int>> adj(S);
  for (int p = 0; p < m.num_pairs(); ++p) {
    auto [s, a] = m.state_action(p);
    (void)a;
    for (int t = 0; t < S; ++t) {
      if (m.kernel[p](t) > 0.0) adj[s].push_back(t);
    }
  }
  return strongly_connected_components(adj).size() == 1;
}

PolicyValue evaluate_policy(const Mdp& m, const StochasticPolicy& pi) {
  pi.validate(m, 1e-9);
  MarkovChain chain = induced_chain(m, pi);
  ChainAnalysis ca = analyze_chain(chain);
  PolicyValue out;
  out.gain = ca.gain;
  out.bias = ca.bias;
  out.gaps.resize(m.num_pairs());
  for (int p = 0; p < m.num_pairs(); ++p) {
    auto [s, a] = m.state_action(p);
    (void)a;
    out.gaps(p) = ca.gain(s) + ca.bias(s) - m.reward[p] - m.kernel[p].dot(ca.bias);
  }
  for (std::size_t c = 0; c < ca.recurrent_classes.size(); ++c) {
    std::vector<int> cls_pairs;
    std::vector<double> cls_mass;
    const auto& states = ca.recurrent_classes[c];
    for (std::size_t i = 0; i < states.size(); ++i) {
      int s = states[i];
      for (int a = 0; a < m.num_actions(s); ++a) {
        double w = pi.probs[s][a];
        if (w > 1e-15) {
          cls_pairs.push_back(m.pair_index(s, a));
          cls_mass.push_back(ca.stationary[c](i) * w);
        }
      }
    }
    out.recurrent_classes.push_back(std::move(cls_pairs));
    out.class_stationary.push_back(std::move(cls_mass));
  }
  return out;
}

PolicyValue evaluate_policy(const Mdp& m, const DeterministicPolicy& pi) {
  return evaluate_policy(m, StochasticPolicy::pure(m, pi));
}

std::vector<std::vector<int>> pair_components(const Mdp& m, const std::vector<int>& pairs) {
  const int S = m.num_states();

  // Closure: repeatedly drop pairs whose kernel support leaves the states
  // still owning at least one pair.
  auto closure = [&](std::vector<int> w) {
    while (true) {
      std::vector<char> has(S, 0);
      for (int p : w) has[m.state_action(p).first] = 1;
      std::vector<int> keep;
      for (int p : w) {
        bool ok = true;
        for (int t = 0; t < S && ok; ++t) {
          if (m.kernel[p](t) > 0.0 && !has[t]) ok = false;
        }
        if (ok) keep.push_back(p);
      }
      if (keep.size() == w.size()) return w;
      w = std::move(keep);
    }
  };

  std::vector<std::vector<int>> out;
  std::vector<std::vector<int>> stack{pairs};
  while (!stack.empty()) {
    std::vector<int> w = closure(stack.back());
    stack.pop_back();
    if (w.empty()) continue;
    std::vector<int> states;
    for (int p : w) states.push_back(m.state_action(p).first);
    std::sort(states.begin(), states.end());
    states.erase(std::unique(states.begin(), states.end()), states.end());
    std::vector<int> local(S, -1);
    for (std::size_t i = 0; i < states.size(); ++i) local[states[i]] = static_cast<int>(i);
    std::vector<std::vector<int>> adj(states.size());
    for (int p : w) {
      int s = local[m.state_action(p).first];
      for (int t = 0; t < S; ++t) {
        if (m.kernel[p](t) > 0.0) adj[s].push_back(local[t]);
      }
    }
    auto sccs = strongly_connected_components(adj);
    if (sccs.size() == 1 && sccs[0].size() == states.size()) {
      std::sort(w.begin(), w.end());
      out.push_back(std::move(w));
      continue;
    }
    for (const auto& scc : sccs) {
      std::vector<char> in_scc(S, 0);
      for (int i : scc) in_scc[states[i]] = 1;
      std::vector<int> sub;
      for (int p : w) {
        if (!in_scc[m.state_action(p).first]) continue;
        bool ok = true;
        for (int t = 0; t < S && ok; ++t) {
          if (m.kernel[p](t) > 0.0 && !in_scc[t]) ok = false;
        }
        if (ok) sub.push_back(p);
      }
      if (!sub.empty()) stack.push_back(std::move(sub));
    }
  }
  std::sort(out.begin(), out.end(),
            [](const std::vector<int>& a, const std::vector<int>& b) { return a[0] < b[0]; });
  return out;
}

OptimalSolution classify_optimal(const Mdp& m, const SolveOptions& opts) {
  if (!is_communicating(m)) {
    throw std::runtime_error("solve: model is not communicating");
  }
  const int S = m.num_states();
  const int P = m.num_pairs();
  OptimalSolution out;
  out.opt_gain = optimal_gain_lp(m);
  out.gaps = Eigen::VectorXd::Zero(P);

  // Worst-case residual over every solution of the optimality equation:
  // enumerate action selectors, and for each selector whose solution set is
  // nonempty maximize each pair's residual by a small linear program (exact
  // interval arithmetic when there are two states).
  bool enumerated = false;
  if (S == 1) {
    for (int p = 0; p < P; ++p) out.gaps(p) = out.opt_gain - m.reward[p];
    enumerated = true;
  } else if (S == 2) {
    enumerated = gaps_two_state(m, out.opt_gain, out.gaps);
  } else {
    std::vector<Eigen::VectorXd> coefs(P);
    for (int p = 0; p < P; ++p) coefs[p] = residual_coeffs(m, p);
    Eigen::VectorXd best = Eigen::VectorXd::Constant(P, -std::numeric_limits<double>::infinity());
    int feasible_selectors = 0;
    enumerated = for_each_selector(m, opts.enum_cap, [&](const DeterministicPolicy& f) {
      LinearProgram base = selector_polytope(m, f, out.opt_gain, coefs);
      LpSolution feas = solve_lp(base);
      if (feas.status != LpStatus::Optimal) return;
      ++feasible_selectors;
      for (int p = 0; p < P; ++p) {
        LinearProgram lp = base;
        for (int j = 0; j < S - 1; ++j) {
          lp.c[j] = -coefs[p](j);
          lp.c[(S - 1) + j] = coefs[p](j);
        }
        LpSolution sol = solve_lp(lp);
        if (sol.status != LpStatus::Optimal) continue;
        double res = (out.opt_gain - m.reward[p]) - sol.objective;
        best(p) = std::max(best(p), res);
      }
    });
    if (enumerated && feasible_selectors == 0) enumerated = false;
    if (enumerated) out.gaps = best;
  }
  if (!enumerated) {
    auto [g, h] = rvi_gain_bias(m, opts.tol_solve, 2000000);
    (void)g;
    for (int p = 0; p < P; ++p) {
      auto [s, a] = m.state_action(p);
      (void)a;
      out.gaps(p) = out.opt_gain + h(s) - m.reward[p] - m.kernel[p].dot(h);
    }
  }
  for (int p = 0; p < P; ++p) out.gaps(p) = std::max(out.gaps(p), 0.0);

  for (int p = 0; p < P; ++p) {
    if (out.gaps(p) <= opts.tol_gap) out.weakly_optimal_pairs.push_back(p);
  }

  // Communicating components of the weakly optimal pairs; keep the ones whose
  // uniform policy actually achieves the optimal gain.
  auto comps = pair_components(m, out.weakly_optimal_pairs);
  for (auto& comp : comps) {
    std::vector<int> states;
    for (int p : comp) states.push_back(m.state_action(p).first);
    std::sort(states.begin(), states.end());
    states.erase(std::unique(states.begin(), states.end()), states.end());
    std::vector<int> local(S, -1);
    for (std::size_t i = 0; i < states.size(); ++i) local[states[i]] = static_cast<int>(i);
    const int n = static_cast<int>(states.size());
    Eigen::MatrixXd Pc = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd rc = Eigen::VectorXd::Zero(n);
    std::vector<int> count(n, 0);
    for (int p : comp) {
      int i = local[m.state_action(p).first];
      ++count[i];
      rc(i) += m.reward[p];
      for (int t = 0; t < S; ++t) {
        if (m.kernel[p](t) > 0.0) Pc(i, local[t]) += m.kernel[p](t);
      }
    }
    for (int i = 0; i < n; ++i) {
      Pc.row(i) /= count[i];
      rc(i) /= count[i];
    }
    ChainAnalysis ca = analyze_chain(MarkovChain{Pc, rc});
    double g = ca.gain(0);
    if (std::abs(g - out.opt_gain) <= 1e-9) {
      out.components.push_back(comp);
      out.optimal_pairs.insert(out.optimal_pairs.end(), comp.begin(), comp.end());
    }
  }
  std::sort(out.optimal_pairs.begin(), out.optimal_pairs.end());
  return out;
}

OptimalSolution solve_optimal(const Mdp& m, const SolveOptions& opts) {
  OptimalSolution out = classify_optimal(m, opts);
  const int S = m.num_states();

  // Bias-optimal policy: among deterministic policies with gain g* at every
  // state, take the one with pointwise maximal bias (first in enumeration
  // order on ties).
  bool have = false;
  DeterministicPolicy best_policy;
  Eigen::VectorXd best_bias;
  std::vector<std::pair<DeterministicPolicy, Eigen::VectorXd>> candidates;
  bool full = for_each_selector(m, opts.enum_cap, [&](const DeterministicPolicy& f) {
    ChainAnalysis ca = analyze_chain(induced_chain(m, f));
    if ((ca.gain.array() - out.opt_gain).abs().maxCoeff() > kGainTol) return;
    candidates.emplace_back(f, ca.bias);
  });
  if (full && !candidates.empty()) {
    for (const auto& [f, h] : candidates) {
      if (!have) {
        best_policy = f;
        best_bias = h;
        have = true;
        continue;
      }
      bool dominates = ((h - best_bias).array() >= -kDominanceTol).all();
      bool strictly = ((h - best_bias).array() > kDominanceTol).any();
      if (dominates && strictly) {
        best_policy = f;
        best_bias = h;
      }
    }
    // Second pass: confirm the winner dominates every candidate; fall back to
    // the lexicographically largest bias if the scan order hid a dominator.
    for (const auto& [f, h] : candidates) {
      if (((h - best_bias).array() > 10 * kDominanceTol).any()) {
        bool better = false;
        for (int s = 0; s < S; ++s) {
          if (std::abs(h(s) - best_bias(s)) > kDominanceTol) {
            better = h(s) > best_bias(s);
            break;
          }
        }
        if (better) {
          best_policy = f;
          best_bias = h;
        }
      }
    }
  }
  if (!have) {
    // Enumeration out of budget: greedy policy on the iterative solution.
    auto [g, h] = rvi_gain_bias(m, opts.tol_solve, 2000000);
    (void)g;
    best_policy.assign(S, 0);
    for (int s = 0; s < S; ++s) {
      double best_val = -std::numeric_limits<double>::infinity();
      for (int a = 0; a < m.num_actions(s); ++a) {
        int p = m.pair_index(s, a);
        double val = m.reward[p] + m.kernel[p].dot(h);
        if (val > best_val + 1e-12) {
          best_val = val;
          best_policy[s] = a;
        }
      }
    }
    best_bias = analyze_chain(induced_chain(m, best_policy)).bias;
  }
  out.bias_opt_policy = best_policy;
  out.opt_bias = best_bias;
  return out;
}

double diameter(const Mdp& m) {
  const int S = m.num_states();
  if (S == 1) return 1.0;
  double worst = 0.0;
  for (int target = 0; target < S; ++target) {
    Eigen::VectorXd v = min_hitting_times(m, target);
    for (int s = 0; s < S; ++s) {
      if (s != target) worst = std::max(worst, v(s));
    }
  }
  return 1.0 + worst;
}

double policy_diameter(const Mdp& m, const StochasticPolicy& pi) {
  return chain_diameter(induced_chain(m, pi).P);
}

double policy_diameter(const Mdp& m, const DeterministicPolicy& pi) {
  return chain_diameter(induced_chain(m, pi).P);
}

double weighted_diameter(const Mdp& m, const SolveOptions& opts) {
  double worst = 0.0;
  bool full = for_each_selector(m, opts.enum_cap, [&](const DeterministicPolicy& f) {
    worst = std::max(worst, chain_diameter(induced_matrix(m, f)));
  });
  if (!full) {
    // Out of enumeration budget: bound from the uniform policy and the
    // all-lowest-index policy as representatives.
    worst = std::max(worst, chain_diameter(induced_chain(m, StochasticPolicy::uniform(m)).P));
    worst = std::max(worst, chain_diameter(induced_matrix(m, DeterministicPolicy(m.num_states(), 0))));
  }
  return worst;
}

double gain_gap(const Mdp& m, const SolveOptions& opts) {
  double g_star = optimal_gain_lp(m);
  double best = std::numeric_limits<double>::infinity();
  for_each_selector(m, opts.enum_cap, [&](const DeterministicPolicy& f) {
    ChainAnalysis ca = analyze_chain(induced_chain(m, f));
    double dev = (g_star - ca.gain.array()).abs().maxCoeff();
    if (dev > kGainTol) {
      double deficit = (g_star - ca.gain.array()).maxCoeff();
      best = std::min(best, std::max(deficit, 0.0));
    }
  });
  return best;
}

DeviationBounds deviation_bounds(const Mdp& base, const Mdp& other, const StochasticPolicy& pi) {
  if (!same_shape(base, other)) {
    throw std::runtime_error("deviation_bounds: models must share shape and kernel supports");
  }
  MarkovChain c1 = induced_chain(base, pi);
  MarkovChain c2 = induced_chain(other, pi);
  ChainAnalysis a1 = analyze_chain(c1);

  const int S = base.num_states();
  double dr = (c1.r - c2.r).cwiseAbs().maxCoeff();
  double dk = 0.0;
  for (int s = 0; s < S; ++s) {
    dk = std::max(dk, (c1.P.row(s) - c2.P.row(s)).cwiseAbs().sum());
  }
  double D1 = chain_diameter(c1.P);
  double D2 = chain_diameter(c2.P);
  double span1 = a1.bias.maxCoeff() - a1.bias.minCoeff();
  int k = static_cast<int>(a1.recurrent_classes.size());

  DeviationBounds out;
  out.unichain = (k == 1);
  if (out.unichain) {
    ChainAnalysis a11 = analyze_chain(MarkovChain{c1.P, -a1.bias});
    double span11 = a11.bias.maxCoeff() - a11.bias.minCoeff();
    out.gain_bound = dr + 0.5 * span1 * dk;
    out.invariant_measure_bound = std::min(D1, D2) * dk;
    out.bias_bound = 4.0 * D2 * dr + (2.0 * D2 * span1 + 0.5 * span11) * dk;
  } else {
    double dmin = std::min(D1, D2);
    out.gain_bound = dr + (1.0 + 0.25 * k) * dmin * dk;
    out.invariant_measure_bound = (1.0 + 0.25 * k) * dmin * dk;
    out.bias_bound = 6.0 * D2 * dr + ((7.0 + 0.5 * k) * D2 * D1 + 2.0 * D1 * D1) * dk;
  }
  out.diameter_bound = 0.5 * D1 * D2 * dk;

  auto absorb_time = [&](const MarkovChain& c) {
    ChainAnalysis ca = analyze_chain(c);
    std::vector<int> rec;
    for (const auto& cls : ca.recurrent_classes) rec.insert(rec.end(), cls.begin(), cls.end());
    Eigen::VectorXd t = expected_hitting_steps(c.P, rec);
    double worst = 0.0;
    for (int s = 0; s < S; ++s) {
      if (std::isfinite(t(s))) worst = std::max(worst, t(s));
    }
    return worst;
  };
  out.reaching_prob_bound = 0.5 * std::min(absorb_time(c1), absorb_time(c2)) * dk;
  return out;
}

}  // namespace avgmdp
