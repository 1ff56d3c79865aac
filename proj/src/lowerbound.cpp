#include "avgmdp/lowerbound.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <set>
#include <stdexcept>

#include "avgmdp/leveling.hpp"
#include "avgmdp/simplex.hpp"

namespace avgmdp {

namespace {

constexpr double kRewardLo = 1e-9;
constexpr double kRewardHi = 1.0 - 1e-9;
constexpr double kInf = std::numeric_limits<double>::infinity();

double clamp01(double x) { return std::min(1.0, std::max(0.0, x)); }

struct WaterfillResult {
  bool feasible = false;
  double value = kInf;
  Eigen::VectorXd x;   // rewards on the class pairs (aligned with cand.pairs)
  double gain = 0.0;
};

// Minimal weighted Bernoulli divergence to push the class gain up to target,
// moving only unprotected rewards. Exact via bisection on the dual
// multiplier: stationarity w (x - r) / (x (1 - x)) = lambda nu.
WaterfillResult class_waterfill(const Mdp& m, const RecurrentClassInfo& cand, const Eigen::VectorXd& w,
                                const std::vector<char>& is_protected, double target,
                                const Eigen::VectorXd* nu_override = nullptr) {
  const int n = static_cast<int>(cand.pairs.size());
  const Eigen::VectorXd& nu = nu_override ? *nu_override : cand.nu;
  WaterfillResult res;
  auto reward_at = [&](int i, double lambda) {
    int p = cand.pairs[i];
    double r = clamp01(m.reward[p]);
    if (is_protected[p]) return r;
    double wp = w(p);
    if (wp <= 1e-300) return kRewardHi;
    if (lambda <= 0.0) return r;
    double a = lambda * nu(i);
    if (a <= 1e-300) return r;
    double b = wp;
    double disc = (b - a) * (b - a) + 4.0 * a * b * r;
    double x = (-(b - a) + std::sqrt(std::max(disc, 0.0))) / (2.0 * a);
    return std::min(std::max(x, r), kRewardHi);
  };
  auto gain_at = [&](double lambda) {
    double g = 0.0;
    for (int i = 0; i < n; ++i) g += nu(i) * reward_at(i, lambda);
    return g;
  };
  double g0 = gain_at(0.0);
  double lambda = 0.0;
  if (g0 >= target - 1e-12) {
    lambda = 0.0;
  } else {
    double hi = 1e6;
    if (gain_at(hi) < target - 1e-10) return res;  // infeasible
    double lo = 0.0;
    for (int it = 0; it < 200; ++it) {
      double mid = 0.5 * (lo + hi);
      if (gain_at(mid) < target) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    lambda = hi;
  }
  res.feasible = true;
  res.x.resize(n);
  res.value = 0.0;
  for (int i = 0; i < n; ++i) {
    res.x(i) = reward_at(i, lambda);
    int p = cand.pairs[i];
    if (!is_protected[p]) res.value += w(p) * bernoulli_kl(clamp01(m.reward[p]), res.x(i));
  }
  res.gain = gain_at(lambda);
  return res;
}

// Stationary law of the class policy when the class kernels are replaced.
// Kernels must keep their supports inside the class states.
Eigen::VectorXd class_stationary(const std::vector<int>& states,
                                 const std::vector<Eigen::VectorXd>& kernels_full, int S) {
  const int n = static_cast<int>(states.size());
  std::vector<int> local(S, -1);
  for (int i = 0; i < n; ++i) local[states[i]] = i;
  Eigen::MatrixXd P(n, n);
  P.setZero();
  for (int i = 0; i < n; ++i) {
    for (int t = 0; t < S; ++t) {
      double v = kernels_full[i](t);
      if (v > 0.0) P(i, local[t]) += v;
    }
  }
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(n, n) - P.transpose();
  A.row(n - 1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs(n - 1) = 1.0;
  Eigen::VectorXd nu = A.fullPivLu().solve(rhs);
  nu = nu.cwiseMax(0.0);
  nu /= nu.sum();
  return nu;
}

struct RefineResult {
  bool improved = false;
  double value = kInf;
  Eigen::VectorXd x;                         // rewards on class pairs
  std::vector<Eigen::VectorXd> kernels;      // per class pair, full-size rows
  double gain = 0.0;
};

// Joint reward/kernel search for free-kernel models: mirror descent on the
// kernel log-weights (support preserving), re-solving the exact reward
// waterfill at each kernel iterate. Gradients are by finite differences.
RefineResult refine_free_kernels(const Mdp& m, const RecurrentClassInfo& cand,
                                 const Eigen::VectorXd& w, const std::vector<char>& is_protected,
                                 double target) {
  const int S = m.num_states();
  const int n = static_cast<int>(cand.pairs.size());
  std::vector<int> free_idx;  // class pairs whose kernels may move
  for (int i = 0; i < n; ++i) {
    int p = cand.pairs[i];
    if (!is_protected[p] && m.kernel_space[p] == KernelSpace::FreeSimplex) free_idx.push_back(i);
  }
  RefineResult out;
  if (free_idx.empty()) return out;

  // Coordinates: for each free class pair, log-weights over its support.
  std::vector<std::vector<int>> support(n);
  for (int i = 0; i < n; ++i) {
    int p = cand.pairs[i];
    for (int t = 0; t < S; ++t) {
      if (m.kernel[p](t) > 0.0) support[i].push_back(t);
    }
  }
  std::vector<int> coord_pair, coord_slot;
  for (int i : free_idx) {
    for (std::size_t j = 0; j < support[i].size(); ++j) {
      coord_pair.push_back(i);
      coord_slot.push_back(static_cast<int>(j));
    }
  }
  const int dim = static_cast<int>(coord_pair.size());
  if (dim == 0) return out;

  auto build_kernels = [&](const Eigen::VectorXd& z) {
    std::vector<Eigen::VectorXd> ks(n);
    for (int i = 0; i < n; ++i) ks[i] = m.kernel[cand.pairs[i]];
    for (int i : free_idx) {
      Eigen::VectorXd row = Eigen::VectorXd::Zero(S);
      double total = 0.0;
      for (std::size_t j = 0; j < support[i].size(); ++j) {
        int c = -1;
        for (int d = 0; d < dim; ++d) {
          if (coord_pair[d] == i && coord_slot[d] == static_cast<int>(j)) {
            c = d;
            break;
          }
        }
        double v = m.kernel[cand.pairs[i]](support[i][j]) * std::exp(z(c));
        row(support[i][j]) = v;
        total += v;
      }
      ks[i] = row / total;
    }
    return ks;
  };

  auto objective = [&](const Eigen::VectorXd& z, WaterfillResult* wf_out,
                       std::vector<Eigen::VectorXd>* ks_out) {
    std::vector<Eigen::VectorXd> ks = build_kernels(z);
    Eigen::VectorXd nu = class_stationary(cand.states, ks, S);
    WaterfillResult wf = class_waterfill(m, cand, w, is_protected, target, &nu);
    if (!wf.feasible) return kInf;
    double kl_kernels = 0.0;
    for (int i : free_idx) {
      kl_kernels += w(cand.pairs[i]) * categorical_kl(m.kernel[cand.pairs[i]], ks[i]);
    }
    if (wf_out) *wf_out = wf;
    if (ks_out) *ks_out = ks;
    return wf.value + kl_kernels;
  };

  Eigen::VectorXd z = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd best_z = z;
  double best_val = objective(z, nullptr, nullptr);
  const double fd = 1e-5;
  for (int t = 1; t <= 500; ++t) {
    Eigen::VectorXd grad(dim);
    for (int d = 0; d < dim; ++d) {
      Eigen::VectorXd zp = z, zm = z;
      zp(d) += fd;
      zm(d) -= fd;
      double fp = objective(zp, nullptr, nullptr);
      double fm = objective(zm, nullptr, nullptr);
      grad(d) = (std::isfinite(fp) && std::isfinite(fm)) ? (fp - fm) / (2.0 * fd) : 0.0;
    }
    z -= (0.1 / std::sqrt(static_cast<double>(t))) * grad;
    double val = objective(z, nullptr, nullptr);
    if (val < best_val) {
      best_val = val;
      best_z = z;
    }
  }
  WaterfillResult wf;
  std::vector<Eigen::VectorXd> ks;
  double val = objective(best_z, &wf, &ks);
  if (std::isfinite(val)) {
    out.improved = true;
    out.value = val;
    out.x = wf.x;
    out.kernels = ks;
    out.gain = wf.gain;
  }
  return out;
}

}  // namespace

double bernoulli_kl(double p, double q) {
  p = clamp01(p);
  q = std::min(kRewardHi, std::max(kRewardLo, q));
  double out = 0.0;
  if (p > 0.0) out += p * std::log(p / q);
  if (p < 1.0) out += (1.0 - p) * std::log((1.0 - p) / (1.0 - q));
  return std::max(out, 0.0);
}

double categorical_kl(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
  double out = 0.0;
  for (int i = 0; i < p.size(); ++i) {
    if (p(i) <= 0.0) continue;
    if (q(i) <= 0.0) return kInf;
    out += p(i) * std::log(p(i) / q(i));
  }
  return std::max(out, 0.0);
}

Eigen::VectorXd pair_kl(const Mdp& base, const Mdp& other) {
  if (!same_skeleton(base, other)) {
    throw std::runtime_error("lowerbound: models have different state/action sets");
  }
  Eigen::VectorXd out(base.num_pairs());
  for (int p = 0; p < base.num_pairs(); ++p) {
    out(p) = bernoulli_kl(clamp01(base.reward[p]), other.reward[p]) +
             categorical_kl(base.kernel[p], other.kernel[p]);
  }
  return out;
}

std::vector<RecurrentClassInfo> enumerate_recurrent_classes(const Mdp& m, long cap) {
  const int S = m.num_states();
  std::vector<RecurrentClassInfo> out;
  std::set<std::vector<int>> seen;
  DeterministicPolicy f(S, 0);
  long visited = 0;
  while (visited < cap) {
    ++visited;
    ChainAnalysis ca = analyze_chain(induced_chain(m, f));
    for (std::size_t c = 0; c < ca.recurrent_classes.size(); ++c) {
      RecurrentClassInfo cand;
      cand.states = ca.recurrent_classes[c];
      for (int s : cand.states) cand.pairs.push_back(m.pair_index(s, f[s]));
      if (!seen.insert(cand.pairs).second) continue;
      cand.nu = ca.stationary[c];
      out.push_back(std::move(cand));
    }
    int s = S - 1;
    while (s >= 0) {
      if (++f[s] < m.num_actions(s)) break;
      f[s] = 0;
      --s;
    }
    if (s < 0) break;
  }
  return out;
}

InnerResult confusing_weighted_kl_min(const Eigen::VectorXd& w, const Mdp& m,
                                      const std::vector<int>& protected_pairs,
                                      const SolveOptions& opts) {
  return confusing_weighted_kl_min(w, m, protected_pairs,
                                   enumerate_recurrent_classes(m, opts.enum_cap), opts);
}

InnerResult confusing_weighted_kl_min(const Eigen::VectorXd& w, const Mdp& m,
                                      const std::vector<int>& protected_pairs,
                                      const std::vector<RecurrentClassInfo>& classes,
                                      const SolveOptions& opts) {
  const int P = m.num_pairs();
  if (w.size() != P) throw std::runtime_error("lowerbound: weight size mismatch (InvalidWeights)");
  if (w.minCoeff() < -1e-15) {
    throw std::runtime_error("lowerbound: negative weights (InvalidWeights)");
  }
  std::vector<char> is_protected(P, 0);
  for (int p : protected_pairs) is_protected[p] = 1;
  double g_star = optimal_gain(m);

  InnerResult out;
  out.value = kInf;
  for (const RecurrentClassInfo& cand : classes) {
    bool any_free = false;
    for (int p : cand.pairs) any_free = any_free || !is_protected[p];
    if (!any_free) continue;

    WaterfillResult wf = class_waterfill(m, cand, w, is_protected, g_star);
    double value = wf.feasible ? wf.value : kInf;
    Eigen::VectorXd x = wf.x;
    double gain = wf.gain;
    std::vector<Eigen::VectorXd> kernels;  // empty = unchanged

    bool any_free_kernel = false;
    for (int p : cand.pairs) {
      if (!is_protected[p] && m.kernel_space[p] == KernelSpace::FreeSimplex) any_free_kernel = true;
    }
    if (any_free_kernel) {
      RefineResult ref = refine_free_kernels(m, cand, w, is_protected, g_star);
      if (ref.improved && ref.value < value - 1e-12) {
        value = ref.value;
        x = ref.x;
        gain = ref.gain;
        kernels = ref.kernels;
      }
    }
    if (!std::isfinite(value) || value >= out.value) continue;

    ConfusingCandidate best;
    best.model = m;
    for (std::size_t i = 0; i < cand.pairs.size(); ++i) {
      int p = cand.pairs[i];
      if (is_protected[p]) continue;
      best.model.reward[p] = x(static_cast<int>(i));
      if (!kernels.empty()) best.model.kernel[p] = kernels[i];
    }
    best.target_class = cand.pairs;
    best.achieved_gain = gain;
    best.kl_per_pair = pair_kl(m, best.model);
    out.value = value;
    out.best = std::move(best);
    out.feasible = true;
  }
  if (out.feasible) {
    // Internal consistency: the reported value must match an independent
    // recomputation of the weighted divergence.
    double recheck = 0.0;
    for (int p = 0; p < P; ++p) recheck += w(p) * out.best.kl_per_pair(p);
    if (std::abs(recheck - out.value) > 1e-10 * std::max(1.0, out.value)) {
      out.value = recheck;
    }
  }
  return out;
}

double information_value(const InvariantMeasure& mu, const Mdp& m, double eps_flat,
                         const SolveOptions& opts) {
  if (mu.weights.minCoeff() < -1e-15) {
    throw std::runtime_error("lowerbound: negative measure (InvalidWeights)");
  }
  LeveledOptimalPairs lop = leveled_optimal_pairs(m, eps_flat, opts);
  return confusing_weighted_kl_min(mu.weights.cwiseMax(0.0), m, lop.pairs, opts).value;
}

namespace {

// Vertex oracle: minimize gvec over the invariant cone with uniformity floor,
// the active cuts, and a total-mass cap (keeps the program bounded).
bool cone_vertex(const Mdp& m, double eps_unif, const std::vector<ConfusingCandidate>& cuts,
                 const Eigen::VectorXd& gvec, double mass_cap, Eigen::VectorXd* out) {
  const int S = m.num_states();
  const int P = m.num_pairs();
  LinearProgram lp(P);
  for (int s = 0; s < S; ++s) {
    std::vector<double> row(P, 0.0);
    for (int p = 0; p < P; ++p) {
      row[p] = (m.state_action(p).first == s ? 1.0 : 0.0) - m.kernel[p](s);
    }
    lp.add_eq(row, 0.0);
  }
  for (int p = 0; p < P; ++p) {
    std::vector<double> row(P, 0.0);
    int s = m.state_action(p).first;
    for (int a = 0; a < m.num_actions(s); ++a) row[m.pair_index(s, a)] -= eps_unif;
    row[p] += 1.0;
    lp.add_ge(row, 0.0);
  }
  for (const auto& cut : cuts) {
    std::vector<double> row(P, 0.0);
    for (int p = 0; p < P; ++p) row[p] = cut.kl_per_pair(p);
    lp.add_ge(row, 1.0);
  }
  {
    std::vector<double> row(P, -1.0);
    lp.add_ge(row, -mass_cap);
  }
  for (int p = 0; p < P; ++p) lp.c[p] = gvec(p);
  LpSolution sol = solve_lp(lp);
  if (sol.status != LpStatus::Optimal) return false;
  *out = sol.x.head(P);
  return true;
}

// Minimize b.alpha + eps_reg alpha^T G alpha over the probability simplex
// (projected gradient with momentum restarts).
Eigen::VectorXd hull_weights(const Eigen::MatrixXd& G, const Eigen::VectorXd& b, double eps_reg,
                             Eigen::VectorXd alpha, long iters) {
  const int k = static_cast<int>(b.size());
  auto project = [&](Eigen::VectorXd v) {
    std::vector<double> u(v.data(), v.data() + k);
    std::sort(u.begin(), u.end(), std::greater<double>());
    double css = 0.0, theta = 0.0;
    int rho = 0;
    for (int i = 0; i < k; ++i) {
      css += u[i];
      double t = (css - 1.0) / (i + 1);
      if (u[i] - t > 0.0) {
        rho = i + 1;
        theta = t;
      }
    }
    (void)rho;
    for (int i = 0; i < k; ++i) v(i) = std::max(v(i) - theta, 0.0);
    return v;
  };
  double L = 2.0 * eps_reg * G.trace() + 1e-12;
  double step = 1.0 / L;
  Eigen::VectorXd y = alpha, prev = alpha;
  double t_acc = 1.0;
  for (long it = 0; it < iters; ++it) {
    Eigen::VectorXd grad = b + 2.0 * eps_reg * (G * y);
    Eigen::VectorXd next = project(y - step * grad);
    double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_acc * t_acc));
    Eigen::VectorXd cand = next + ((t_acc - 1.0) / t_next) * (next - alpha);
    // Restart momentum when it points uphill.
    if (grad.dot(next - alpha) > 0.0) {
      y = next;
      t_acc = 1.0;
    } else {
      y = project(cand);
      t_acc = t_next;
    }
    prev = alpha;
    alpha = next;
    if ((alpha - prev).cwiseAbs().maxCoeff() < 1e-15) break;
  }
  return alpha;
}

struct QpResult {
  Eigen::VectorXd x;
  bool ok = false;
};

// Minimize c.mu + eps_reg ||mu||^2 over the cut cone by vertex generation:
// each round adds the vertex minimizing the current gradient, then re-solves
// the quadratic over the convex hull of discovered vertices. The duality gap
// of the final iterate certifies convergence.
QpResult solve_reg_qp(const Mdp& m, const Eigen::VectorXd& c, double eps_reg, double eps_unif,
                      const std::vector<ConfusingCandidate>& cuts, const Eigen::VectorXd& seed,
                      const LowerBoundOptions& opts) {
  QpResult res;
  auto f = [&](const Eigen::VectorXd& x) { return c.dot(x) + eps_reg * x.squaredNorm(); };
  double f0 = f(seed);
  double cmin = kInf;
  for (int p = 0; p < c.size(); ++p) {
    if (c(p) > 1e-12) cmin = std::min(cmin, c(p));
  }
  double mass_cap = 10.0 + 2.0 * seed.sum();
  if (std::isfinite(cmin)) mass_cap += 2.0 * f0 / cmin;
  if (eps_reg > 0.0) mass_cap += 2.0 * std::sqrt(std::max(f0, 1e-12) / eps_reg);

  std::vector<Eigen::VectorXd> verts{seed};
  Eigen::VectorXd x = seed;
  Eigen::VectorXd alpha = Eigen::VectorXd::Ones(1);
  long budget = std::min(opts.hull_iters, opts.hull_iter_cap);
  for (int round = 0; round < opts.outer_rounds; ++round) {
    Eigen::VectorXd grad = c + 2.0 * eps_reg * x;
    Eigen::VectorXd v;
    if (!cone_vertex(m, eps_unif, cuts, grad, mass_cap, &v)) return res;
    double gap = grad.dot(x - v);
    if (gap <= 1e-9 * std::max(1.0, std::abs(f(x)))) break;
    verts.push_back(v);
    const int k = static_cast<int>(verts.size());
    Eigen::MatrixXd G(k, k);
    Eigen::VectorXd b(k);
    for (int i = 0; i < k; ++i) {
      b(i) = c.dot(verts[i]);
      for (int j = 0; j <= i; ++j) {
        G(i, j) = G(j, i) = verts[i].dot(verts[j]);
      }
    }
    Eigen::VectorXd warm = Eigen::VectorXd::Zero(k);
    warm.head(k - 1) = alpha;
    alpha = hull_weights(G, b, eps_reg, warm, budget);
    x.setZero();
    for (int i = 0; i < k; ++i) x += alpha(i) * verts[i];
    // Prune idle vertices to keep the hull problem small.
    if (k > 40) {
      std::vector<Eigen::VectorXd> kept;
      std::vector<double> kept_w;
      for (int i = 0; i < k; ++i) {
        if (alpha(i) > 1e-14) {
          kept.push_back(verts[i]);
          kept_w.push_back(alpha(i));
        }
      }
      verts = std::move(kept);
      alpha = Eigen::Map<Eigen::VectorXd>(kept_w.data(), static_cast<int>(kept_w.size()));
    }
  }
  res.x = x.cwiseMax(0.0);
  res.ok = true;
  return res;
}

std::vector<ConfusingCandidate> filter_cuts(const Mdp& m, double g_star,
                                            const std::vector<int>& protected_pairs,
                                            const std::vector<ConfusingCandidate>& cuts) {
  std::vector<char> is_protected(m.num_pairs(), 0);
  for (int p : protected_pairs) is_protected[p] = 1;
  std::vector<ConfusingCandidate> out;
  for (const auto& cut : cuts) {
    if (!same_skeleton(m, cut.model)) continue;
    bool agrees = true;
    for (int p = 0; p < m.num_pairs() && agrees; ++p) {
      if (!is_protected[p]) continue;
      if (std::abs(m.reward[p] - cut.model.reward[p]) > 1e-12 ||
          (m.kernel[p] - cut.model.kernel[p]).cwiseAbs().sum() > 1e-12) {
        agrees = false;
      }
    }
    if (!agrees) continue;
    if (optimal_gain(cut.model) < g_star - 1e-9) continue;
    ConfusingCandidate fresh = cut;
    fresh.kl_per_pair = pair_kl(m, cut.model);
    if (fresh.kl_per_pair.maxCoeff() <= 1e-15) continue;
    out.push_back(std::move(fresh));
  }
  return out;
}

}  // namespace

LowerBoundSolution regularized_lower_bound(const Mdp& m, const RegularizerTriple& E,
                                           const std::vector<ConfusingCandidate>& warm_cuts,
                                           const LowerBoundOptions& opts) {
  if (!is_communicating(m)) {
    throw std::runtime_error("lowerbound: model is not communicating (NotCommunicating)");
  }
  const int P = m.num_pairs();
  OptimalSolution sol = classify_optimal(m, opts.solve);
  LeveledOptimalPairs lop = leveled_optimal_pairs(m, E.eps_flat, opts.solve);

  Eigen::VectorXd c(P);
  for (int p = 0; p < P; ++p) c(p) = std::max(sol.opt_gain - m.reward[p], 0.0);

  InvariantMeasure cov = covering_measure(m);
  double delta_cov = cov.weights.minCoeff();
  LowerBoundSolution out;
  out.eps_unif_effective = std::min(E.eps_unif, 0.99 * delta_cov);
  out.cuts = filter_cuts(m, sol.opt_gain, lop.pairs, warm_cuts);

  auto report = [&](const Eigen::VectorXd& x) {
    out.measure.weights = x;
    out.measure.is_probability = false;
    out.value = sol.gaps.dot(x) + E.eps_reg * x.squaredNorm();
  };

  // First cut from the covering measure when starting cold.
  const int solver_budget = opts.max_cuts;
  if (out.cuts.empty()) {
    InnerResult first = confusing_weighted_kl_min(cov.weights, m, lop.pairs, opts.solve);
    ++out.iterations;
    if (!first.feasible) {
      out.measure.weights = Eigen::VectorXd::Zero(P);
      out.measure.is_probability = false;
      out.value = 0.0;
      out.converged = true;
      return out;  // no confusing models: the information constraint is vacuous
    }
    if (first.best.kl_per_pair.maxCoeff() > 1e-12) out.cuts.push_back(first.best);
  }

  Eigen::VectorXd x = Eigen::VectorXd::Zero(P);
  while (true) {
    // Feasible seed: covering measure scaled to satisfy every cut.
    double mass = 1.0;
    for (const auto& cut : out.cuts) {
      double lhs = cut.kl_per_pair.dot(cov.weights);
      if (lhs > 1e-300) mass = std::max(mass, 1.0 / lhs);
    }
    Eigen::VectorXd seed = mass * cov.weights;
    QpResult qp = solve_reg_qp(m, c, E.eps_reg, out.eps_unif_effective, out.cuts, seed, opts);
    if (!qp.ok) {
      report(seed);
      out.converged = false;
      return out;
    }
    x = qp.x;
    InnerResult inner = confusing_weighted_kl_min(x, m, lop.pairs, opts.solve);
    ++out.iterations;
    if (!inner.feasible || inner.value >= 1.0 - opts.cut_tol) {
      report(x);
      out.converged = true;
      return out;
    }
    if (inner.best.kl_per_pair.maxCoeff() <= 1e-12) {
      report(x);
      out.converged = false;
      return out;
    }
    out.cuts.push_back(inner.best);
    if (static_cast<int>(out.cuts.size()) >= solver_budget) {
      QpResult last = solve_reg_qp(m, c, E.eps_reg, out.eps_unif_effective, out.cuts, seed, opts);
      report(last.ok ? last.x : x);
      out.converged = false;
      return out;
    }
  }
}

LowerBoundSolution regularized_lower_bound(const Mdp& m, const RegularizerTriple& E,
                                           const LowerBoundOptions& opts) {
  return regularized_lower_bound(m, E, {}, opts);
}

std::vector<RegularizerTriple> vanilla_levels() {
  return {
      {5e-2, 1e-3, 1e-2},  {1e-2, 8e-5, 1e-3},   {3e-3, 1e-6, 1e-4},
      {1e-3, 1e-8, 1e-5},  {1e-3, 1e-10, 1e-6},  {1e-3, 3e-12, 1e-7},
  };
}

VanillaReport vanilla_lower_bound(const Mdp& m, int num_levels, const LowerBoundOptions& opts) {
  auto levels = vanilla_levels();
  if (num_levels < 1 || num_levels > static_cast<int>(levels.size())) {
    num_levels = static_cast<int>(levels.size());
  }
  VanillaReport report;
  std::vector<ConfusingCandidate> cuts;
  for (int i = 0; i < num_levels; ++i) {
    LowerBoundSolution sol = regularized_lower_bound(m, levels[i], cuts, opts);
    cuts = sol.cuts;
    report.levels.push_back(VanillaLevelResult{levels[i], sol.value, sol.converged});
  }
  report.value = report.levels.back().value;
  if (report.levels.size() >= 2) {
    double last = report.levels[report.levels.size() - 1].value;
    double prev = report.levels[report.levels.size() - 2].value;
    report.extrapolated = last - (prev - last) / 9.0;
  } else {
    report.extrapolated = report.value;
  }
  return report;
}

double policywise_oracle(const Mdp& m, double grid_resolution, const SolveOptions& opts) {
  const int S = m.num_states();
  if (m.num_pairs() > 8) {
    throw std::runtime_error("lowerbound: model too large for the grid oracle (ResourceLimit)");
  }
  int n = std::max(1, static_cast<int>(std::lround(1.0 / grid_resolution)));

  // Strictly positive simplex grid per state, plus the exact uniform point.
  std::vector<std::vector<std::vector<double>>> per_state(S);
  for (int s = 0; s < S; ++s) {
    const int A = m.num_actions(s);
    std::vector<std::vector<double>> points;
    if (A == 1) {
      points.push_back({1.0});
    } else {
      std::vector<int> comp(A, 1);
      comp[0] = n - (A - 1);
      if (comp[0] < 1) {
        points.push_back(std::vector<double>(A, 1.0 / A));
      } else {
        // Enumerate compositions of n into A positive parts.
        std::vector<int> idx(A, 1);
        std::function<void(int, int)> recurse = [&](int pos, int left) {
          if (pos == A - 1) {
            idx[pos] = left;
            std::vector<double> pt(A);
            for (int a = 0; a < A; ++a) pt[a] = static_cast<double>(idx[a]) / n;
            points.push_back(pt);
            return;
          }
          for (int v = 1; v <= left - (A - 1 - pos); ++v) {
            idx[pos] = v;
            recurse(pos + 1, left - v);
          }
        };
        recurse(0, n);
        std::vector<double> uni(A, 1.0 / A);
        if (n % A != 0) points.push_back(uni);
      }
    }
    per_state[s] = std::move(points);
  }
  double total = 1.0;
  for (int s = 0; s < S; ++s) {
    total *= static_cast<double>(per_state[s].size());
    if (total > 2e6) {
      throw std::runtime_error("lowerbound: grid too fine (ResourceLimit)");
    }
  }

  OptimalSolution sol = classify_optimal(m, opts);
  double best = kInf;
  std::vector<std::size_t> pick(S, 0);
  bool any_policy = false;
  while (true) {
    StochasticPolicy pi;
    pi.probs.resize(S);
    for (int s = 0; s < S; ++s) {
      const std::vector<double>& pt = per_state[s][pick[s]];
      pi.probs[s] = Eigen::Map<const Eigen::VectorXd>(
          pt.data(), static_cast<Eigen::Index>(pt.size()));
    }
    any_policy = true;
    ChainAnalysis ca = analyze_chain(induced_chain(m, pi));
    double g_pi = ca.gain.minCoeff();
    double num = std::max(sol.opt_gain - g_pi, 0.0);
    InvariantMeasure mu = unichain_policy_measure(m, pi);
    double info = confusing_weighted_kl_min(mu.weights, m, sol.optimal_pairs, opts).value;
    double ratio;
    if (std::isinf(info)) {
      ratio = 0.0;  // no confusing models: zero exploration cost
    } else if (info <= 1e-18) {
      ratio = kInf;
    } else {
      ratio = num / info;
    }
    best = std::min(best, ratio);
    int s = S - 1;
    while (s >= 0) {
      if (++pick[s] < per_state[s].size()) break;
      pick[s] = 0;
      --s;
    }
    if (s < 0) break;
  }
  (void)any_policy;
  return best;
}

CentralMeasureResult central_measure(const Mdp& m, const LowerBoundOptions& opts) {
  RegularizerTriple level{1e-3, 1e-6, 1e-4};
  LowerBoundSolution sol = regularized_lower_bound(m, level, opts);
  double mass = sol.measure.weights.size() ? sol.measure.weights.sum() : 0.0;
  if (sol.value <= 1e-12 || mass <= 1e-300) {
    throw std::runtime_error("lowerbound: bound is zero (NoExplorationNeeded)");
  }
  CentralMeasureResult out;
  out.total_mass = mass;
  out.measure.weights = sol.measure.weights / mass;
  out.measure.is_probability = true;
  return out;
}

double simple_bound(const Mdp& m, const SolveOptions& opts) {
  double gap = gain_gap(m, opts);
  if (std::isinf(gap)) return 0.0;
  if (gap < 1e-12) return kInf;
  double d = diameter(m);
  return 16.0 * m.num_pairs() * d * d * d / (gap * gap);
}

}  // namespace avgmdp
