#include "avgmdp/chains.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>

namespace avgmdp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<std::vector<int>> support_adjacency(const Eigen::MatrixXd& P) {
  const int n = static_cast<int>(P.rows());
  std::vector<std::vector<int>> adj(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (P(i, j) > 0.0) adj[i].push_back(j);
  return adj;
}

/// Solves for the stationary law of an irreducible substochastic-free block.
Eigen::VectorXd stationary_of_class(const Eigen::MatrixXd& Pc) {
  const int n = static_cast<int>(Pc.rows());
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(n, n) - Pc.transpose();
  A.row(n - 1).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  b[n - 1] = 1.0;
  Eigen::VectorXd nu = A.fullPivLu().solve(b);
  for (int i = 0; i < n; ++i) nu[i] = std::max(nu[i], 0.0);
  nu /= nu.sum();
  return nu;
}

}  // namespace

StochasticPolicy StochasticPolicy::uniform(const Mdp& m) {
  StochasticPolicy pi;
  pi.probs.resize(m.num_states());
  for (int s = 0; s < m.num_states(); ++s)
    pi.probs[s] = Eigen::VectorXd::Constant(m.num_actions(s), 1.0 / m.num_actions(s));
  return pi;
}

StochasticPolicy StochasticPolicy::pure(const Mdp& m, const DeterministicPolicy& d) {
  StochasticPolicy pi;
  pi.probs.resize(m.num_states());
  for (int s = 0; s < m.num_states(); ++s) {
    pi.probs[s] = Eigen::VectorXd::Zero(m.num_actions(s));
    pi.probs[s][d[s]] = 1.0;
  }
  return pi;
}

void StochasticPolicy::validate(const Mdp& m, double tol) const {
  if (static_cast<int>(probs.size()) != m.num_states())
    throw std::invalid_argument("policy: wrong number of states");
  for (int s = 0; s < m.num_states(); ++s) {
    if (probs[s].size() != m.num_actions(s))
      throw std::invalid_argument("policy: wrong action count at state " + m.state_names[s]);
    if (probs[s].minCoeff() < -tol || std::abs(probs[s].sum() - 1.0) > tol)
      throw std::invalid_argument("policy: not a distribution at state " + m.state_names[s]);
  }
}

MarkovChain induced_chain(const Mdp& m, const StochasticPolicy& pi) {
  const int S = m.num_states();
  MarkovChain c;
  c.P = Eigen::MatrixXd::Zero(S, S);
  c.r = Eigen::VectorXd::Zero(S);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < m.num_actions(s); ++a) {
      const double w = pi.probs[s][a];
      if (w == 0.0) continue;
      const int p = m.pair_index(s, a);
      c.P.row(s) += w * m.kernel[p].transpose();
      c.r[s] += w * m.reward[p];
    }
  }
  return c;
}

MarkovChain induced_chain(const Mdp& m, const DeterministicPolicy& pi) {
  return induced_chain(m, StochasticPolicy::pure(m, pi));
}

std::vector<std::vector<int>> strongly_connected_components(
    const std::vector<std::vector<int>>& adj) {
  const int n = static_cast<int>(adj.size());
  std::vector<int> index(n, -1), low(n, 0), on_stack(n, 0);
  std::vector<int> stack;
  std::vector<std::vector<int>> comps;
  int next_index = 0;

  // Iterative Tarjan with an explicit call frame (vertex, child position).
  std::vector<std::pair<int, std::size_t>> frames;
  for (int root = 0; root < n; ++root) {
    if (index[root] != -1) continue;
    frames.emplace_back(root, 0);
    while (!frames.empty()) {
      auto& [v, child] = frames.back();
      if (child == 0) {
        index[v] = low[v] = next_index++;
        stack.push_back(v);
        on_stack[v] = 1;
      }
      bool descended = false;
      while (child < adj[v].size()) {
        const int w = adj[v][child++];
        if (index[w] == -1) {
          frames.emplace_back(w, 0);
          descended = true;
          break;
        }
        if (on_stack[w]) low[v] = std::min(low[v], index[w]);
      }
      if (descended) continue;
      if (low[v] == index[v]) {
        std::vector<int> comp;
        int w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = 0;
          comp.push_back(w);
        } while (w != v);
        std::sort(comp.begin(), comp.end());
        comps.push_back(std::move(comp));
      }
      frames.pop_back();
      if (!frames.empty()) {
        const int parent = frames.back().first;
        low[parent] = std::min(low[parent], low[v]);
      }
    }
  }
  std::sort(comps.begin(), comps.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  return comps;
}

ChainAnalysis analyze_chain(const MarkovChain& chain) {
  const int S = static_cast<int>(chain.P.rows());
  ChainAnalysis out;
  out.state_class.assign(S, -1);

  const auto adj = support_adjacency(chain.P);
  const auto sccs = strongly_connected_components(adj);
  for (const auto& comp : sccs) {
    bool closed = true;
    for (int v : comp) {
      for (int w : adj[v]) {
        if (!std::binary_search(comp.begin(), comp.end(), w)) {
          closed = false;
          break;
        }
      }
      if (!closed) break;
    }
    if (closed) {
      const int id = static_cast<int>(out.recurrent_classes.size());
      for (int v : comp) out.state_class[v] = id;
      out.recurrent_classes.push_back(comp);
    }
  }

  const int C = static_cast<int>(out.recurrent_classes.size());
  for (const auto& comp : out.recurrent_classes) {
    const int n = static_cast<int>(comp.size());
    Eigen::MatrixXd Pc(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) Pc(i, j) = chain.P(comp[i], comp[j]);
    out.stationary.push_back(stationary_of_class(Pc));
  }

  std::vector<int> transient;
  for (int s = 0; s < S; ++s)
    if (out.state_class[s] == -1) transient.push_back(s);
  const int T = static_cast<int>(transient.size());

  out.reach = Eigen::MatrixXd::Zero(S, C);
  for (int s = 0; s < S; ++s)
    if (out.state_class[s] >= 0) out.reach(s, out.state_class[s]) = 1.0;
  if (T > 0) {
    Eigen::MatrixXd Ptt(T, T);
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(T, C);
    for (int i = 0; i < T; ++i) {
      for (int j = 0; j < T; ++j) Ptt(i, j) = chain.P(transient[i], transient[j]);
      for (int s = 0; s < S; ++s)
        if (out.state_class[s] >= 0) B(i, out.state_class[s]) += chain.P(transient[i], s);
    }
    const Eigen::MatrixXd X =
        (Eigen::MatrixXd::Identity(T, T) - Ptt).partialPivLu().solve(B);
    for (int i = 0; i < T; ++i) out.reach.row(transient[i]) = X.row(i);
  }

  Eigen::VectorXd class_gain(C);
  for (int c = 0; c < C; ++c) {
    const auto& comp = out.recurrent_classes[c];
    double g = 0.0;
    for (int i = 0; i < static_cast<int>(comp.size()); ++i)
      g += out.stationary[c][i] * chain.r[comp[i]];
    class_gain[c] = g;
  }
  out.gain = out.reach * class_gain;

  out.bias = Eigen::VectorXd::Zero(S);
  for (int c = 0; c < C; ++c) {
    const auto& comp = out.recurrent_classes[c];
    const int n = static_cast<int>(comp.size());
    if (n == 1) continue;  // bias is exactly 0 on a singleton class
    Eigen::MatrixXd A(n + 1, n);
    Eigen::VectorXd b(n + 1);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j)
        A(i, j) = (i == j ? 1.0 : 0.0) - chain.P(comp[i], comp[j]);
      b[i] = chain.r[comp[i]] - class_gain[c];
    }
    A.row(n) = out.stationary[c].transpose();
    b[n] = 0.0;
    const Eigen::VectorXd h = A.colPivHouseholderQr().solve(b);
    for (int i = 0; i < n; ++i) out.bias[comp[i]] = h[i];
  }
  if (T > 0) {
    Eigen::MatrixXd Ptt(T, T);
    Eigen::VectorXd rhs(T);
    for (int i = 0; i < T; ++i) {
      double carry = 0.0;
      for (int s = 0; s < S; ++s) {
        if (out.state_class[s] >= 0) carry += chain.P(transient[i], s) * out.bias[s];
      }
      for (int j = 0; j < T; ++j) Ptt(i, j) = chain.P(transient[i], transient[j]);
      rhs[i] = chain.r[transient[i]] - out.gain[transient[i]] + carry;
    }
    const Eigen::VectorXd hT =
        (Eigen::MatrixXd::Identity(T, T) - Ptt).partialPivLu().solve(rhs);
    for (int i = 0; i < T; ++i) out.bias[transient[i]] = hT[i];
  }
  return out;
}

Eigen::VectorXd expected_hitting_steps(const Eigen::MatrixXd& P, const std::vector<int>& targets) {
  const int n = static_cast<int>(P.rows());
  std::vector<char> is_target(n, 0);
  for (int t : targets) is_target[t] = 1;
  const auto adj = support_adjacency(P);

  // States that can reach the target set at all (backward search).
  std::vector<std::vector<int>> radj(n);
  for (int i = 0; i < n; ++i)
    for (int j : adj[i]) radj[j].push_back(i);
  std::vector<char> can_reach(n, 0);
  std::deque<int> queue;
  for (int t : targets) {
    can_reach[t] = 1;
    queue.push_back(t);
  }
  while (!queue.empty()) {
    const int v = queue.front();
    queue.pop_front();
    for (int u : radj[v])
      if (!can_reach[u]) {
        can_reach[u] = 1;
        queue.push_back(u);
      }
  }

  // States that hit the target set almost surely: those that cannot reach,
  // while avoiding targets, any state from which targets are unreachable.
  std::vector<char> bad(n, 0);
  for (int v = 0; v < n; ++v)
    if (!can_reach[v]) {
      bad[v] = 1;
      queue.push_back(v);
    }
  while (!queue.empty()) {
    const int v = queue.front();
    queue.pop_front();
    for (int u : radj[v])
      if (!bad[u] && !is_target[u]) {
        bad[u] = 1;
        queue.push_back(u);
      }
  }

  Eigen::VectorXd steps = Eigen::VectorXd::Zero(n);
  std::vector<int> good;  // non-target states with almost-sure arrival
  for (int v = 0; v < n; ++v) {
    if (is_target[v]) continue;
    if (bad[v])
      steps[v] = kInf;
    else
      good.push_back(v);
  }
  const int G = static_cast<int>(good.size());
  if (G > 0) {
    Eigen::MatrixXd Pgg(G, G);
    for (int i = 0; i < G; ++i)
      for (int j = 0; j < G; ++j) Pgg(i, j) = P(good[i], good[j]);
    const Eigen::VectorXd x = (Eigen::MatrixXd::Identity(G, G) - Pgg)
                                  .partialPivLu()
                                  .solve(Eigen::VectorXd::Ones(G));
    for (int i = 0; i < G; ++i) steps[good[i]] = x[i];
  }
  return steps;
}

double chain_diameter(const Eigen::MatrixXd& P, int cover_cap) {
  const int n = static_cast<int>(P.rows());
  MarkovChain chain;
  chain.P = P;
  chain.r = Eigen::VectorXd::Zero(n);
  const auto an = analyze_chain(chain);
  const auto& classes = an.recurrent_classes;
  const int C = static_cast<int>(classes.size());

  long long combos = 1;
  for (const auto& cls : classes) {
    combos *= static_cast<long long>(cls.size());
    if (combos > cover_cap) break;
  }

  std::vector<int> choice(C, 0);
  double best = 0.0;
  const bool enumerate = combos <= cover_cap;
  while (true) {
    std::vector<int> cover(C);
    for (int c = 0; c < C; ++c) cover[c] = classes[c][choice[c]];
    const Eigen::VectorXd steps = expected_hitting_steps(P, cover);
    best = std::max(best, 1.0 + steps.maxCoeff());
    if (!enumerate) break;
    int c = C - 1;
    while (c >= 0) {
      if (++choice[c] < static_cast<int>(classes[c].size())) break;
      choice[c] = 0;
      --c;
    }
    if (c < 0) break;
  }
  return best;
}

}  // namespace avgmdp
