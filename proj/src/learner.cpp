#include "avgmdp/learner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "avgmdp/leveling.hpp"

namespace avgmdp {

namespace {

StochasticPolicy uniform_policy_for_shape(const LearnerShape& shape) {
  StochasticPolicy pi;
  pi.probs.resize(shape.num_states());
  for (int s = 0; s < shape.num_states(); ++s) {
    int A = shape.num_actions(s);
    pi.probs[s] = Eigen::VectorXd::Constant(A, 1.0 / A);
  }
  return pi;
}

int sample_action(RngStream& rng, const Eigen::VectorXd& probs) {
  std::vector<double> v(probs.data(), probs.data() + probs.size());
  return rng.sample_index(v);
}

// Recurrent states of the chain induced by pi on m, by exact support:
// members of closed strongly connected components of the support graph.
std::vector<char> recurrent_states(const Mdp& m, const StochasticPolicy& pi) {
  const int S = m.num_states();
  std::vector<std::vector<int>> adj(S);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < m.num_actions(s); ++a) {
      if (pi.probs[s](a) <= 1e-15) continue;
      const Eigen::VectorXd& k = m.kernel[m.pair_index(s, a)];
      for (int t = 0; t < S; ++t) {
        if (k(t) > 0.0) adj[s].push_back(t);
      }
    }
  }
  for (auto& row : adj) {
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
  }
  auto sccs = strongly_connected_components(adj);
  std::vector<int> comp_of(S, -1);
  for (std::size_t c = 0; c < sccs.size(); ++c) {
    for (int s : sccs[c]) comp_of[s] = static_cast<int>(c);
  }
  std::vector<char> closed(sccs.size(), 1);
  for (int s = 0; s < S; ++s) {
    for (int t : adj[s]) {
      if (comp_of[t] != comp_of[s]) closed[comp_of[s]] = 0;
    }
  }
  std::vector<char> rec(S, 0);
  for (int s = 0; s < S; ++s) rec[s] = closed[comp_of[s]];
  return rec;
}

}  // namespace

LearnerShape make_shape(const Mdp& m) {
  LearnerShape shape;
  shape.state_names = m.state_names;
  shape.action_names = m.action_names;
  shape.pair_offset = m.pair_offset;
  shape.kernel_space = m.kernel_space;
  shape.known_kernel.resize(m.num_pairs());
  for (int p = 0; p < m.num_pairs(); ++p) {
    if (m.kernel_space[p] == KernelSpace::Known) shape.known_kernel[p] = m.kernel[p];
  }
  return shape;
}

void Estimator::reset(const LearnerShape& s) {
  shape = s;
  const int P = s.num_pairs();
  counts.assign(P, 0);
  reward_sums.assign(P, 0.0);
  transition_counts.assign(P, Eigen::VectorXd::Zero(s.num_states()));
  total = 0;
}

void Estimator::record(int state, int action, double reward, int next_state) {
  int p = shape.pair_index(state, action);
  ++counts[p];
  reward_sums[p] += reward;
  transition_counts[p](next_state) += 1.0;
  ++total;
}

Eigen::VectorXd Estimator::count_vector() const {
  Eigen::VectorXd out(static_cast<int>(counts.size()));
  for (std::size_t p = 0; p < counts.size(); ++p) out(static_cast<int>(p)) = counts[p];
  return out;
}

Mdp Estimator::mle() const {
  const int S = shape.num_states();
  const int P = shape.num_pairs();
  Mdp m;
  m.name = "mle";
  m.state_names = shape.state_names;
  m.action_names = shape.action_names;
  m.pair_offset = shape.pair_offset;
  m.kernel_space = shape.kernel_space;
  m.reward.resize(P);
  m.kernel.resize(P);
  for (int p = 0; p < P; ++p) {
    m.reward[p] = counts[p] > 0 ? reward_sums[p] / counts[p] : 0.5;
    if (shape.kernel_space[p] == KernelSpace::Known) {
      m.kernel[p] = shape.known_kernel[p];
    } else if (counts[p] > 0) {
      m.kernel[p] = transition_counts[p] / static_cast<double>(counts[p]);
    } else {
      m.kernel[p] = Eigen::VectorXd::Constant(S, 1.0 / S);
    }
  }
  return m;
}

std::vector<int> count_skeleton(const Eigen::VectorXd& counts, double t) {
  double lt = t > 1.0 ? std::log(t) : 0.0;
  double threshold = lt * lt;
  std::vector<int> out;
  for (int p = 0; p < counts.size(); ++p) {
    if (counts(p) >= threshold) out.push_back(p);
  }
  return out;
}

bool glr_exploration_test(const Estimator& est, double t, const Schedule& schedule,
                          const SolveOptions& opts) {
  try {
    Mdp m_hat = est.mle();
    if (!is_communicating(m_hat)) return true;
    double eps_flat = schedule.eps_flat(t);
    double eps_test = schedule.eps_test(t);
    LeveledOptimalPairs lop = leveled_optimal_pairs(m_hat, eps_flat, opts);
    Eigen::VectorXd counts = est.count_vector();
    std::vector<int> protected_pairs = count_skeleton(counts, t);
    protected_pairs.insert(protected_pairs.end(), lop.pairs.begin(), lop.pairs.end());
    std::sort(protected_pairs.begin(), protected_pairs.end());
    protected_pairs.erase(std::unique(protected_pairs.begin(), protected_pairs.end()),
                          protected_pairs.end());
    InnerResult inner = confusing_weighted_kl_min(counts, m_hat, protected_pairs, opts);
    double threshold = (1.0 + eps_test) * (t > 1.0 ? std::log(t) : 0.0);
    return inner.value <= threshold;
  } catch (const std::exception&) {
    return true;  // conservative: keep exploring when the test cannot be run
  }
}

StochasticPolicy exploitation_policy(const Mdp& m_hat, double eps_flat, const SolveOptions& opts) {
  LeveledOptimalPairs lop = leveled_optimal_pairs(m_hat, eps_flat, opts);
  const int S = m_hat.num_states();
  std::vector<std::vector<int>> actions(S);
  for (int p : lop.pairs) {
    auto [s, a] = m_hat.state_action(p);
    actions[s].push_back(a);
  }
  StochasticPolicy pi;
  pi.probs.resize(S);
  for (int s = 0; s < S; ++s) {
    int A = m_hat.num_actions(s);
    if (actions[s].empty()) {
      pi.probs[s] = Eigen::VectorXd::Constant(A, 1.0 / A);
    } else {
      pi.probs[s] = Eigen::VectorXd::Zero(A);
      for (int a : actions[s]) pi.probs[s](a) = 1.0 / actions[s].size();
    }
  }
  return pi;
}

ExplorationPolicyResult exploration_policy(const Mdp& m_hat, const RegularizerTriple& E,
                                           const std::vector<ConfusingCandidate>& warm_cuts,
                                           const LowerBoundOptions& opts) {
  ExplorationPolicyResult out;
  out.lb = regularized_lower_bound(m_hat, E, warm_cuts, opts);
  InvariantMeasure mu = out.lb.measure;
  Eigen::VectorXd marg = state_marginal(mu, m_hat);
  double mass = mu.weights.sum();
  if (mass <= 1e-300) {
    mu = covering_measure(m_hat);
  } else if (marg.minCoeff() < 1e-12 * mass) {
    InvariantMeasure cov = covering_measure(m_hat);
    double w = std::min(std::max(E.eps_unif, 1e-6), 1.0);
    mu.weights = (1.0 - w) * mu.weights + (w * mass) * cov.weights;
  }
  out.measure = mu;
  out.policy = induced_policy(mu, m_hat);
  return out;
}

bool square_trick_travel(const Eigen::VectorXd& counts,
                         const std::vector<std::vector<int>>& components, int current_component) {
  if (current_component < 0 || current_component >= static_cast<int>(components.size())) {
    return true;
  }
  double global_min = std::numeric_limits<double>::infinity();
  for (const auto& comp : components) {
    for (int p : comp) global_min = std::min(global_min, counts(p));
  }
  double cur_min = std::numeric_limits<double>::infinity();
  for (int p : components[current_component]) cur_min = std::min(cur_min, counts(p));
  if (!std::isfinite(cur_min)) return false;
  return global_min < std::sqrt(cur_min);
}

const char* step_class_token(StepClass c) {
  switch (c) {
    case StepClass::Explore: return "-";
    case StepClass::CoExplore: return "+-";
    case StepClass::Exploit: return "+";
    case StepClass::Panic: return "!";
  }
  return "?";
}

const char* step_class_name(StepClass c) {
  switch (c) {
    case StepClass::Explore: return "Explore";
    case StepClass::CoExplore: return "CoExplore";
    case StepClass::Exploit: return "Exploit";
    case StepClass::Panic: return "Panic";
  }
  return "?";
}

namespace {

// ---------------------------------------------------------------------------
// Baselines

class UniformRandomLearner final : public Learner {
 public:
  void reset(std::uint64_t master_seed, std::uint32_t run_seed, const LearnerShape& shape) override {
    shape_ = shape;
    rng_ = RngStream(master_seed, run_seed, RngPurpose::Learner);
  }

  int act(int state) override {
    int A = shape_.num_actions(state);
    return static_cast<int>(rng_.next_double() * A) % A;
  }

  void observe(int, int, double, int) override {}
  StepClass last_step_class() const override { return StepClass::Explore; }
  const char* last_phase_name() const override { return "Uniform"; }
  std::string name() const override { return "uniform"; }

 private:
  LearnerShape shape_;
  RngStream rng_;
};

class GreedyMleLearner final : public Learner {
 public:
  explicit GreedyMleLearner(LearnerCaps caps) : caps_(caps) {}

  void reset(std::uint64_t master_seed, std::uint32_t run_seed, const LearnerShape& shape) override {
    (void)master_seed;
    (void)run_seed;
    est_.reset(shape);
    t_ = 0;
    next_refresh_ = 1;
    policy_.assign(shape.num_states(), 0);
  }

  int act(int state) override {
    long now = t_ + 1;
    if (now >= next_refresh_) {
      refresh();
      while (next_refresh_ <= now) next_refresh_ *= 2;
    }
    return policy_[state];
  }

  void observe(int state, int action, double reward, int next_state) override {
    ++t_;
    est_.record(state, action, reward, next_state);
  }

  StepClass last_step_class() const override { return StepClass::Exploit; }
  const char* last_phase_name() const override { return "Greedy"; }
  std::string name() const override { return "greedy"; }

 private:
  void refresh() {
    try {
      Mdp m_hat = est_.mle();
      SolveOptions opts;
      opts.enum_cap = caps_.enum_cap;
      policy_ = solve_optimal(m_hat, opts).bias_opt_policy;
    } catch (const std::exception&) {
      // Keep the previous policy when the estimate cannot be solved.
    }
  }

  LearnerCaps caps_;
  Estimator est_;
  long t_ = 0;
  long next_refresh_ = 1;
  DeterministicPolicy policy_;
};

// ---------------------------------------------------------------------------
// The phase-based explore / co-explore / exploit learner.

class EcoeLearner final : public Learner {
 public:
  EcoeLearner(Schedule schedule, LearnerCaps caps) : schedule_(std::move(schedule)), caps_(caps) {}

  void reset(std::uint64_t master_seed, std::uint32_t run_seed, const LearnerShape& shape) override {
    est_.reset(shape);
    rng_ = RngStream(master_seed, run_seed, RngPurpose::Learner);
    t_ = 0;
    explore_count_ = 0;
    coexplore_count_ = 0;
    panic_count_ = 0;
    phase_active_ = false;
    phases_.clear();
    warm_cuts_.clear();
    known_classes_.clear();
    known_classes_ready_ = false;
    last_class_ = StepClass::Explore;
    last_phase_ = StepClass::Explore;
    solve_opts_ = SolveOptions{};
    solve_opts_.enum_cap = caps_.enum_cap;
    lb_opts_ = LowerBoundOptions{};
    lb_opts_.max_cuts = caps_.max_cuts;
    lb_opts_.outer_rounds = caps_.outer_rounds;
    lb_opts_.hull_iters = caps_.hull_iters;
    lb_opts_.solve = solve_opts_;
    all_known_ = true;
    for (KernelSpace ks : shape.kernel_space) all_known_ = all_known_ && ks == KernelSpace::Known;
  }

  int act(int state) override {
    if (!phase_active_) start_phase(state);
    const Eigen::VectorXd& row = branch_ == Branch::Exploit ? pi_plus_.probs[state]
                                                            : pi_minus_.probs[state];
    return sample_action(rng_, row);
  }

  void observe(int state, int action, double reward, int next_state) override {
    ++t_;
    est_.record(state, action, reward, next_state);
    ++phases_.back().length;
    switch (branch_) {
      case Branch::Explore:
        last_class_ = StepClass::Explore;
        ++explore_count_;
        phase_active_ = false;
        break;
      case Branch::CoExplore:
        last_class_ = StepClass::CoExplore;
        ++explore_count_;
        ++coexplore_count_;
        phase_active_ = false;
        break;
      case Branch::Exploit:
        if (!comp_state_[next_state]) {
          last_class_ = StepClass::Panic;
          last_phase_ = StepClass::Panic;
          phases_.back().label = StepClass::Panic;
          ++panic_count_;
          phase_active_ = false;
        } else {
          last_class_ = StepClass::Exploit;
          if (next_state == phase_start_state_) phase_active_ = false;
        }
        break;
    }
  }

  StepClass last_step_class() const override { return last_class_; }
  const char* last_phase_name() const override { return step_class_name(last_phase_); }
  std::string name() const override { return "ecoe"; }
  long panic_count() const override { return panic_count_; }
  long explore_steps() const override { return explore_count_; }
  long coexplore_steps() const override { return coexplore_count_; }
  const std::vector<PhaseRecord>* phase_records() const override { return &phases_; }

 private:
  enum class Branch { Explore, CoExplore, Exploit };

  void start_phase(int state) {
    long now = t_ + 1;
    phase_active_ = true;
    phase_start_state_ = state;
    FlooredRegularizers E = floored_regularizers(schedule_, static_cast<double>(now),
                                                 explore_count_);
    Mdp m_hat = est_.mle();
    const int S = m_hat.num_states();

    bool communicating = is_communicating(m_hat);
    Branch branch = Branch::Exploit;

    if (!communicating) {
      // Cannot classify anything yet: take one uniformly random step.
      branch = Branch::Explore;
      pi_minus_ = uniform_policy_for_shape(est_.shape);
    } else {
      LeveledOptimalPairs lop = leveled_optimal_pairs(m_hat, E.eps_flat, solve_opts_);
      pi_plus_ = policy_from_pairs(m_hat, lop.pairs);
      components_ = lop.components;

      std::vector<char> recurrent = recurrent_states(m_hat, pi_plus_);
      bool needs_glr = true;
      bool explore = false;
      if (!recurrent[state]) {
        explore = true;
        needs_glr = false;
      }
      if (needs_glr) explore = glr_test(m_hat, lop, now, E);

      if (explore) {
        branch = Branch::Explore;
      } else {
        current_component_ = -1;
        for (std::size_t c = 0; c < components_.size(); ++c) {
          for (int p : components_[c]) {
            if (m_hat.state_action(p).first == state) {
              current_component_ = static_cast<int>(c);
              break;
            }
          }
          if (current_component_ >= 0) break;
        }
        Eigen::VectorXd counts = est_.count_vector();
        if (current_component_ < 0 ||
            square_trick_travel(counts, components_, current_component_)) {
          branch = Branch::CoExplore;
        } else {
          branch = Branch::Exploit;
          comp_state_.assign(S, 0);
          for (int p : components_[current_component_]) {
            comp_state_[m_hat.state_action(p).first] = 1;
          }
        }
      }

      if (branch != Branch::Exploit) {
        pi_minus_ = make_exploration_policy(m_hat, E);
      }
    }

    branch_ = branch;
    StepClass label = branch == Branch::Explore    ? StepClass::Explore
                      : branch == Branch::CoExplore ? StepClass::CoExplore
                                                    : StepClass::Exploit;
    last_phase_ = label;
    phases_.push_back(PhaseRecord{static_cast<long>(phases_.size()) + 1, now, 0, label});
  }

  StochasticPolicy policy_from_pairs(const Mdp& m_hat, const std::vector<int>& pairs) {
    const int S = m_hat.num_states();
    std::vector<std::vector<int>> actions(S);
    for (int p : pairs) {
      auto [s, a] = m_hat.state_action(p);
      actions[s].push_back(a);
    }
    StochasticPolicy pi;
    pi.probs.resize(S);
    for (int s = 0; s < S; ++s) {
      int A = m_hat.num_actions(s);
      if (actions[s].empty()) {
        pi.probs[s] = Eigen::VectorXd::Constant(A, 1.0 / A);
      } else {
        pi.probs[s] = Eigen::VectorXd::Zero(A);
        for (int a : actions[s]) pi.probs[s](a) = 1.0 / actions[s].size();
      }
    }
    return pi;
  }

  bool glr_test(const Mdp& m_hat, const LeveledOptimalPairs& lop, long now,
                const FlooredRegularizers& E) {
    try {
      Eigen::VectorXd counts = est_.count_vector();
      std::vector<int> protected_pairs = count_skeleton(counts, static_cast<double>(now));
      protected_pairs.insert(protected_pairs.end(), lop.pairs.begin(), lop.pairs.end());
      std::sort(protected_pairs.begin(), protected_pairs.end());
      protected_pairs.erase(std::unique(protected_pairs.begin(), protected_pairs.end()),
                            protected_pairs.end());
      InnerResult inner;
      if (all_known_) {
        if (!known_classes_ready_) {
          known_classes_ = enumerate_recurrent_classes(m_hat, solve_opts_.enum_cap);
          known_classes_ready_ = true;
        }
        inner = confusing_weighted_kl_min(counts, m_hat, protected_pairs, known_classes_,
                                          solve_opts_);
      } else {
        inner = confusing_weighted_kl_min(counts, m_hat, protected_pairs, solve_opts_);
      }
      double threshold = (1.0 + E.eps_test) * (now > 1 ? std::log(static_cast<double>(now)) : 0.0);
      return inner.value <= threshold;
    } catch (const std::exception&) {
      return true;
    }
  }

  StochasticPolicy make_exploration_policy(const Mdp& m_hat, const FlooredRegularizers& E) {
    try {
      RegularizerTriple triple{E.eps_flat, E.eps_unif, E.eps_reg};
      ExplorationPolicyResult res = exploration_policy(m_hat, triple, warm_cuts_, lb_opts_);
      warm_cuts_ = res.lb.cuts;
      return res.policy;
    } catch (const std::exception&) {
      return uniform_policy_for_shape(est_.shape);
    }
  }

  Schedule schedule_;
  LearnerCaps caps_;
  SolveOptions solve_opts_;
  LowerBoundOptions lb_opts_;
  Estimator est_;
  RngStream rng_;
  long t_ = 0;
  long explore_count_ = 0;
  long coexplore_count_ = 0;
  long panic_count_ = 0;

  bool phase_active_ = false;
  Branch branch_ = Branch::Explore;
  int phase_start_state_ = 0;
  int current_component_ = -1;
  StochasticPolicy pi_plus_;
  StochasticPolicy pi_minus_;
  std::vector<std::vector<int>> components_;
  std::vector<char> comp_state_;
  std::vector<ConfusingCandidate> warm_cuts_;
  std::vector<RecurrentClassInfo> known_classes_;
  bool known_classes_ready_ = false;
  bool all_known_ = true;

  StepClass last_class_ = StepClass::Explore;
  StepClass last_phase_ = StepClass::Explore;
  std::vector<PhaseRecord> phases_;
};

}  // namespace

LearnerConfig parse_learner_config(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("learner config: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw std::runtime_error("learner config: expected an object");

  LearnerConfig cfg;
  nlohmann::ordered_json canon;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& key = it.key();
    if (key != "algo" && key != "schedule" && key != "caps") {
      throw std::runtime_error("learner config: unknown key '" + key + "'");
    }
  }
  cfg.algo = j.value("algo", std::string("ecoe"));
  if (cfg.algo != "ecoe" && cfg.algo != "uniform" && cfg.algo != "greedy") {
    throw std::runtime_error("learner config: unknown algo '" + cfg.algo + "'");
  }
  canon["algo"] = cfg.algo;

  cfg.schedule = default_schedule();
  if (j.contains("schedule")) {
    const auto& sj = j["schedule"];
    if (sj.is_string()) {
      if (sj.get<std::string>() != "default") {
        throw std::runtime_error("learner config: unknown schedule '" + sj.get<std::string>() + "'");
      }
      canon["schedule"] = "default";
    } else if (sj.is_object()) {
      double flat = sj.value("eps_flat", 1.0);
      double test = sj.value("eps_test", 1.0);
      double unif = sj.value("eps_unif", 1.0);
      double reg = sj.value("eps_reg", 1.0);
      for (auto it = sj.begin(); it != sj.end(); ++it) {
        const std::string& key = it.key();
        if (key != "eps_flat" && key != "eps_test" && key != "eps_unif" && key != "eps_reg") {
          throw std::runtime_error("learner config: unknown schedule key '" + key + "'");
        }
      }
      cfg.schedule = constant_schedule(flat, test, unif, reg);
      canon["schedule"] = {{"eps_flat", flat}, {"eps_test", test}, {"eps_unif", unif},
                          {"eps_reg", reg}};
    } else {
      throw std::runtime_error("learner config: schedule must be \"default\" or an object");
    }
  } else {
    canon["schedule"] = "default";
  }

  if (j.contains("caps")) {
    const auto& cj = j["caps"];
    if (!cj.is_object()) throw std::runtime_error("learner config: caps must be an object");
    for (auto it = cj.begin(); it != cj.end(); ++it) {
      const std::string& key = it.key();
      if (key != "enum_cap" && key != "max_cuts" && key != "outer_rounds" && key != "hull_iters") {
        throw std::runtime_error("learner config: unknown caps key '" + key + "'");
      }
    }
    cfg.caps.enum_cap = cj.value("enum_cap", cfg.caps.enum_cap);
    cfg.caps.max_cuts = cj.value("max_cuts", cfg.caps.max_cuts);
    cfg.caps.outer_rounds = cj.value("outer_rounds", cfg.caps.outer_rounds);
    cfg.caps.hull_iters = cj.value("hull_iters", static_cast<long long>(cfg.caps.hull_iters));
  }
  canon["caps"] = {{"enum_cap", cfg.caps.enum_cap},
                   {"max_cuts", cfg.caps.max_cuts},
                   {"outer_rounds", cfg.caps.outer_rounds},
                   {"hull_iters", cfg.caps.hull_iters}};
  cfg.canonical = canon.dump();
  return cfg;
}

std::unique_ptr<Learner> make_learner(const LearnerConfig& cfg) {
  if (cfg.algo == "uniform") return std::make_unique<UniformRandomLearner>();
  if (cfg.algo == "greedy") return std::make_unique<GreedyMleLearner>(cfg.caps);
  return std::make_unique<EcoeLearner>(cfg.schedule, cfg.caps);
}

}  // namespace avgmdp
