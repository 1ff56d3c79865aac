#include "avgmdp/model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include <json.hpp>

namespace avgmdp {

namespace {

using ordered_json = nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& what) { throw std::runtime_error("model: " + what); }

}  // namespace

std::pair<int, int> Mdp::state_action(int p) const {
  for (int s = 0; s < num_states(); ++s) {
    if (p < pair_offset[s + 1]) return {s, p - pair_offset[s]};
  }
  throw std::out_of_range("pair index out of range");
}

std::string Mdp::pair_label(int p) const {
  const auto [s, a] = state_action(p);
  return state_names[s] + "," + action_names[s][a];
}

int Mdp::state_index(const std::string& state_name) const {
  for (int s = 0; s < num_states(); ++s)
    if (state_names[s] == state_name) return s;
  throw std::out_of_range("unknown state: " + state_name);
}

int Mdp::pair_by_names(const std::string& state_name, const std::string& action_name) const {
  const int s = state_index(state_name);
  for (int a = 0; a < num_actions(s); ++a)
    if (action_names[s][a] == action_name) return pair_index(s, a);
  throw std::out_of_range("unknown action: " + state_name + "," + action_name);
}

void Mdp::rebuild_offsets() {
  pair_offset.assign(num_states() + 1, 0);
  for (int s = 0; s < num_states(); ++s)
    pair_offset[s + 1] = pair_offset[s] + static_cast<int>(action_names[s].size());
}

Mdp parse_mdp(const std::string& json_text) {
  ordered_json j;
  try {
    j = ordered_json::parse(json_text);
  } catch (const std::exception& e) {
    fail(std::string("invalid JSON: ") + e.what());
  }

  Mdp m;
  m.name = j.value("name", std::string{});
  if (!j.contains("states") || !j["states"].is_array() || j["states"].empty())
    fail("missing or empty 'states' array");
  for (const auto& s : j["states"]) m.state_names.push_back(s.get<std::string>());
  {
    std::unordered_set<std::string> seen(m.state_names.begin(), m.state_names.end());
    if (seen.size() != m.state_names.size()) fail("duplicate state names");
  }

  if (!j.contains("actions") || !j["actions"].is_object()) fail("missing 'actions' object");
  m.action_names.resize(m.state_names.size());
  for (int s = 0; s < m.num_states(); ++s) {
    const auto& key = m.state_names[s];
    if (!j["actions"].contains(key)) fail("no actions for state " + key);
    for (const auto& a : j["actions"][key]) m.action_names[s].push_back(a.get<std::string>());
    if (m.action_names[s].empty()) fail("empty action set for state " + key);
    std::unordered_set<std::string> seen(m.action_names[s].begin(), m.action_names[s].end());
    if (seen.size() != m.action_names[s].size()) fail("duplicate action names at state " + key);
  }
  m.rebuild_offsets();

  const int S = m.num_states();
  const int P = m.pair_offset.back();
  m.kernel.assign(P, Eigen::VectorXd::Zero(S));
  m.reward.assign(P, 0.0);
  m.kernel_space.assign(P, KernelSpace::Known);

  if (!j.contains("kernel") || !j.contains("reward_mean")) fail("missing 'kernel' or 'reward_mean'");
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < m.num_actions(s); ++a) {
      const int p = m.pair_index(s, a);
      const std::string key = m.state_names[s] + "," + m.action_names[s][a];

      if (!j["kernel"].contains(key)) fail("missing kernel row for " + key);
      const auto& row = j["kernel"][key];
      if (!row.is_array() || static_cast<int>(row.size()) != S)
        fail("kernel row for " + key + " must list one probability per state");
      double sum = 0.0;
      for (int t = 0; t < S; ++t) {
        const double v = row[t].get<double>();
        if (v < 0.0) fail("negative probability in kernel row " + key);
        m.kernel[p][t] = v;
        sum += v;
      }
      if (std::abs(sum - 1.0) > 1e-9) fail("kernel row " + key + " sums to " + std::to_string(sum));
      m.kernel[p] /= sum;

      if (!j["reward_mean"].contains(key)) fail("missing reward for " + key);
      const double r = j["reward_mean"][key].get<double>();
      if (r < 0.0 || r > 1.0) fail("reward for " + key + " outside [0,1]");
      m.reward[p] = r;

      if (j.contains("kernel_space") && j["kernel_space"].contains(key)) {
        const std::string ks = j["kernel_space"][key].get<std::string>();
        if (ks == "known")
          m.kernel_space[p] = KernelSpace::Known;
        else if (ks == "free")
          m.kernel_space[p] = KernelSpace::FreeSimplex;
        else
          fail("kernel_space for " + key + " must be 'known' or 'free'");
      }
    }
  }
  return m;
}

Mdp load_mdp(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_mdp(buf.str());
}

std::string mdp_to_json(const Mdp& m, bool pretty) {
  ordered_json j;
  j["name"] = m.name;
  j["states"] = m.state_names;
  ordered_json actions = ordered_json::object();
  for (int s = 0; s < m.num_states(); ++s) actions[m.state_names[s]] = m.action_names[s];
  j["actions"] = actions;
  ordered_json kernel = ordered_json::object();
  ordered_json reward = ordered_json::object();
  ordered_json space = ordered_json::object();
  for (int p = 0; p < m.num_pairs(); ++p) {
    const std::string key = m.pair_label(p);
    std::vector<double> row(m.kernel[p].data(), m.kernel[p].data() + m.kernel[p].size());
    kernel[key] = row;
    reward[key] = m.reward[p];
    space[key] = m.kernel_space[p] == KernelSpace::Known ? "known" : "free";
  }
  j["kernel"] = kernel;
  j["reward_mean"] = reward;
  j["kernel_space"] = space;
  return pretty ? j.dump(2) : j.dump();
}

bool same_skeleton(const Mdp& a, const Mdp& b) {
  if (a.state_names != b.state_names || a.action_names != b.action_names) return false;
  return a.kernel_space == b.kernel_space;
}

bool same_shape(const Mdp& a, const Mdp& b) {
  if (!same_skeleton(a, b)) return false;
  for (int p = 0; p < a.num_pairs(); ++p) {
    for (int t = 0; t < a.num_states(); ++t) {
      const bool pa = a.kernel[p][t] > 0.0;
      const bool pb = b.kernel[p][t] > 0.0;
      if (pa != pb) return false;
    }
  }
  return true;
}

}  // namespace avgmdp
