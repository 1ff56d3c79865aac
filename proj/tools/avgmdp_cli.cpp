// Command-line front end: exact solving, leveling, measure decomposition,
// regret-rate lower bounds, experiment driving and self-verification for
// communicating average-reward models.
//
// Exit codes: 0 on success, 1 on validation errors (bad flags, malformed
// models or configs, failed verification), 2 when an iterative solver hit its
// budget without converging.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "avgmdp/leveling.hpp"
#include "avgmdp/lowerbound.hpp"
#include "avgmdp/measures.hpp"
#include "avgmdp/model.hpp"
#include "avgmdp/sim.hpp"
#include "avgmdp/simplex.hpp"
#include "avgmdp/solve.hpp"

namespace {

using avgmdp::Mdp;
using json = nlohmann::ordered_json;

double finite_or_nan(double v) { return std::isfinite(v) ? v : std::numeric_limits<double>::quiet_NaN(); }

void emit(const json& j, const std::string& out_path, bool pretty) {
  std::string text = pretty ? j.dump(2) : j.dump();
  text += '\n';
  if (out_path.empty()) {
    std::cout << text;
  } else {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file " + out_path);
    out << text;
  }
}

json pair_map(const Mdp& m, const Eigen::VectorXd& v) {
  json out;
  for (int p = 0; p < m.num_pairs(); ++p) out[m.pair_label(p)] = v(p);
  return out;
}

json pair_list(const Mdp& m, const std::vector<int>& pairs) {
  json out = json::array();
  for (int p : pairs) out.push_back(m.pair_label(p));
  return out;
}

json component_list(const Mdp& m, const std::vector<std::vector<int>>& comps) {
  json out = json::array();
  for (const auto& comp : comps) out.push_back(pair_list(m, comp));
  return out;
}

avgmdp::InvariantMeasure load_measure(const Mdp& m, const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open measure file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  json j = json::parse(buf.str());
  if (!j.is_object()) throw std::runtime_error("measure file must be a JSON object of pair weights");
  avgmdp::InvariantMeasure mu;
  mu.weights = Eigen::VectorXd::Zero(m.num_pairs());
  for (auto it = j.begin(); it != j.end(); ++it) {
    std::string key = it.key();
    auto comma = key.find(',');
    if (comma == std::string::npos) {
      throw std::runtime_error("measure key '" + key + "' is not 'state,action'");
    }
    int p = m.pair_by_names(key.substr(0, comma), key.substr(comma + 1));
    mu.weights(p) = it.value().get<double>();
  }
  return mu;
}

int cmd_solve(const std::string& model_path, const std::string& out_path, bool pretty) {
  Mdp m = avgmdp::load_mdp(model_path);
  avgmdp::OptimalSolution sol = avgmdp::solve_optimal(m);
  json j;
  j["model"] = m.name;
  j["opt_gain"] = sol.opt_gain;
  json bias;
  for (int s = 0; s < m.num_states(); ++s) bias[m.state_names[s]] = sol.opt_bias(s);
  j["opt_bias"] = bias;
  j["gaps"] = pair_map(m, sol.gaps);
  json pol;
  for (int s = 0; s < m.num_states(); ++s) {
    pol[m.state_names[s]] = m.action_names[s][sol.bias_opt_policy[s]];
  }
  j["bias_opt_policy"] = pol;
  j["weakly_optimal_pairs"] = pair_list(m, sol.weakly_optimal_pairs);
  j["optimal_pairs"] = pair_list(m, sol.optimal_pairs);
  j["components"] = component_list(m, sol.components);
  j["diameter"] = avgmdp::diameter(m);
  j["weighted_diameter"] = avgmdp::weighted_diameter(m);
  j["gain_gap"] = finite_or_nan(avgmdp::gain_gap(m));  // serialized as null when infinite
  emit(j, out_path, pretty);
  return 0;
}

int cmd_level(const std::string& model_path, double epsilon, const std::string& out_path,
              bool pretty) {
  Mdp m = avgmdp::load_mdp(model_path);
  avgmdp::LeveledOptimalPairs lop = avgmdp::leveled_optimal_pairs(m, epsilon);
  json j;
  j["model"] = m.name;
  j["epsilon"] = epsilon;
  j["leveled_reward"] = pair_map(m, lop.leveled.leveled_reward);
  j["bumped_pairs"] = pair_list(m, lop.leveled.bumped_pairs);
  j["leveled_optimal_pairs"] = pair_list(m, lop.pairs);
  j["components"] = component_list(m, lop.components);
  avgmdp::LevelingConstant c = avgmdp::leveling_constant(m);
  j["stability_constants"] = {{"c_gain", c.c_gain}, {"c_gaps", c.c_gaps}, {"c_total", c.c_total}};
  emit(j, out_path, pretty);
  return 0;
}

int cmd_decompose(const std::string& model_path, const std::string& measure_path,
                  const std::string& out_path, bool pretty) {
  Mdp m = avgmdp::load_mdp(model_path);
  avgmdp::InvariantMeasure mu =
      measure_path.empty() ? avgmdp::covering_measure(m) : load_measure(m, measure_path);
  avgmdp::UnichainDecomposition dec = avgmdp::decompose_unichain(mu, m);
  json j;
  j["model"] = m.name;
  j["num_terms"] = dec.terms.size();
  json terms = json::array();
  for (const auto& term : dec.terms) {
    json tj;
    tj["coefficient"] = term.coefficient;
    json pol;
    for (int s = 0; s < m.num_states(); ++s) {
      json row;
      for (int a = 0; a < m.num_actions(s); ++a) {
        double v = term.policy.probs[s](a);
        if (v > 0.0) row[m.action_names[s][a]] = v;
      }
      pol[m.state_names[s]] = row;
    }
    tj["policy"] = pol;
    json mw;
    for (int p = 0; p < m.num_pairs(); ++p) {
      if (term.measure.weights(p) > 0.0) mw[m.pair_label(p)] = term.measure.weights(p);
    }
    tj["measure"] = mw;
    tj["cycle"] = pair_list(m, term.cycle_pairs);
    terms.push_back(tj);
  }
  j["terms"] = terms;
  j["residual"] = dec.residual;
  emit(j, out_path, pretty);
  return 0;
}

json cut_json(const Mdp& m, const avgmdp::ConfusingCandidate& cut) {
  json cj;
  cj["target_class"] = pair_list(m, cut.target_class);
  cj["achieved_gain"] = cut.achieved_gain;
  json kl;
  for (int p = 0; p < m.num_pairs(); ++p) {
    if (cut.kl_per_pair(p) > 0.0) kl[m.pair_label(p)] = cut.kl_per_pair(p);
  }
  cj["kl_per_pair"] = kl;
  return cj;
}

int cmd_lower_bound(const std::string& model_path, std::optional<double> eflat,
                    std::optional<double> eunif, std::optional<double> ereg, int levels,
                    const std::string& out_path, bool pretty) {
  Mdp m = avgmdp::load_mdp(model_path);
  json j;
  j["model"] = m.name;
  int given = (eflat ? 1 : 0) + (eunif ? 1 : 0) + (ereg ? 1 : 0);
  if (given > 0 && given < 3) {
    throw std::runtime_error("--eflat, --eunif and --ereg must be given together");
  }
  if (given == 3) {
    avgmdp::RegularizerTriple E{*eflat, *eunif, *ereg};
    avgmdp::LowerBoundSolution sol = avgmdp::regularized_lower_bound(m, E);
    j["eps_flat"] = E.eps_flat;
    j["eps_unif"] = E.eps_unif;
    j["eps_reg"] = E.eps_reg;
    j["eps_unif_effective"] = sol.eps_unif_effective;
    j["value"] = sol.value;
    j["converged"] = sol.converged;
    j["iterations"] = sol.iterations;
    j["measure"] = pair_map(m, sol.measure.weights);
    json cuts = json::array();
    for (const auto& cut : sol.cuts) cuts.push_back(cut_json(m, cut));
    j["cuts"] = cuts;
  } else {
    avgmdp::VanillaReport rep = avgmdp::vanilla_lower_bound(m, levels);
    json lv = json::array();
    for (const auto& level : rep.levels) {
      lv.push_back({{"eps_flat", level.E.eps_flat},
                    {"eps_unif", level.E.eps_unif},
                    {"eps_reg", level.E.eps_reg},
                    {"value", level.value},
                    {"converged", level.converged}});
    }
    j["levels"] = lv;
    j["value"] = rep.value;
    j["extrapolated"] = rep.extrapolated;
  }
  emit(j, out_path, pretty);
  return 0;
}

int cmd_run(const std::string& config_path, int jobs, bool pretty) {
  std::ifstream in(config_path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open config file " + config_path);
  std::stringstream buf;
  buf << in.rdbuf();
  std::uint64_t master = 0;
  if (const char* env = std::getenv("AVGMDP_SEED")) {
    master = std::strtoull(env, nullptr, 10);
  }
  std::string summary = avgmdp::run_experiment(buf.str(), jobs, master);
  if (pretty) {
    std::cout << summary << '\n';
  } else {
    std::cout << json::parse(summary).dump() << '\n';
  }
  return 0;
}

int cmd_verify(const std::string& model_path, const std::string& out_path, bool pretty) {
  Mdp m = avgmdp::load_mdp(model_path);
  json rows = json::array();
  bool all = true;
  auto add = [&](const std::string& name, bool pass, const std::string& detail) {
    rows.push_back({{"property", name}, {"pass", pass}, {"detail", detail}});
    all = all && pass;
  };

  {
    Mdp back = avgmdp::parse_mdp(avgmdp::mdp_to_json(m, false));
    bool ok = avgmdp::same_shape(m, back);
    for (int p = 0; p < m.num_pairs() && ok; ++p) {
      ok = std::abs(m.reward[p] - back.reward[p]) == 0.0 &&
           (m.kernel[p] - back.kernel[p]).cwiseAbs().maxCoeff() <= 1e-15;
    }
    add("serialization_roundtrip", ok, "parse(mdp_to_json(m)) reproduces the model");
  }
  bool comm = avgmdp::is_communicating(m);
  add("communicating", comm, "every state reaches every other state");
  if (comm) {
    double D = avgmdp::diameter(m);
    avgmdp::InvariantMeasure cov = avgmdp::covering_measure(m);
    double floor = 1.0 / (m.num_pairs() * D);
    add("covering_floor", cov.weights.minCoeff() >= floor - 1e-9,
        "covering measure min >= 1/(pairs * diameter)");
    add("covering_invariant", avgmdp::is_invariant(cov, m),
        "covering measure satisfies the flow constraints");
    double eps = 0.5 * floor;
    avgmdp::UniformizedMeasure un = avgmdp::uniformize(cov, m, eps);
    add("uniformize_floor", avgmdp::is_invariant(un.measure, m, un.epsilon_effective),
        "uniformized covering measure is eps-uniform and invariant");
    avgmdp::UnichainDecomposition dec = avgmdp::decompose_unichain(cov, m);
    add("decompose_residual", dec.residual <= 1e-8,
        "unichain decomposition reconstructs the measure");
    avgmdp::OptimalSolution sol = avgmdp::solve_optimal(m);
    add("gaps_nonnegative", sol.gaps.minCoeff() >= 0.0, "optimality gaps are nonnegative");
    add("optimal_pairs_zero_gap",
        [&] {
          for (int p : sol.optimal_pairs) {
            if (sol.gaps(p) > 1e-8) return false;
          }
          return true;
        }(),
        "pairs in optimal components have zero gap");
    double Dw = avgmdp::weighted_diameter(m);
    add("diameter_order", Dw >= D - 1e-9, "worst-policy diameter dominates the optimal diameter");
  }
  json j;
  j["model"] = m.name;
  j["pass"] = all;
  j["properties"] = rows;
  emit(j, out_path, pretty);
  return all ? 0 : 1;
}

int cmd_bound_check(const std::string& model_path, const std::string& out_path, bool pretty) {
  Mdp m = avgmdp::load_mdp(model_path);
  json j;
  j["model"] = m.name;
  double sb = avgmdp::simple_bound(m);
  j["simple_bound"] = finite_or_nan(sb);
  avgmdp::RegularizerTriple E{1e-3, 1e-6, 1e-4};
  avgmdp::LowerBoundSolution sol = avgmdp::regularized_lower_bound(m, E);
  j["k_regularized"] = sol.value;
  j["k_converged"] = sol.converged;
  bool k_le_simple = !std::isfinite(sb) || sol.value <= sb * 1.000001 + 1e-9;
  j["k_le_simple_bound"] = k_le_simple;
  bool ok = k_le_simple;
  try {
    double oracle = avgmdp::policywise_oracle(m, 0.1);
    j["policywise_oracle"] = oracle;
    bool oracle_ok = oracle >= sol.value * 0.95 - 1e-9;
    j["oracle_ge_k"] = oracle_ok;
    ok = ok && oracle_ok;
  } catch (const std::exception& e) {
    j["policywise_oracle"] = nullptr;
    j["oracle_note"] = e.what();
  }
  j["pass"] = ok;
  emit(j, out_path, pretty);
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"exact solving, exploration lower bounds and simulation for "
               "communicating average-reward models"};
  app.require_subcommand(1);

  std::string model_path, out_path, config_path, measure_path;
  bool pretty = false;
  double epsilon = 0.0;
  std::optional<double> eflat, eunif, ereg;
  int levels = 6;
  int jobs = 1;

  app.add_flag("--pretty", pretty, "indent JSON output for reading");

  CLI::App* solve = app.add_subcommand("solve", "optimal gain, bias, gaps and components");
  solve->add_option("--model", model_path, "model JSON file")->required();
  solve->add_option("--out", out_path, "write JSON here instead of stdout");

  CLI::App* level = app.add_subcommand("level", "reward leveling at a flattening width");
  level->add_option("--model", model_path, "model JSON file")->required();
  level->add_option("--epsilon", epsilon, "flattening width (> 0)")->required();
  level->add_option("--out", out_path, "write JSON here instead of stdout");

  CLI::App* decompose =
      app.add_subcommand("decompose", "split an invariant measure into unichain terms");
  decompose->add_option("--model", model_path, "model JSON file")->required();
  decompose->add_option("--measure", measure_path,
                        "JSON file of pair weights (default: covering measure)");
  decompose->add_option("--out", out_path, "write JSON here instead of stdout");

  CLI::App* lower = app.add_subcommand("lower-bound", "regularized exploration lower bound");
  lower->add_option("--model", model_path, "model JSON file")->required();
  lower->add_option("--eflat", eflat, "flattening width (give all three)");
  lower->add_option("--eunif", eunif, "uniformity floor (give all three)");
  lower->add_option("--ereg", ereg, "quadratic penalty (give all three)");
  lower->add_option("--levels", levels, "number of pinned levels to run (default 6)");
  lower->add_option("--out", out_path, "write JSON here instead of stdout");

  CLI::App* run = app.add_subcommand("run", "drive a simulation experiment from a config");
  run->add_option("--config", config_path, "experiment config JSON file")->required();
  run->add_option("--jobs", jobs, "worker threads (default 1)");

  CLI::App* verify = app.add_subcommand("verify", "run the model property suite");
  verify->add_option("--model", model_path, "model JSON file")->required();
  verify->add_option("--out", out_path, "write JSON here instead of stdout");

  CLI::App* bound = app.add_subcommand("bound-check", "compare bound flavors on one model");
  bound->add_option("--model", model_path, "model JSON file")->required();
  bound->add_option("--out", out_path, "write JSON here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << std::endl;
    return 1;
  }

  try {
    if (solve->parsed()) return cmd_solve(model_path, out_path, pretty);
    if (level->parsed()) return cmd_level(model_path, epsilon, out_path, pretty);
    if (decompose->parsed()) return cmd_decompose(model_path, measure_path, out_path, pretty);
    if (lower->parsed()) return cmd_lower_bound(model_path, eflat, eunif, ereg, levels, out_path, pretty);
    if (run->parsed()) return cmd_run(config_path, jobs, pretty);
    if (verify->parsed()) return cmd_verify(model_path, out_path, pretty);
    if (bound->parsed()) return cmd_bound_check(model_path, out_path, pretty);
  } catch (const avgmdp::SolverError& e) {
    std::cerr << "solver error: " << e.what() << std::endl;
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
  return 1;
}
