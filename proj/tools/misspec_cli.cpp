#include <chrono>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "misspec/config.hpp"
#include "misspec/csv.hpp"
#include "misspec/equilibrium.hpp"
#include "misspec/presets.hpp"
#include "misspec/simulate.hpp"
#include "misspec/threads.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace misspec;

namespace {

struct CommonOpts {
  std::string config_path;
  std::string preset_name;
  std::string out_dir = "out";
  std::string seeds = "1..1";
  long horizon = 10000;
  double step = 1e-3;
  int branches = 8;
  long record_every = 1;
  int grid_n = 0;          // override for 1-d grids
  int grid_simplex = 0;    // override for simplex grids
};

json resolve_config(const CommonOpts& opt) {
  json doc;
  if (!opt.preset_name.empty())
    doc = preset_config(opt.preset_name);
  else if (!opt.config_path.empty())
    doc = parse_config_text(read_file(opt.config_path));
  else
    throw SchemaError("provide --preset or --config");
  if (opt.grid_n > 0)
    doc["models"]["grid"] = {{"lo", doc["models"]["grid"].value("lo", 0.0)},
                             {"hi", doc["models"]["grid"].value("hi", 1.0)},
                             {"n", opt.grid_n}};
  if (opt.grid_simplex > 0)
    doc["models"]["grid"] = {{"simplex_res", opt.grid_simplex}};
  return doc;
}

std::vector<std::uint64_t> parse_seeds(const std::string& s) {
  const auto dots = s.find("..");
  std::vector<std::uint64_t> out;
  if (dots == std::string::npos) {
    out.push_back(std::stoull(s));
    return out;
  }
  const std::uint64_t a = std::stoull(s.substr(0, dots));
  const std::uint64_t b = std::stoull(s.substr(dots + 2));
  for (std::uint64_t k = a; k <= b; ++k) out.push_back(k);
  if (out.empty()) throw SchemaError("seed list must be nonempty");
  return out;
}

ActionDist parse_point(const std::string& s, std::size_t n) {
  std::vector<double> w;
  std::istringstream is(s);
  std::string tok;
  while (std::getline(is, tok, ',')) w.push_back(std::stod(tok));
  if (w.size() != n) throw SchemaError("point arity does not match the action count");
  return ActionDist(w);
}

struct Manifest {
  json doc;
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

  Manifest(const std::string& command, const json& config, const json& params) {
    doc["command"] = command;
    doc["config"] = config;
    doc["config_hash"] = config_digest(config);
    doc["params"] = params;
    doc["version"] = "0.1.0";
    doc["outputs"] = json::array();
  }
  void add_output(const std::string& path) { doc["outputs"].push_back(path); }
  void write(const std::string& dir) {
    doc["wall_time_ms"] =
        std::chrono::duration_cast<std::chrono::milliseconds>(
            std::chrono::steady_clock::now() - t0)
            .count();
    write_file(dir + "/manifest.json", doc.dump(2) + "\n");
  }
};

int cmd_preset(const std::string& name) {
  std::cout << preset_config(name).dump(2) << "\n";
  return 0;
}

int cmd_simulate(const CommonOpts& opt) {
  const json config = resolve_config(opt);
  Experiment ex = load_experiment(config);
  const auto seeds = parse_seeds(opt.seeds);
  fs::create_directories(opt.out_dir);
  Manifest manifest("simulate", config,
                    json{{"horizon", opt.horizon},
                         {"seeds", opt.seeds},
                         {"record_every", opt.record_every}});
  std::vector<std::string> files(seeds.size());
  std::vector<Trajectory> trajs(seeds.size());
  parallel_for_index(seeds.size(), [&](std::size_t i) {
    LearnOptions lo;
    lo.horizon = opt.horizon;
    lo.seed = seeds[i];
    lo.record_every = opt.record_every;
    lo.config_hash = config_digest(config);
    trajs[i] = run_learning(ex.env, ex.policy, lo);
  });
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    const std::string path =
        opt.out_dir + "/trajectory_" + std::to_string(seeds[i]) + ".csv";
    write_file(path, trajectory_csv(ex.env, trajs[i]));
    manifest.add_output(path);
  }
  manifest.write(opt.out_dir);
  return 0;
}

int cmd_di(const CommonOpts& opt, const std::string& from, double T, double epsilon,
           const std::string& strategy_name) {
  const json config = resolve_config(opt);
  Experiment ex = load_experiment(config);
  fs::create_directories(opt.out_dir);
  const ActionDist s0 = from.empty() ? ActionDist::uniform(ex.env.n_actions())
                                     : parse_point(from, ex.env.n_actions());
  Strategy strat;
  if (strategy_name == "filippov")
    strat.kind = SelectionKind::Filippov;
  else if (strategy_name == "branch") {
    strat.kind = SelectionKind::BranchSample;
    strat.count = opt.branches;
  } else if (strategy_name.rfind("fixed", 0) == 0) {
    strat.kind = SelectionKind::FixedSelection;
    const auto colon = strategy_name.find(':');
    if (colon != std::string::npos) {
      std::istringstream is(strategy_name.substr(colon + 1));
      std::string tok;
      while (std::getline(is, tok, ','))
        strat.priority.push_back(ex.env.action_index(tok));
    }
  } else {
    throw SchemaError("unknown strategy '" + strategy_name + "'");
  }
  Manifest manifest("di", config,
                    json{{"from", from},
                         {"T", T},
                         {"step", opt.step},
                         {"epsilon", epsilon},
                         {"strategy", strategy_name}});
  const auto paths =
      integrate_perturbed_di(ex.env, ex.policy, s0, T, opt.step, epsilon, strat);
  for (std::size_t b = 0; b < paths.size(); ++b) {
    const std::string path = opt.out_dir + "/dipath_" + std::to_string(b) + ".csv";
    write_file(path, dipath_csv(ex.env, paths[b]));
    manifest.add_output(path);
  }
  manifest.write(opt.out_dir);
  return 0;
}

int cmd_equilibria(const CommonOpts& opt, int resolution, bool stability) {
  const json config = resolve_config(opt);
  Experiment ex = load_experiment(config);
  fs::create_directories(opt.out_dir);
  Manifest manifest("equilibria", config,
                    json{{"resolution", resolution}, {"stability", stability}});
  const auto found = find_equilibria(ex.env, ex.policy, resolution);
  json out;
  out["points"] = json::array();
  for (std::size_t i = 0; i < found.points.size(); ++i) {
    json p;
    p["sigma"] = found.points[i].w;
    p["component"] = found.component[i];
    p["continuum"] = found.component_is_continuum[found.component[i]];
    p["residual"] = equilibrium_residual(ex.env, ex.policy, found.points[i]);
    const auto wid = check_weak_identification(ex.env, found.points[i]);
    p["weakly_identified"] = wid.ok;
    if (wid.ok) p["berk_nash_residual"] = berk_nash_residual(ex.env, found.points[i], 200);
    if (stability && !found.component_is_continuum[found.component[i]]) {
      TargetSet A{{found.points[i]}, false};
      const auto att = test_attracting(ex.env, ex.policy, A, 0.2, 0.05, 15.0, 6, 4);
      p["attracting_certificate"] = att.to_json();
      if (att.verdict != Verdict::Attracting) {
        const auto rep = test_repelling(ex.env, ex.policy, found.points[i], 0.15,
                                        20.0, 4, {0.9, 0.99, 0.999}, 4);
        p["repelling_certificate"] = rep.to_json();
      }
    }
    out["points"].push_back(p);
  }
  const std::string path = opt.out_dir + "/equilibria.json";
  write_file(path, out.dump(2) + "\n");
  manifest.add_output(path);
  manifest.write(opt.out_dir);
  return 0;
}

int cmd_classify(const CommonOpts& opt, double eps) {
  const json config = resolve_config(opt);
  Experiment ex = load_experiment(config);
  fs::create_directories(opt.out_dir);
  Manifest manifest("classify", config, json{{"eps", eps}});
  json out;
  const auto models = equilibrium_models(ex.env, ex.policy);
  out["equilibrium_models"] = models;
  json cls = json::object();
  for (double th : models)
    cls[std::to_string(th)] =
        model_class_name(classify_model(ex.env, ex.policy, th, eps));
  out["classification"] = cls;
  const Staircase st = build_staircase(ex.env, ex.policy);
  json fps = json::array();
  for (const auto& f : st.fixed_points)
    fps.push_back({{"theta", f.theta}, {"case", f.case_id}});
  out["staircase_fixed_points"] = fps;
  const std::string path = opt.out_dir + "/classify.json";
  write_file(path, out.dump(2) + "\n");
  manifest.add_output(path);
  manifest.write(opt.out_dir);
  return 0;
}

int cmd_apt(const CommonOpts& opt, const std::string& t_starts_str, double T) {
  const json config = resolve_config(opt);
  Experiment ex = load_experiment(config);
  fs::create_directories(opt.out_dir);
  std::vector<long> t_starts;
  {
    std::istringstream is(t_starts_str);
    std::string tok;
    while (std::getline(is, tok, ',')) t_starts.push_back(std::stol(tok));
  }
  const auto seeds = parse_seeds(opt.seeds);
  Manifest manifest("apt", config,
                    json{{"t_starts", t_starts},
                         {"T", T},
                         {"seeds", opt.seeds},
                         {"step", opt.step},
                         {"branches", opt.branches}});
  // horizon must cover tau(t_start) + T, i.e. about t_start * e^T steps plus
  // a pad for the harmonic-sum defect (1 - e^{-T})/(2 t_start)
  long max_start = 1;
  for (long t : t_starts) max_start = std::max(max_start, t);
  const long horizon =
      static_cast<long>(std::ceil((max_start + 1) * std::exp(T))) + 16;

  std::ostringstream csv;
  csv << "seed,t_start,apt_distance\n";
  std::vector<std::vector<double>> rows(seeds.size());
  parallel_for_index(seeds.size(), [&](std::size_t i) {
    LearnOptions lo;
    lo.horizon = horizon;
    lo.seed = seeds[i];
    lo.record_every = horizon;  // tau-resolution recording carries the data
    lo.record_tau_resolution = 2e-3;
    Trajectory traj = run_learning(ex.env, ex.policy, lo);
    for (long ts : t_starts) {
      double tau = 0.0;
      for (long k = 1; k <= ts; ++k) tau += 1.0 / static_cast<double>(k);
      AptConfig cfg;
      cfg.step = opt.step;
      cfg.branches = opt.branches;
      cfg.seed = seeds[i];
      rows[i].push_back(apt_distance(ex.env, ex.policy, traj, tau, T, cfg));
    }
  });
  for (std::size_t i = 0; i < seeds.size(); ++i)
    for (std::size_t j = 0; j < t_starts.size(); ++j)
      csv << seeds[i] << ',' << t_starts[j] << ',' << rows[i][j] << '\n';
  const std::string path = opt.out_dir + "/apt.csv";
  write_file(path, csv.str());
  manifest.add_output(path);
  manifest.write(opt.out_dir);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"misspecified-learning simulator and analyzer"};
  app.require_subcommand(1);

  CommonOpts opt;
  std::string from, strategy = "filippov", t_starts = "1000,10000";
  double T = 5.0, epsilon = 0.0, eps_classify = 0.05;
  int resolution = 60;
  bool stability = false;
  std::string preset_to_print;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", opt.config_path, "config file (json or toml)");
    cmd->add_option("--preset", opt.preset_name, "built-in preset name");
    cmd->add_option("--out", opt.out_dir, "output directory");
    cmd->add_option("--grid-n", opt.grid_n, "override 1-d grid size");
    cmd->add_option("--grid-simplex-res", opt.grid_simplex,
                    "override simplex grid resolution");
  };

  auto* p = app.add_subcommand("preset", "print a built-in preset config");
  p->add_option("name", preset_to_print)->required();

  auto* sim = app.add_subcommand("simulate", "run the discrete-time learner");
  add_common(sim);
  sim->add_option("--seeds", opt.seeds, "seed or range a..b");
  sim->add_option("--horizon", opt.horizon, "number of steps");
  sim->add_option("--record-every", opt.record_every, "record thinning");

  auto* di = app.add_subcommand("di", "integrate the differential inclusion");
  add_common(di);
  di->add_option("--from", from, "initial point, comma separated");
  di->add_option("--T", T, "integration horizon");
  di->add_option("--step", opt.step, "euler step");
  di->add_option("--epsilon", epsilon, "perturbation radius");
  di->add_option("--branches", opt.branches, "branch count for branch strategy");
  di->add_option("--strategy", strategy, "filippov | branch | fixed[:a,b,...]");

  auto* eq = app.add_subcommand("equilibria", "enumerate and analyze equilibria");
  add_common(eq);
  eq->add_option("--resolution", resolution, "barycentric scan resolution");
  eq->add_flag("--stability", stability, "emit stability certificates");

  auto* cl = app.add_subcommand("classify", "one-dimensional model classification");
  add_common(cl);
  cl->add_option("--eps", eps_classify, "classification window");

  auto* ap = app.add_subcommand("apt", "asymptotic pseudotrajectory distances");
  add_common(ap);
  ap->add_option("--seeds", opt.seeds, "seed or range a..b");
  ap->add_option("--t-starts", t_starts, "comma separated step indices");
  ap->add_option("--T", T, "window length on the tau clock");
  ap->add_option("--step", opt.step, "euler step");
  ap->add_option("--branches", opt.branches, "DI branch count");

  CLI11_PARSE(app, argc, argv);

  try {
    if (p->parsed()) return cmd_preset(preset_to_print);
    if (sim->parsed()) return cmd_simulate(opt);
    if (di->parsed()) return cmd_di(opt, from, T, epsilon, strategy);
    if (eq->parsed()) return cmd_equilibria(opt, resolution, stability);
    if (cl->parsed()) return cmd_classify(opt, eps_classify);
    if (ap->parsed()) return cmd_apt(opt, t_starts, T);
  } catch (const std::exception& e) {
    std::cerr << nlohmann::json{{"error", e.what()}}.dump() << "\n";
    return 1;
  }
  return 2;
}
