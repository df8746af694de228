#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "misspec/config.hpp"
#include "misspec/csv.hpp"
#include "misspec/equilibrium.hpp"
#include "misspec/kld.hpp"
#include "misspec/presets.hpp"
#include "misspec/simulate.hpp"

namespace py = pybind11;
using namespace misspec;
using nlohmann::json;

namespace {

// Experiments are passed around as parsed config documents; the binding layer
// keeps the C++ objects behind an opaque handle.
struct Handle {
  Experiment ex;
  json config;
};

Handle make_handle(const std::string& config_text) {
  Handle h;
  h.config = parse_config_text(config_text);
  h.ex = load_experiment(h.config);
  return h;
}

Handle make_handle_preset(const std::string& name) {
  Handle h;
  h.config = preset_config(name);
  h.ex = load_experiment(h.config);
  return h;
}

py::dict certificate_dict(const StabilityCertificate& cert) {
  py::dict d;
  d["verdict"] = verdict_name(cert.verdict);
  d["json"] = cert.to_json().dump();
  return d;
}

Strategy strategy_from(const std::string& name, int branches, std::uint64_t seed) {
  Strategy s;
  if (name == "filippov")
    s.kind = SelectionKind::Filippov;
  else if (name == "branch") {
    s.kind = SelectionKind::BranchSample;
    s.count = branches;
    s.seed = seed;
  } else if (name == "fixed")
    s.kind = SelectionKind::FixedSelection;
  else
    throw DomainError("unknown strategy " + name);
  return s;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "misspecified Bayesian learning: KLD minimization, learning "
            "simulation, differential-inclusion dynamics, equilibrium analysis";

  py::class_<Handle>(m, "Experiment")
      .def_property_readonly("actions",
                             [](const Handle& h) { return h.ex.env.actions; })
      .def_property_readonly("config",
                             [](const Handle& h) { return h.config.dump(); })
      .def_property_readonly("grid_size",
                             [](const Handle& h) { return h.ex.env.models.size(); });

  m.def("load_experiment", &make_handle, py::arg("config_text"),
        "Load an environment+policy from a JSON or TOML document");
  m.def("preset", &make_handle_preset, py::arg("name"));
  m.def("preset_names", &preset_names);
  m.def("preset_config",
        [](const std::string& name) { return preset_config(name).dump(2); });

  m.def("validate", [](const Handle& h) {
    py::list out;
    for (const auto& c : validate_environment(h.ex.env).checks)
      out.append(py::make_tuple(c.name, c.pass, c.detail));
    return out;
  });

  m.def(
      "kl_divergence",
      [](const Handle& h, const std::vector<double>& theta,
         const std::vector<double>& sigma) {
        return kl_divergence(h.ex.env, theta, ActionDist(sigma));
      },
      py::arg("experiment"), py::arg("theta"), py::arg("sigma"));

  m.def(
      "minimize_kld",
      [](const Handle& h, const std::vector<double>& sigma, double tie_tol) {
        const auto r = minimize_kld(h.ex.env, ActionDist(sigma), tie_tol);
        py::dict d;
        d["k_star"] = r.k_star;
        d["minimizers"] = r.minimizers;
        if (r.refined_theta) d["refined_theta"] = *r.refined_theta;
        if (r.refined_k) d["refined_k"] = *r.refined_k;
        return d;
      },
      py::arg("experiment"), py::arg("sigma"), py::arg("tie_tol") = 1e-9);

  m.def(
      "closest_model",
      [](const Handle& h, const std::vector<double>& sigma) {
        return closest_model(h.ex.env, ActionDist(sigma));
      },
      py::arg("experiment"), py::arg("sigma"));

  m.def(
      "run_learning",
      [](const Handle& h, long horizon, std::uint64_t seed, long record_every) {
        LearnOptions opt;
        opt.horizon = horizon;
        opt.seed = seed;
        opt.record_every = record_every;
        const Trajectory traj = run_learning(h.ex.env, h.ex.policy, opt);
        py::dict d;
        std::vector<long> ts;
        std::vector<int> actions;
        std::vector<std::vector<double>> sigmas;
        std::vector<double> gaps, taus;
        for (const auto& s : traj.steps) {
          ts.push_back(s.t);
          actions.push_back(s.action);
          sigmas.push_back(s.sigma.w);
          gaps.push_back(s.kl_gap);
          taus.push_back(s.tau);
        }
        d["t"] = ts;
        d["action"] = actions;
        d["sigma"] = sigmas;
        d["kl_gap"] = gaps;
        d["tau"] = taus;
        d["csv"] = trajectory_csv(h.ex.env, traj);
        return d;
      },
      py::arg("experiment"), py::arg("horizon"), py::arg("seed") = 1,
      py::arg("record_every") = 1);

  m.def(
      "integrate_di",
      [](const Handle& h, const std::vector<double>& sigma0, double T, double step,
         double epsilon, const std::string& strategy, int branches,
         std::uint64_t seed, const std::vector<std::string>& priority) {
        Strategy strat = strategy_from(strategy, branches, seed);
        for (const auto& label : priority)
          strat.priority.push_back(h.ex.env.action_index(label));
        const auto paths =
            integrate_perturbed_di(h.ex.env, h.ex.policy, ActionDist(sigma0), T,
                                   step, epsilon, strat);
        py::list out;
        for (const auto& p : paths) {
          py::dict d;
          d["times"] = p.times;
          std::vector<std::vector<double>> st;
          for (const auto& s : p.states) st.push_back(s.w);
          d["states"] = st;
          py::list evs;
          for (const auto& e : p.events)
            evs.append(py::make_tuple(e.time, e.boundary, e.selection));
          d["events"] = evs;
          out.append(d);
        }
        return out;
      },
      py::arg("experiment"), py::arg("sigma0"), py::arg("T"), py::arg("step") = 1e-3,
      py::arg("epsilon") = 0.0, py::arg("strategy") = "filippov",
      py::arg("branches") = 8, py::arg("seed") = 0,
      py::arg("priority") = std::vector<std::string>{});

  m.def(
      "equilibrium_residual",
      [](const Handle& h, const std::vector<double>& sigma) {
        return equilibrium_residual(h.ex.env, h.ex.policy, ActionDist(sigma));
      },
      py::arg("experiment"), py::arg("sigma"));

  m.def(
      "find_equilibria",
      [](const Handle& h, int resolution) {
        const auto found = find_equilibria(h.ex.env, h.ex.policy, resolution);
        py::list out;
        for (std::size_t i = 0; i < found.points.size(); ++i) {
          py::dict d;
          d["sigma"] = found.points[i].w;
          d["component"] = found.component[i];
          d["continuum"] = static_cast<bool>(
              found.component_is_continuum[found.component[i]]);
          out.append(d);
        }
        return out;
      },
      py::arg("experiment"), py::arg("resolution") = 60);

  m.def(
      "test_attracting",
      [](const Handle& h, const std::vector<std::vector<double>>& target,
         bool closed, double U_radius, double eps, double T, int n_init,
         int n_branch) {
        TargetSet A;
        for (const auto& p : target) A.points.emplace_back(p);
        A.closed_polyline = closed;
        return certificate_dict(
            test_attracting(h.ex.env, h.ex.policy, A, U_radius, eps, T, n_init,
                            n_branch));
      },
      py::arg("experiment"), py::arg("target"), py::arg("closed") = false,
      py::arg("U_radius") = 0.3, py::arg("eps") = 0.05, py::arg("T") = 15.0,
      py::arg("n_init") = 6, py::arg("n_branch") = 4);

  m.def(
      "test_repelling",
      [](const Handle& h, const std::vector<double>& sigma_star, double U_radius,
         double T, int n_sigma, int n_branch) {
        return certificate_dict(test_repelling(h.ex.env, h.ex.policy,
                                               ActionDist(sigma_star), U_radius, T,
                                               n_sigma, {0.9, 0.99, 0.999}, n_branch));
      },
      py::arg("experiment"), py::arg("sigma_star"), py::arg("U_radius") = 0.2,
      py::arg("T") = 20.0, py::arg("n_sigma") = 4, py::arg("n_branch") = 4);

  m.def(
      "classify_model",
      [](const Handle& h, double theta_star, double eps) {
        return model_class_name(classify_model(h.ex.env, h.ex.policy, theta_star, eps));
      },
      py::arg("experiment"), py::arg("theta_star"), py::arg("eps") = 0.05);

  m.def(
      "equilibrium_models",
      [](const Handle& h) { return equilibrium_models(h.ex.env, h.ex.policy); },
      py::arg("experiment"));

  m.def(
      "check_weak_identification",
      [](const Handle& h, const std::vector<double>& sigma) {
        const auto r = check_weak_identification(h.ex.env, ActionDist(sigma));
        return py::make_tuple(r.ok, r.witness);
      },
      py::arg("experiment"), py::arg("sigma"));

  m.def(
      "berk_nash_residual",
      [](const Handle& h, const std::vector<double>& sigma, int belief_resolution) {
        return berk_nash_residual(h.ex.env, ActionDist(sigma), belief_resolution);
      },
      py::arg("experiment"), py::arg("sigma"), py::arg("belief_resolution") = 200);

  m.def(
      "solve_bellman",
      [](const Handle& h, double beta, int resolution, double tol) {
        const auto vf = solve_bellman(h.ex.env, beta, resolution, tol);
        py::dict d;
        d["grid"] = vf.grid;
        d["values"] = vf.values;
        d["policy_sets"] = vf.policy_sets;
        return d;
      },
      py::arg("experiment"), py::arg("beta"), py::arg("resolution") = 50,
      py::arg("tol") = 1e-8);

  m.def("triangle_cycle", []() {
    std::vector<std::vector<double>> out;
    for (const auto& p : triangle_cycle_polygon()) out.push_back(p.w);
    return out;
  });

  m.attr("__version__") = "0.1.0";
}
