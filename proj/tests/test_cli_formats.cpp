#include <doctest.h>

#include "misspec/csv.hpp"
#include "misspec/inclusion.hpp"
#include "misspec/presets.hpp"
#include "misspec/simulate.hpp"

using namespace misspec;

TEST_CASE("trajectory csv round-trips its domain type") {
  for (const char* name : {"negative-reinforcement", "triangle"}) {
    const Experiment ex = make_preset(name);
    LearnOptions opt;
    opt.horizon = 40;
    opt.seed = 5;
    const Trajectory traj = run_learning(ex.env, ex.policy, opt);
    const std::string csv = trajectory_csv(ex.env, traj);
    const Trajectory back = parse_trajectory_csv(ex.env, csv);
    REQUIRE(back.steps.size() == traj.steps.size());
    for (std::size_t i = 0; i < traj.steps.size(); ++i) {
      CHECK(back.steps[i].t == traj.steps[i].t);
      CHECK(back.steps[i].action == traj.steps[i].action);
      CHECK(back.steps[i].sigma.w == traj.steps[i].sigma.w);
      CHECK(back.steps[i].kl_gap == traj.steps[i].kl_gap);
      CHECK(back.steps[i].theta_hat == traj.steps[i].theta_hat);
      CHECK(back.steps[i].belief_mean == traj.steps[i].belief_mean);
      if (ex.env.truth.kind == ConsequenceKind::Discrete)
        CHECK(back.steps[i].y.label == traj.steps[i].y.label);
      else
        CHECK(back.steps[i].y.vec == traj.steps[i].y.vec);
    }
  }
}

TEST_CASE("dipath csv round-trips states and events") {
  const Experiment ex = make_preset("robust-counterexample-base");
  Strategy strat;
  strat.kind = SelectionKind::FixedSelection;
  strat.priority = {1};
  const auto paths = integrate_di(ex.env, ex.policy,
                                  ActionDist({2.0 / 3, 0.0, 1.0 / 3}), 2.0, 1e-2,
                                  strat);
  const std::string csv = dipath_csv(ex.env, paths[0]);
  const DIPath back = parse_dipath_csv(ex.env, csv);
  REQUIRE(back.times.size() == paths[0].times.size());
  for (std::size_t i = 0; i < back.times.size(); ++i) {
    CHECK(back.times[i] == paths[0].times[i]);
    CHECK(back.states[i].w == paths[0].states[i].w);
  }
  CHECK(back.events.size() == paths[0].events.size());
}

TEST_CASE("unknown preset is rejected") {
  CHECK_THROWS_AS(preset_config("no-such"), UnknownPreset);
}

TEST_CASE("preset list names load") {
  for (const auto& name : preset_names()) {
    const Experiment ex = make_preset(name);
    CHECK(ex.env.n_actions() >= 1);
  }
}
