#include <doctest.h>

#include <cmath>

#include "misspec/equilibrium.hpp"
#include "misspec/inclusion.hpp"
#include "misspec/presets.hpp"

using namespace misspec;
using nlohmann::json;

namespace {

const ActionDist kCenter3({1.0 / 3, 1.0 / 3, 1.0 / 3});

double norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("di_rhs at the pure-x1 frequency prescribes switching to x2") {
  const Experiment ex = make_preset("negative-reinforcement");
  const auto vel = di_rhs(ex.env, ex.policy, ActionDist({1.0, 0.0}));
  REQUIRE(vel.size() == 1);
  CHECK(vel[0][0] == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(vel[0][1] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("di_rhs at the indifference point contains zero in its hull") {
  const Experiment ex = make_preset("negative-reinforcement");
  const ActionDist half({0.5, 0.5});
  const auto vel = di_rhs(ex.env, ex.policy, half);
  REQUIRE(vel.size() == 2);
  CHECK(norm(min_norm_velocity(half, {0, 1})) <= 1e-12);
  // extreme velocities are +-(1/2, -1/2)
  CHECK(std::abs(std::abs(vel[0][0]) - 0.5) < 1e-12);
}

TEST_CASE("equilibria of the presets are stationary for the hull") {
  const Experiment tri = make_preset("triangle");
  const auto set = di_action_set(tri.env, tri.policy, kCenter3);
  REQUIRE(set.size() == 3);
  CHECK(norm(min_norm_velocity(kCenter3, set)) <= 1e-12);
}

TEST_CASE("example-1 path matches the analytic exponential and then slides") {
  json doc = preset_config("negative-reinforcement");
  doc["models"]["grid"] = {{"lo", 0.001}, {"hi", 0.999}, {"n", 2001}};
  const Experiment ex = load_experiment(doc);
  Strategy fil;
  fil.kind = SelectionKind::Filippov;
  const auto paths =
      integrate_di(ex.env, ex.policy, ActionDist({1.0, 0.0}), 5.0, 1e-3, fil);
  REQUIRE(paths.size() == 1);
  const auto& p = paths[0];
  const double tswitch = std::log(2.0);
  double max_err = 0.0;
  for (std::size_t i = 0; i < p.times.size(); ++i) {
    const double t = p.times[i];
    if (t <= tswitch)
      max_err = std::max(max_err, std::abs(p.states[i][0] - std::exp(-t)));
    else
      CHECK(std::abs(p.states[i][0] - 0.5) <= 1e-3);
  }
  CHECK(max_err <= 1e-3);
  REQUIRE(!p.events.empty());
  CHECK(p.events[0].time == doctest::Approx(tswitch).epsilon(1e-3));
}

TEST_CASE("the inscribed-triangle spiral visits its switching points") {
  const Experiment ex = make_preset("robust-counterexample-base");
  Strategy strat;
  strat.kind = SelectionKind::FixedSelection;
  strat.priority = {1};  // start with x2
  const auto paths = integrate_di(ex.env, ex.policy,
                                  ActionDist({2.0 / 3, 0.0, 1.0 / 3}), 4.0, 1e-3, strat);
  const auto& p = paths[0];
  REQUIRE(p.events.size() >= 3);
  const std::vector<std::vector<double>> expected = {
      {1.0 / 3, 0.5, 1.0 / 6}, {2.0 / 9, 1.0 / 3, 4.0 / 9}, {5.0 / 12, 0.25, 1.0 / 3}};
  // event states are the recorded states at the event times
  std::vector<ActionDist> hits;
  for (const auto& ev : p.events) {
    for (std::size_t i = 0; i < p.times.size(); ++i)
      if (p.times[i] == ev.time) {
        hits.push_back(p.states[i]);
        break;
      }
  }
  REQUIRE(hits.size() >= 3);
  for (int k = 0; k < 3; ++k)
    CHECK(distance(hits[k], ActionDist(expected[k])) <= 1e-3);
}

TEST_CASE("triangle paths spiral out onto the stored limit cycle") {
  const Experiment ex = make_preset("triangle");
  Strategy fil;
  fil.kind = SelectionKind::Filippov;
  const auto paths = integrate_di(ex.env, ex.policy,
                                  ActionDist({0.36, 0.33, 0.31}), 40.0, 1e-3, fil);
  const auto cycle = triangle_cycle_polygon();
  TargetSet target{cycle, true};
  // the tail of the path stays on the cycle polygon
  const auto& p = paths[0];
  for (std::size_t i = 0; i < p.times.size(); ++i)
    if (p.times[i] >= 30.0) CHECK(target.distance_to(p.states[i]) <= 5e-3);
}

TEST_CASE("a path started at an equilibrium stays there") {
  const Experiment ex = make_preset("triangle");
  Strategy fil;
  fil.kind = SelectionKind::Filippov;
  const auto paths = integrate_di(ex.env, ex.policy, kCenter3, 5.0, 1e-3, fil);
  for (const auto& st : paths[0].states)
    CHECK(distance(st, kCenter3) <= 1e-12);
}

TEST_CASE("epsilon zero reduces bit-exactly to the unperturbed integrator") {
  const Experiment ex = make_preset("triangle");
  Strategy fil;
  fil.kind = SelectionKind::Filippov;
  const ActionDist s0({0.5, 0.3, 0.2});
  const auto a = integrate_di(ex.env, ex.policy, s0, 3.0, 1e-3, fil);
  const auto b = integrate_perturbed_di(ex.env, ex.policy, s0, 3.0, 1e-3, 0.0, fil);
  REQUIRE(a[0].times.size() == b[0].times.size());
  for (std::size_t i = 0; i < a[0].times.size(); ++i)
    CHECK(a[0].states[i].w == b[0].states[i].w);
}

TEST_CASE("small perturbation keeps example-1 near its equilibrium") {
  const Experiment ex = make_preset("negative-reinforcement");
  Strategy fil;
  fil.kind = SelectionKind::Filippov;
  const auto paths = integrate_perturbed_di(ex.env, ex.policy, ActionDist({1.0, 0.0}),
                                            6.0, 1e-3, 0.01, fil);
  const auto& p = paths[0];
  CHECK(std::abs(p.states.back()[0] - 0.5) <= 0.02);
}

TEST_CASE("perturbation pushes triangle paths off the repelling center") {
  const Experiment ex = make_preset("triangle");
  Strategy br;
  br.kind = SelectionKind::BranchSample;
  br.count = 4;
  br.seed = 17;
  ActionDist near_center({1.0 / 3 + 0.005, 1.0 / 3, 1.0 / 3 - 0.005});
  const auto paths =
      integrate_perturbed_di(ex.env, ex.policy, near_center, 10.0, 1e-3, 0.01, br);
  for (const auto& p : paths) {
    bool left = false;
    for (const auto& st : p.states)
      if (distance(st, kCenter3) > 0.05) left = true;
    CHECK(left);
  }
}

TEST_CASE("states remain in the simplex throughout") {
  const Experiment ex = make_preset("triangle");
  Strategy br;
  br.kind = SelectionKind::BranchSample;
  br.count = 4;
  br.seed = 5;
  const auto paths = integrate_di(ex.env, ex.policy,
                                  ActionDist({0.2, 0.5, 0.3}), 10.0, 1e-3, br);
  for (const auto& p : paths)
    for (const auto& st : p.states) {
      double sum = 0.0;
      for (double v : st.w) {
        CHECK(v >= -1e-15);
        sum += v;
      }
      CHECK(std::abs(sum - 1.0) <= 1e-12);
    }
}

TEST_CASE("halving the step is consistent at first order") {
  for (const char* name : {"negative-reinforcement", "triangle", "one-dimensional"}) {
    const Experiment ex = make_preset(name);
    ActionDist s0 = ActionDist::uniform(ex.env.n_actions());
    s0.w[0] += 0.2;
    s0.w[1] -= 0.2;
    Strategy fil;
    fil.kind = SelectionKind::Filippov;
    auto terminal = [&](double h) {
      return integrate_di(ex.env, ex.policy, s0, 4.0, h, fil)[0].states.back();
    };
    const double d1 = distance(terminal(2e-3), terminal(1e-3));
    const double d2 = distance(terminal(1e-3), terminal(5e-4));
    CHECK(d2 <= 2.0 * d1 + 1e-6);
  }
}

TEST_CASE("fixed selection is reproduced inside the branch bundle") {
  const Experiment ex = make_preset("negative-reinforcement");
  Strategy fixed;
  fixed.kind = SelectionKind::FixedSelection;
  const auto fp = integrate_di(ex.env, ex.policy, ActionDist({1.0, 0.0}), 2.0, 1e-3,
                               fixed)[0];
  Strategy br;
  br.kind = SelectionKind::BranchSample;
  br.count = 4;
  const auto bundle = integrate_di(ex.env, ex.policy, ActionDist({1.0, 0.0}), 2.0,
                                   1e-3, br);
  bool found = false;
  for (const auto& p : bundle) {
    if (p.states.size() != fp.states.size()) continue;
    bool same = true;
    for (std::size_t i = 0; i < p.states.size() && same; ++i)
      same = p.states[i].w == fp.states[i].w;
    found = found || same;
  }
  CHECK(found);
}

TEST_CASE("event times on table policies match analytic crossings") {
  const Experiment ex = make_preset("one-dimensional");
  Strategy fil;
  fil.kind = SelectionKind::Filippov;
  // from delta_x1: theta = sigma(x1) = e^{-t} downward, F = {x0} above 2/3
  const auto p =
      integrate_di(ex.env, ex.policy, ActionDist({0.0, 1.0}), 3.0, 1e-3, fil)[0];
  REQUIRE(!p.events.empty());
  CHECK(std::abs(p.events[0].time - std::log(1.5)) <= 1e-8);
}
