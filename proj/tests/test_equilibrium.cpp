#include <doctest.h>

#include <cmath>

#include "misspec/equilibrium.hpp"
#include "misspec/presets.hpp"
#include "misspec/simulate.hpp"

using namespace misspec;
using nlohmann::json;

namespace {
const ActionDist kCenter3({1.0 / 3, 1.0 / 3, 1.0 / 3});
const ActionDist kHalf({0.5, 0.5});
}  // namespace

TEST_CASE("equilibrium residuals on the worked examples") {
  const Experiment neg = make_preset("negative-reinforcement");
  CHECK(equilibrium_residual(neg.env, neg.policy, kHalf) <= 1e-12);
  CHECK(equilibrium_residual(neg.env, neg.policy, ActionDist({1.0, 0.0})) ==
        doctest::Approx(std::sqrt(2.0)).epsilon(1e-9));
  const Experiment tri = make_preset("triangle");
  CHECK(equilibrium_residual(tri.env, tri.policy, kCenter3) <= 1e-12);
}

TEST_CASE("find_equilibria isolates the unique equilibria") {
  const Experiment neg = make_preset("negative-reinforcement");
  const auto e1 = find_equilibria(neg.env, neg.policy, 60);
  REQUIRE(e1.points.size() == 1);
  CHECK(distance(e1.points[0], kHalf) <= 1e-9);
  CHECK_FALSE(e1.component_is_continuum[0]);

  const Experiment tri = make_preset("triangle");
  const auto e2 = find_equilibria(tri.env, tri.policy, 24);
  REQUIRE(e2.points.size() == 1);
  CHECK(distance(e2.points[0], kCenter3) <= 1e-9);
}

TEST_CASE("the redundant action creates a detected continuum") {
  const Experiment red = make_preset("redundant-action");
  const auto found = find_equilibria(red.env, red.policy, 24);
  REQUIRE(found.n_components() == 1);
  CHECK(found.component_is_continuum[0]);
  CHECK(found.points.size() >= 3);
  for (const auto& p : found.points) {
    CHECK(std::abs(p[0] - 1.0 / 3) <= 1e-6);
    CHECK(std::abs(p[1] - 1.0 / 3) <= 1e-6);
    CHECK(std::abs(p[2] + p[3] - 1.0 / 3) <= 1e-6);
  }
}

TEST_CASE("example-1 equilibrium is attracting; the triangle center is not") {
  const Experiment neg = make_preset("negative-reinforcement");
  const TargetSet a_half{{kHalf}, false};
  const auto cert =
      test_attracting(neg.env, neg.policy, a_half, 0.4, 0.05, 10.0, 8, 4);
  CHECK(cert.verdict == Verdict::Attracting);

  const Experiment tri = make_preset("triangle");
  const TargetSet a_center{{kCenter3}, false};
  const auto cert2 =
      test_attracting(tri.env, tri.policy, a_center, 0.3, 0.05, 10.0, 8, 4);
  CHECK(cert2.verdict == Verdict::Inconclusive);
}

TEST_CASE("the triangle limit cycle is attracting") {
  const Experiment tri = make_preset("triangle");
  const TargetSet cycle{triangle_cycle_polygon(), true};
  const auto cert = test_attracting(tri.env, tri.policy, cycle, 0.25, 0.05, 25.0, 8, 4);
  CHECK(cert.verdict == Verdict::Attracting);
}

TEST_CASE("repelling verdicts separate the two examples") {
  const Experiment tri = make_preset("triangle");
  const auto rep = test_repelling(tri.env, tri.policy, kCenter3, 0.2, 20.0, 4,
                                  {0.9, 0.99, 0.999}, 4);
  CHECK(rep.verdict == Verdict::Repelling);

  const Experiment neg = make_preset("negative-reinforcement");
  const auto not_rep = test_repelling(neg.env, neg.policy, kHalf, 0.2, 20.0, 4,
                                      {0.9, 0.99, 0.999}, 4);
  CHECK(not_rep.verdict == Verdict::Inconclusive);

  CHECK_THROWS_AS(test_repelling(neg.env, neg.policy, ActionDist({0.9, 0.1}), 0.2,
                                 10.0, 2, {0.9}, 2),
                  NotAnEquilibrium);
}

TEST_CASE("a continuum point of the redundant example is repelling") {
  const Experiment red = make_preset("redundant-action");
  const ActionDist point({1.0 / 3, 1.0 / 3, 1.0 / 6, 1.0 / 6});
  const auto rep = test_repelling(red.env, red.policy, point, 0.15, 20.0, 3,
                                  {0.9, 0.99}, 3);
  CHECK(rep.verdict == Verdict::Repelling);
}

TEST_CASE("robust attraction on example-1 and a strict pure equilibrium") {
  const Experiment neg = make_preset("negative-reinforcement");
  const TargetSet a_half{{kHalf}, false};
  const auto att = test_attracting(neg.env, neg.policy, a_half, 0.4, 0.05, 10.0, 6, 4);
  REQUIRE(att.verdict == Verdict::Attracting);
  const auto rob =
      test_robust_attracting(neg.env, neg.policy, a_half, 0.1, 0.01, 10.0, 6, att);
  CHECK(rob.verdict == Verdict::RobustlyAttracting);

  // strict pure equilibrium of the positively-reinforcing preset
  const Experiment pos = make_preset("positively-reinforcing");
  const TargetSet pure_x2{{ActionDist({0.0, 1.0, 0.0, 0.0})}, false};
  const auto att2 =
      test_attracting(pos.env, pos.policy, pure_x2, 0.15, 0.02, 10.0, 6, 4);
  REQUIRE(att2.verdict == Verdict::Attracting);
  const auto rob2 =
      test_robust_attracting(pos.env, pos.policy, pure_x2, 0.05, 0.01, 10.0, 6, att2);
  CHECK(rob2.verdict == Verdict::RobustlyAttracting);

  // a perturbation larger than the basin margin cannot certify
  const auto rob3 =
      test_robust_attracting(neg.env, neg.policy, a_half, 0.1, 0.6, 10.0, 6, att);
  CHECK(rob3.verdict == Verdict::Inconclusive);

  StabilityCertificate bogus;
  bogus.verdict = Verdict::Inconclusive;
  CHECK_THROWS_AS(
      test_robust_attracting(neg.env, neg.policy, a_half, 0.1, 0.01, 5.0, 2, bogus),
      MissingBasin);
}

TEST_CASE("one-dimensional model classification matches the worked example") {
  const Experiment ex = make_preset("one-dimensional");
  CHECK(classify_model(ex.env, ex.policy, 0.0, 0.05) == ModelClass::AttractingModel);
  CHECK(classify_model(ex.env, ex.policy, 2.0 / 3.0, 0.05) ==
        ModelClass::AttractingModel);
  CHECK(classify_model(ex.env, ex.policy, 1.0 / 3.0, 0.05) ==
        ModelClass::RepellingModel);
}

TEST_CASE("def-8 exclusion forces Neither when a pure model sits at theta*") {
  const Experiment pos = make_preset("positively-reinforcing");
  // theta(delta_x3) = 0.5 equals theta*, so repelling is excluded and the
  // window is not attracting either
  CHECK(classify_model(pos.env, pos.policy, 0.5, 0.05) == ModelClass::Neither);
}

TEST_CASE("equilibrium models of the one-dimensional example") {
  const Experiment ex = make_preset("one-dimensional");
  const auto models = equilibrium_models(ex.env, ex.policy);
  REQUIRE(models.size() == 3);
  CHECK(std::abs(models[0] - 0.0) <= 1e-9);
  CHECK(std::abs(models[1] - 1.0 / 3.0) <= 1e-9);
  CHECK(std::abs(models[2] - 2.0 / 3.0) <= 1e-9);
}

TEST_CASE("a constant policy has its single fixed point") {
  json doc = preset_config("one-dimensional");
  doc["policy"] = {{"kind", "table1d"},
                   {"breakpoints", json::array()},
                   {"interval_actions", {{"x0"}}},
                   {"breakpoint_actions", json::array()}};
  const Experiment ex = load_experiment(doc);
  const auto models = equilibrium_models(ex.env, ex.policy);
  REQUIRE(models.size() == 1);
  CHECK(std::abs(models[0] - 0.0) <= 1e-9);
}

TEST_CASE("staircase of the positively-reinforcing preset") {
  const Experiment pos = make_preset("positively-reinforcing");
  const Staircase st = build_staircase(pos.env, pos.policy);
  REQUIRE(st.fixed_points.size() == 3);
  CHECK(st.fixed_points[0].theta == doctest::Approx(0.35).epsilon(1e-12));
  CHECK(st.fixed_points[0].case_id == 3);
  CHECK(st.fixed_points[1].theta == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(st.fixed_points[1].case_id == 2);
  CHECK(st.fixed_points[2].theta == doctest::Approx(0.85).epsilon(1e-12));
  CHECK(st.fixed_points[2].case_id == 3);
  // case-3 points classify attracting, the case-2 point repelling
  CHECK(classify_model(pos.env, pos.policy, 0.35, 0.04) ==
        ModelClass::AttractingModel);
  CHECK(classify_model(pos.env, pos.policy, 0.7, 0.04) == ModelClass::RepellingModel);
  CHECK(classify_model(pos.env, pos.policy, 0.85, 0.04) ==
        ModelClass::AttractingModel);
}

TEST_CASE("one-dimensional staircase has the policy breakpoints") {
  const Experiment ex = make_preset("one-dimensional");
  const Staircase st = build_staircase(ex.env, ex.policy);
  REQUIRE(st.breakpoints.size() == 4);
  CHECK(st.breakpoints[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(st.breakpoints[2] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  // monotone selection always leaves at least one fixed point
  CHECK(!st.fixed_points.empty());
}

TEST_CASE("weak identification holds on the presets and fails on a built tie") {
  const Experiment neg = make_preset("negative-reinforcement");
  CHECK(check_weak_identification(neg.env, kHalf).ok);

  // two models tie in KLD but induce different on-path distributions
  const json doc = {
      {"actions", {"a"}},
      {"truth", {{"kind", "discrete"}, {"support", {"0", "1"}}, {"pmf", {{0.5, 0.5}}}}},
      {"payoff", {{"table", {{0.0, 1.0}}}}},
      {"models",
       {{"family_kind", "discrete_table"},
        {"grid", {{"points", {{0.0}, {1.0}}}}},
        {"prior", "uniform"},
        {"table", {{{0.3, 0.7}}, {{0.7, 0.3}}}}}}};
  const Environment env = load_environment(doc);
  const auto res = check_weak_identification(env, ActionDist({1.0}));
  CHECK_FALSE(res.ok);
  CHECK(!res.witness.empty());
}

TEST_CASE("berk-nash residual on example-1") {
  const Experiment neg = make_preset("negative-reinforcement");
  CHECK(berk_nash_residual(neg.env, kHalf, 200) <= 1e-9);
  CHECK(berk_nash_residual(neg.env, ActionDist({1.0, 0.0}), 200) > 0.5);
}

TEST_CASE("model classes agree with sigma-space stability certificates") {
  const Experiment ex = make_preset("one-dimensional");
  // attracting model 0 -> pure x0 equilibrium
  {
    const TargetSet A{{ActionDist({1.0, 0.0})}, false};
    const auto att = test_attracting(ex.env, ex.policy, A, 0.2, 0.05, 12.0, 5, 4);
    CHECK(att.verdict == Verdict::Attracting);
    const auto rob =
        test_robust_attracting(ex.env, ex.policy, A, 0.05, 0.01, 12.0, 5, att);
    CHECK(rob.verdict == Verdict::RobustlyAttracting);
  }
  // attracting model 2/3 -> mixed equilibrium (1/3, 2/3)
  {
    const TargetSet A{{ActionDist({1.0 / 3, 2.0 / 3})}, false};
    const auto att = test_attracting(ex.env, ex.policy, A, 0.2, 0.05, 12.0, 5, 4);
    CHECK(att.verdict == Verdict::Attracting);
    const auto rob =
        test_robust_attracting(ex.env, ex.policy, A, 0.05, 0.01, 12.0, 5, att);
    CHECK(rob.verdict == Verdict::RobustlyAttracting);
  }
  // repelling model 1/3 -> mixed equilibrium (2/3, 1/3)
  {
    const auto rep = test_repelling(ex.env, ex.policy, ActionDist({2.0 / 3, 1.0 / 3}),
                                    0.12, 15.0, 4, {0.9, 0.99, 0.999}, 4);
    CHECK(rep.verdict == Verdict::Repelling);
  }
}

TEST_CASE("settled trajectories end near an enumerated equilibrium") {
  const Experiment neg = make_preset("negative-reinforcement");
  LearnOptions opt;
  opt.horizon = 30000;
  opt.seed = 12;
  opt.record_every = 1000;
  const Trajectory traj = run_learning(neg.env, neg.policy, opt);
  // last-decade variation
  double var = 0.0;
  const auto& steps = traj.steps;
  for (std::size_t i = steps.size() - 1; i > 0; --i) {
    if (steps[i].t < opt.horizon / 10 * 9) break;
    var = std::max(var, distance(steps[i].sigma, steps.back().sigma));
  }
  if (var < 1e-3) {
    const int res = 60;
    const auto found = find_equilibria(neg.env, neg.policy, res);
    double best = 1e300;
    for (const auto& p : found.points)
      best = std::min(best, distance(steps.back().sigma, p));
    CHECK(best <= 10.0 / res);
  }
}
