#include <doctest.h>

#include <cmath>

#include "misspec/policy.hpp"
#include "misspec/presets.hpp"
#include "misspec/simulate.hpp"

using namespace misspec;
using nlohmann::json;

namespace {

// point-mass belief on the grid point nearest the target
Belief point_mass_near(const Environment& env, double target) {
  Belief b = init_belief(env.models);
  std::size_t best = 0;
  for (std::size_t i = 0; i < env.models.size(); ++i)
    if (std::abs(env.models.points[i][0] - target) <
        std::abs(env.models.points[best][0] - target))
      best = i;
  for (std::size_t i = 0; i < b.log_post.size(); ++i)
    b.log_post[i] = (i == best) ? 0.0 : -1e30;
  return b;
}

Belief belief_with_mean(const Environment& env, double target) {
  // mix the two bracketing grid points to hit the mean exactly
  Belief b = init_belief(env.models);
  std::size_t lo = 0;
  for (std::size_t i = 0; i + 1 < env.models.size(); ++i)
    if (env.models.points[i][0] <= target && target <= env.models.points[i + 1][0])
      lo = i;
  const double a = env.models.points[lo][0], c = env.models.points[lo + 1][0];
  const double w = (c - target) / (c - a);
  for (std::size_t i = 0; i < b.log_post.size(); ++i) b.log_post[i] = -1e30;
  b.log_post[lo] = std::log(w);
  b.log_post[lo + 1] = std::log(1.0 - w);
  return b;
}

}  // namespace

TEST_CASE("myopic actions follow the perceived success probability") {
  const Experiment ex = make_preset("negative-reinforcement");
  SUBCASE("E[theta] = 0.3 prefers x1") {
    const Belief b = belief_with_mean(ex.env, 0.3);
    CHECK(myopic_actions(ex.env, b) == std::vector<int>{0});
  }
  SUBCASE("E[theta] = 0.5 exactly ties both actions") {
    const Belief b = point_mass_near(ex.env, 0.5);  // 0.5 is on the grid
    CHECK(myopic_actions(ex.env, b) == std::vector<int>{0, 1});
  }
  SUBCASE("a one-action environment returns that action") {
    const json doc = {
        {"actions", {"only"}},
        {"truth",
         {{"kind", "discrete"}, {"support", {"0", "1"}}, {"pmf", {{0.5, 0.5}}}}},
        {"payoff", {{"table", {{0.0, 1.0}}}}},
        {"models",
         {{"family_kind", "bernoulli_common"},
          {"grid", {{"points", {{0.5}}}}},
          {"prior", "uniform"}}}};
    const Environment env = load_environment(doc);
    CHECK(myopic_actions(env, init_belief(env.models)) == std::vector<int>{0});
  }
}

TEST_CASE("one-dimensional table policy at means and breakpoints") {
  const Experiment ex = make_preset("one-dimensional");
  CHECK(policy_actions(ex.env, ex.policy, belief_with_mean(ex.env, 0.5)) ==
        std::vector<int>{1});
  CHECK(policy_actions_at_model(ex.env, ex.policy, {1.0 / 3.0}) ==
        std::vector<int>{0, 1});
  CHECK(policy_actions_at_model(ex.env, ex.policy, {2.0 / 3.0}) ==
        std::vector<int>{0, 1});
  CHECK(policy_actions_at_model(ex.env, ex.policy, {0.1}) == std::vector<int>{0});
  CHECK(policy_actions_at_model(ex.env, ex.policy, {0.9}) == std::vector<int>{0});
}

TEST_CASE("triangle cyclic policy selects x2 in the region containing e1") {
  const Experiment ex = make_preset("triangle");
  CHECK(policy_actions_at_model(ex.env, ex.policy, {1.0, 0.0, 0.0}) ==
        std::vector<int>{1});
  CHECK(policy_actions_at_model(ex.env, ex.policy, {0.8, 0.1, 0.1}) ==
        std::vector<int>{1});
  // the pinwheel apex carries all three actions
  const double third = 1.0 / 3.0;
  CHECK(policy_actions_at_model(ex.env, ex.policy, {third, third, third}) ==
        std::vector<int>{0, 1, 2});
}

TEST_CASE("robust-counterexample-base falls back to all actions outside ABC") {
  const Experiment ex = make_preset("robust-counterexample-base");
  // simplex corner e1 lies outside the inscribed triangle
  CHECK(policy_actions_at_model(ex.env, ex.policy, {1.0, 0.0, 0.0}) ==
        std::vector<int>{0, 1, 2});
  // interior of the sector toward AB picks x2
  CHECK(policy_actions_at_model(ex.env, ex.policy, {0.45, 0.35, 0.2}) ==
        std::vector<int>{1});
}

TEST_CASE("select_action honors the rule") {
  CounterRng rng(5, CounterRng::kTieBreakStream);
  CHECK(select_action({2}, TieRule::Lexicographic, rng) == 2);
  CHECK(select_action({0, 1}, TieRule::Lexicographic, rng) == 0);
  CHECK(select_action({0, 1}, TieRule::StickyPrevious, rng, 1) == 1);
  CHECK(select_action({0, 1}, TieRule::StickyPrevious, rng, 3) == 0);
  CHECK_THROWS_AS(select_action({}, TieRule::Lexicographic, rng), EmptyActionSet);
  int ones = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i)
    ones += select_action({0, 1}, TieRule::UniformRandom, rng) == 1;
  CHECK(std::abs(ones / static_cast<double>(n) - 0.5) < 0.02);
}

TEST_CASE("upper hemicontinuity of table policies is enforced") {
  const Experiment ex = make_preset("one-dimensional");
  PolicySpec bad = ex.policy;
  bad.breakpoint_actions[0] = {0};  // drops the right interval's action
  CHECK_THROWS_AS(validate_policy(ex.env, bad), ValidationError);
}

TEST_CASE("table policies reject mismatched model shapes") {
  const Experiment tri = make_preset("triangle");
  CHECK_THROWS_AS(policy_actions_at_model(tri.env, tri.policy, {0.5}),
                  UnsupportedBeliefReduction);
  const Experiment one = make_preset("one-dimensional");
  CHECK_THROWS_AS(policy_actions_at_model(one.env, one.policy, {0.1, 0.2, 0.7}),
                  UnsupportedBeliefReduction);
}

TEST_CASE("myopic argmax is invariant to positive affine payoff changes") {
  Experiment ex = make_preset("negative-reinforcement");
  const Belief b = belief_with_mean(ex.env, 0.41);
  const auto base = myopic_actions(ex.env, b);
  Environment scaled = ex.env;
  for (auto& row : scaled.payoff.table)
    for (auto& v : row) v = 3.5 * v + 2.0;
  scaled.finalize();
  CHECK(myopic_actions(scaled, b) == base);
}

namespace {

Environment bellman_env(double p1, double p2) {
  return load_environment(json{
      {"actions", {"x1", "x2"}},
      {"truth",
       {{"kind", "discrete"},
        {"support", {"0", "1"}},
        {"pmf", {{0.25, 0.75}, {0.75, 0.25}}}}},
      {"payoff", {{"table", {{1.0, 0.0}, {0.0, 1.0}}}}},
      {"models",
       {{"family_kind", "bernoulli_common"},
        {"grid", {{"points", {{p1}, {p2}}}}},
        {"prior", "uniform"}}}});
}

}  // namespace

TEST_CASE("bellman at beta=0 coincides with the myopic program") {
  const Environment env = bellman_env(0.25, 0.75);
  const ValueFunction vf = solve_bellman(env, 0.0, 40, 1e-10);
  CounterRng rng(13, CounterRng::kSamplingStream);
  for (int rep = 0; rep < 100; ++rep) {
    Belief b = init_belief(env.models);
    const double w = rng.next_double();
    b.log_post = {std::log(std::max(w, 1e-300)), std::log(std::max(1.0 - w, 1e-300))};
    CHECK(bellman_actions(env, vf, b) == myopic_actions(env, b));
  }
}

TEST_CASE("bellman with flat payoffs solves the geometric series") {
  Environment env = bellman_env(0.25, 0.75);
  env.payoff.table = {{2.0, 2.0}, {5.0, 5.0}};  // independent of y and belief
  env.finalize();
  const double beta = 0.9;
  const ValueFunction vf = solve_bellman(env, beta, 30, 1e-8);
  for (double v : vf.values)
    CHECK(v == doctest::Approx(5.0 / (1.0 - beta)).epsilon(1e-6));
}

TEST_CASE("bellman value is convex along the belief simplex") {
  const Environment env = bellman_env(0.25, 0.75);
  const ValueFunction vf = solve_bellman(env, 0.5, 200, 1e-10);
  for (std::size_t i = 1; i + 1 < vf.values.size(); ++i) {
    const double mid = 0.5 * (vf.values[i - 1] + vf.values[i + 1]);
    CHECK(vf.values[i] <= mid + 1e-7);
  }
}

TEST_CASE("bellman rejects oversized grids and bad discounts") {
  const Experiment ex = make_preset("negative-reinforcement");
  CHECK_THROWS_AS(solve_bellman(ex.env, 0.5, 10, 1e-8), UnsupportedSize);
  const Environment env = bellman_env(0.25, 0.75);
  CHECK_THROWS_AS(solve_bellman(env, 1.0, 10, 1e-8), DomainError);
}

TEST_CASE("converged values are a bellman fixed point within tolerance") {
  const Environment env = bellman_env(0.25, 0.75);
  const double tol = 1e-9;
  const ValueFunction vf = solve_bellman(env, 0.6, 80, tol);
  // tightening the tolerance moves the values by at most tol/(1-beta)
  const ValueFunction vf2 = solve_bellman(env, 0.6, 80, tol * 1e-3);
  double worst = 0.0;
  for (std::size_t g = 0; g < vf.values.size(); ++g)
    worst = std::max(worst, std::abs(vf.values[g] - vf2.values[g]));
  CHECK(worst <= tol / (1.0 - 0.6));
}

TEST_CASE("three-model bellman solves on the belief triangle") {
  const json doc = {
      {"actions", {"x1", "x2"}},
      {"truth",
       {{"kind", "discrete"},
        {"support", {"0", "1"}},
        {"pmf", {{0.25, 0.75}, {0.75, 0.25}}}}},
      {"payoff", {{"table", {{1.0, 0.0}, {0.0, 1.0}}}}},
      {"models",
       {{"family_kind", "bernoulli_common"},
        {"grid", {{"points", {{0.2}, {0.5}, {0.8}}}}},
        {"prior", "uniform"}}}};
  const Environment env = load_environment(doc);
  // beta = 0 agrees with the myopic program at every grid belief
  const ValueFunction vf0 = solve_bellman(env, 0.0, 24, 1e-10);
  for (std::size_t g = 0; g < vf0.grid.size(); ++g) {
    Belief b = init_belief(env.models);
    for (int i = 0; i < 3; ++i)
      b.log_post[i] = std::log(std::max(vf0.grid[g][i], 1e-300));
    CHECK(vf0.policy_sets[g] == myopic_actions(env, b));
  }
  // discounting exercises the barycentric interpolation of the continuation
  const double tol = 1e-9;
  const ValueFunction vf = solve_bellman(env, 0.5, 24, tol);
  const ValueFunction vf2 = solve_bellman(env, 0.5, 24, tol * 1e-3);
  double worst = 0.0;
  for (std::size_t g = 0; g < vf.values.size(); ++g) {
    worst = std::max(worst, std::abs(vf.values[g] - vf2.values[g]));
    // payoffs lie in [0,1], so W lies in [0, 1/(1-beta)]
    CHECK(vf.values[g] >= -1e-12);
    CHECK(vf.values[g] <= 2.0 + 1e-12);
  }
  CHECK(worst <= tol / (1.0 - 0.5));
}

TEST_CASE("a bellman policy drives the learning loop") {
  json doc = {
      {"actions", {"x1", "x2"}},
      {"truth",
       {{"kind", "discrete"},
        {"support", {"0", "1"}},
        {"pmf", {{0.25, 0.75}, {0.75, 0.25}}}}},
      {"payoff", {{"table", {{1.0, 0.0}, {0.0, 1.0}}}}},
      {"models",
       {{"family_kind", "bernoulli_common"},
        {"grid", {{"points", {{0.25}, {0.75}}}}},
        {"prior", "uniform"}}},
      {"policy", {{"kind", "bellman"}, {"beta", 0.5}, {"resolution", 40}}}};
  const Experiment ex = load_experiment(doc);
  LearnOptions opt;
  opt.horizon = 300;
  opt.seed = 3;
  const Trajectory traj = run_learning(ex.env, ex.policy, opt);
  CHECK(traj.steps.size() == 300);
}
