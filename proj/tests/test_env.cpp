#include <doctest.h>

#include <cmath>

#include "misspec/env.hpp"
#include "misspec/presets.hpp"

using namespace misspec;
using nlohmann::json;

TEST_CASE("negative-reinforcement preset matches the example environment") {
  const Experiment ex = make_preset("negative-reinforcement");
  REQUIRE(ex.env.actions == std::vector<std::string>{"x1", "x2"});
  REQUIRE(ex.env.truth.kind == ConsequenceKind::Discrete);
  CHECK(ex.env.truth.support == std::vector<std::string>{"0", "1"});
  CHECK(ex.env.truth.pmf[0][1] == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(ex.env.truth.pmf[1][1] == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("a one-action one-consequence document is trivially valid") {
  const json doc = {
      {"actions", {"only"}},
      {"truth", {{"kind", "discrete"}, {"support", {"y"}}, {"pmf", {{1.0}}}}},
      {"payoff", {{"table", {{3.0}}}}},
      {"models",
       {{"family_kind", "discrete_table"},
        {"grid", {{"points", {{0.0}}}}},
        {"prior", "uniform"},
        {"table", {{{1.0}}}}}}};
  const Environment env = load_environment(doc);
  CHECK(env.n_actions() == 1);
  CHECK(validate_environment(env).all_pass());
}

TEST_CASE("pmf that sums to 0.9 is rejected naming the invariant") {
  json doc = preset_config("negative-reinforcement");
  doc["truth"]["pmf"][0] = {0.15, 0.75};
  try {
    load_environment(doc);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("pmf") != std::string::npos);
  }
}

TEST_CASE("validation report covers the checkable assumptions") {
  for (const auto& name : preset_names()) {
    const Experiment ex = make_preset(name);
    const auto rep = validate_environment(ex.env);
    CHECK(rep.all_pass());
  }
}

TEST_CASE("support containment failure is flagged") {
  Environment env = load_environment(json{
      {"actions", {"a"}},
      {"truth", {{"kind", "discrete"}, {"support", {"0", "1"}}, {"pmf", {{0.5, 0.5}}}}},
      {"payoff", {{"table", {{0.0, 1.0}}}}},
      {"models",
       {{"family_kind", "discrete_table"},
        {"grid", {{"points", {{0.0}, {1.0}}}}},
        {"prior", "uniform"},
        {"table", {{{0.5, 0.5}}, {{0.4, 0.6}}}}}}});
  // break containment after the fact and check the report flags it
  env.models.table[0][0] = {1.0, 0.0};
  const auto rep = validate_environment(env);
  bool flagged = false;
  for (const auto& c : rep.checks)
    if (c.name.find("support containment") != std::string::npos) flagged = !c.pass;
  CHECK(flagged);
  // and the loader rejects it outright
  json doc = serialize_environment(env);
  CHECK_THROWS_AS(load_environment(doc), ValidationError);
}

TEST_CASE("prior with a zero weight is flagged") {
  Environment env = make_preset("negative-reinforcement").env;
  env.models.log_prior[3] = -std::numeric_limits<double>::infinity();
  const auto rep = validate_environment(env);
  bool flagged = false;
  for (const auto& c : rep.checks)
    if (c.name.find("full support") != std::string::npos) flagged = !c.pass;
  CHECK(flagged);
}

TEST_CASE("sampled consequences match the pmf (monte carlo)") {
  const Experiment ex = make_preset("negative-reinforcement");
  CounterRng rng(7, CounterRng::kConsequenceStream);
  int ones = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i)
    ones += sample_consequence(ex.env, 0, rng).label == 1;
  CHECK(std::abs(ones / static_cast<double>(n) - 0.75) < 0.01);
}

TEST_CASE("degenerate pmf always yields its point mass") {
  const json doc = {
      {"actions", {"a"}},
      {"truth", {{"kind", "discrete"}, {"support", {"0", "1"}}, {"pmf", {{1.0, 0.0}}}}},
      {"payoff", {{"table", {{0.0, 1.0}}}}},
      {"models",
       {{"family_kind", "discrete_table"},
        {"grid", {{"points", {{0.5}}}}},
        {"prior", "uniform"},
        {"table", {{{0.5, 0.5}}}}}}};
  const Environment env = load_environment(doc);
  CounterRng rng(3, CounterRng::kConsequenceStream);
  for (int i = 0; i < 200; ++i) CHECK(sample_consequence(env, 0, rng).label == 0);
}

TEST_CASE("triangle draws have the right mean (law of large numbers)") {
  const Experiment ex = make_preset("triangle");
  CounterRng rng(11, CounterRng::kConsequenceStream);
  std::vector<double> mean(3, 0.0);
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const auto y = sample_consequence(ex.env, 1, rng);  // x2 -> N(e2, I)
    for (int k = 0; k < 3; ++k) mean[k] += y.vec[k];
  }
  for (int k = 0; k < 3; ++k) {
    mean[k] /= n;
    CHECK(std::abs(mean[k] - (k == 1 ? 1.0 : 0.0)) < 0.05);
  }
}

TEST_CASE("identical rng state reproduces identical draws") {
  const Experiment ex = make_preset("triangle");
  CounterRng a(123, CounterRng::kConsequenceStream);
  CounterRng b(123, CounterRng::kConsequenceStream);
  for (int i = 0; i < 50; ++i) {
    const auto ya = sample_consequence(ex.env, i % 3, a);
    const auto yb = sample_consequence(ex.env, i % 3, b);
    CHECK(ya.vec == yb.vec);
  }
}

TEST_CASE("environment serialization round-trips field by field") {
  for (const auto& name : preset_names()) {
    const Experiment ex = make_preset(name);
    const Environment back = load_environment(serialize_environment(ex.env));
    CHECK(back.actions == ex.env.actions);
    CHECK(back.truth.kind == ex.env.truth.kind);
    CHECK(back.truth.pmf == ex.env.truth.pmf);
    CHECK(back.truth.mean == ex.env.truth.mean);
    CHECK(back.payoff.table == ex.env.payoff.table);
    CHECK(back.payoff.affine_a == ex.env.payoff.affine_a);
    CHECK(back.models.points == ex.env.models.points);
    CHECK(back.models.log_prior == ex.env.models.log_prior);
    CHECK(back.models.family == ex.env.models.family);
  }
}

TEST_CASE("unknown action is rejected") {
  const Experiment ex = make_preset("negative-reinforcement");
  CounterRng rng(1, 0);
  CHECK_THROWS_AS(sample_consequence(ex.env, "nope", rng), UnknownAction);
}
