#include <doctest.h>

#include "misspec/config.hpp"
#include "misspec/errors.hpp"

using namespace misspec;
using nlohmann::json;

TEST_CASE("toml and json configs parse to the same tree") {
  const std::string toml = R"(
# negative-reinforcement environment
actions = ["x1", "x2"]

[truth]
kind = "discrete"
support = ["0", "1"]
pmf = [[0.25, 0.75], [0.75, 0.25]]

[payoff]
table = [[1.0, 0.0], [0.0, 1.0]]

[models]
family_kind = "bernoulli_common"
grid = { lo = 0.0025, hi = 0.9975, n = 201 }
prior = "uniform"

[policy]
kind = "myopic"
)";
  const std::string jsn = R"({
    "actions": ["x1", "x2"],
    "truth": {"kind": "discrete", "support": ["0", "1"],
              "pmf": [[0.25, 0.75], [0.75, 0.25]]},
    "payoff": {"table": [[1.0, 0.0], [0.0, 1.0]]},
    "models": {"family_kind": "bernoulli_common",
               "grid": {"lo": 0.0025, "hi": 0.9975, "n": 201},
               "prior": "uniform"},
    "policy": {"kind": "myopic"}
  })";
  const json a = parse_config_text(toml);
  const json b = parse_config_text(jsn);
  CHECK(a == b);
}

TEST_CASE("toml arrays of tables and nested keys") {
  const json doc = parse_toml(R"(
[policy]
kind = "table_simplex"

[[policy.regions]]
vertices = [[1, 0, 0], [0, 1, 0], [0, 0, 1]]
actions = ["x1"]

[[policy.regions]]
vertices = [[0.5, 0.5, 0], [0, 1, 0], [0, 0, 1]]
actions = ["x2", "x3"]
)");
  REQUIRE(doc["policy"]["regions"].size() == 2);
  CHECK(doc["policy"]["regions"][1]["actions"][1] == "x3");
  CHECK(doc["policy"]["regions"][0]["vertices"][0][0] == 1);
}

TEST_CASE("malformed toml raises SchemaError") {
  CHECK_THROWS_AS(parse_toml("key = "), SchemaError);
  CHECK_THROWS_AS(parse_toml("[unterminated"), SchemaError);
  CHECK_THROWS_AS(parse_config_text("{\"broken\": }"), SchemaError);
}

TEST_CASE("config digest is stable under key order") {
  const json a = json::parse(R"({"b": 1, "a": [1, 2]})");
  const json b = json::parse(R"({"a": [1, 2], "b": 1})");
  CHECK(config_digest(a) == config_digest(b));
  CHECK(config_digest(a) != config_digest(json::parse(R"({"a": [1, 3], "b": 1})")));
}
