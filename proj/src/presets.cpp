#include "misspec/presets.hpp"

#include <cmath>

namespace misspec {

using nlohmann::json;

namespace {

json gaussian_zero_payoff(int n_actions, int dim) {
  json a = json::array(), b = json::array();
  for (int x = 0; x < n_actions; ++x) {
    a.push_back(std::vector<double>(dim, 0.0));
    b.push_back(0.0);
  }
  return json{{"affine", {{"a", a}, {"b", b}}}};
}

// Pinwheel sectors on the model simplex: three rays from the barycenter in
// cyclically shifted directions d, rot(d), rot2(d); sector k (containing
// vertex e_k) maps to the next action in cyclic order.
json pinwheel_regions(const std::vector<double>& d1,
                      const std::vector<std::string>& sector_actions) {
  const double third = 1.0 / 3.0;
  auto rot = [](std::vector<double> v) {
    return std::vector<double>{v[2], v[0], v[1]};
  };
  // ray exit point on the simplex boundary
  auto exit_point = [third](const std::vector<double>& d) {
    double smax = 1e300;
    for (int k = 0; k < 3; ++k)
      if (d[k] < 0.0) smax = std::min(smax, -third / d[k]);
    std::vector<double> p(3);
    for (int k = 0; k < 3; ++k) p[k] = third + smax * d[k];
    return p;
  };
  std::vector<std::vector<double>> dir{d1, rot(d1), rot(rot(d1))};
  std::vector<std::vector<double>> P{exit_point(dir[0]), exit_point(dir[1]),
                                     exit_point(dir[2])};
  const std::vector<std::vector<double>> corners{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  const std::vector<double> center{third, third, third};
  json regions = json::array();
  for (int k = 0; k < 3; ++k) {
    json vertices = json::array();
    vertices.push_back(center);
    vertices.push_back(P[k]);
    vertices.push_back(corners[k]);
    vertices.push_back(P[(k + 1) % 3]);
    regions.push_back(
        {{"vertices", vertices}, {"actions", json::array({sector_actions[k]})}});
  }
  return regions;
}

json simplex_gaussian_truth(int n_actions) {
  json means = json::array();
  for (int x = 0; x < n_actions; ++x) {
    std::vector<double> e(3, 0.0);
    e[std::min(x, 2)] = 1.0;  // redundant fourth action duplicates e3
    means.push_back(e);
  }
  return json{{"kind", "gaussian_iso"}, {"dim", 3}, {"means", means}};
}

}  // namespace

std::vector<std::string> preset_names() {
  return {"negative-reinforcement", "triangle",     "one-dimensional",
          "redundant-action",       "positively-reinforcing",
          "robust-counterexample-base"};
}

json preset_config(const std::string& name) {
  const double third = 1.0 / 3.0;
  if (name == "negative-reinforcement") {
    return json{
        {"actions", {"x1", "x2"}},
        {"truth",
         {{"kind", "discrete"},
          {"support", {"0", "1"}},
          {"pmf", {{0.25, 0.75}, {0.75, 0.25}}}}},
        {"payoff", {{"table", {{1.0, 0.0}, {0.0, 1.0}}}}},
        {"models",
         {{"family_kind", "bernoulli_common"},
          {"grid", {{"lo", 0.0025}, {"hi", 0.9975}, {"n", 201}}},
          {"prior", "uniform"}}},
        {"policy", {{"kind", "myopic"}}}};
  }
  if (name == "triangle") {
    json doc;
    doc["actions"] = {"x1", "x2", "x3"};
    doc["truth"] = simplex_gaussian_truth(3);
    doc["payoff"] = gaussian_zero_payoff(3, 3);
    doc["models"] = {{"family_kind", "gaussian_common_mean"},
                     {"grid", {{"simplex_res", 24}}},
                     {"prior", "uniform"}};
    doc["policy"] = {{"kind", "table_simplex"},
                     {"regions", pinwheel_regions({3.0, -2.0, -1.0},
                                                  {"x2", "x3", "x1"})}};
    return doc;
  }
  if (name == "one-dimensional") {
    return json{
        {"actions", {"x0", "x1"}},
        {"truth", {{"kind", "gaussian_iso"}, {"dim", 1}, {"means", {{0.0}, {1.0}}}}},
        {"payoff", gaussian_zero_payoff(2, 1)},
        {"models",
         {{"family_kind", "gaussian_common_mean"},
          {"grid", {{"lo", 0.0}, {"hi", 1.0}, {"n", 201}}},
          {"prior", "uniform"}}},
        {"policy",
         {{"kind", "table1d"},
          {"breakpoints", {third, 2.0 * third}},
          {"interval_actions",
           json::array({json::array({"x0"}), json::array({"x1"}),
                        json::array({"x0"})})},
          {"breakpoint_actions",
           json::array({json::array({"x0", "x1"}), json::array({"x0", "x1"})})}}}};
  }
  if (name == "redundant-action") {
    json doc;
    doc["actions"] = {"x1", "x2", "x3", "x3p"};
    doc["truth"] = simplex_gaussian_truth(4);
    doc["payoff"] = gaussian_zero_payoff(4, 3);
    doc["models"] = {{"family_kind", "gaussian_common_mean"},
                     {"grid", {{"simplex_res", 24}}},
                     {"prior", "uniform"}};
    json regions = pinwheel_regions({3.0, -2.0, -1.0}, {"x2", "x3", "x1"});
    regions[1]["actions"] = json::array({"x3", "x3p"});  // x3p mirrors x3
    doc["policy"] = {{"kind", "table_simplex"}, {"regions", regions}};
    return doc;
  }
  if (name == "positively-reinforcing") {
    return json{
        {"actions", {"x1", "x2", "x3", "x4"}},
        {"truth",
         {{"kind", "gaussian_iso"},
          {"dim", 1},
          {"means", {{0.2}, {0.35}, {0.5}, {0.85}}}}},
        {"payoff", gaussian_zero_payoff(4, 1)},
        {"models",
         {{"family_kind", "gaussian_common_mean"},
          {"grid", {{"lo", 0.0}, {"hi", 1.0}, {"n", 201}}},
          {"prior", "uniform"}}},
        {"policy",
         {{"kind", "table1d"},
          {"breakpoints", {0.15, 0.55, 0.7}},
          {"interval_actions",
           json::array({json::array({"x1"}), json::array({"x2"}),
                        json::array({"x3"}), json::array({"x4"})})},
          {"breakpoint_actions",
           json::array({json::array({"x1", "x2"}), json::array({"x2", "x3"}),
                        json::array({"x3", "x4"})})}}}};
  }
  if (name == "robust-counterexample-base") {
    json doc;
    doc["actions"] = {"x1", "x2", "x3"};
    doc["truth"] = simplex_gaussian_truth(3);
    doc["payoff"] = gaussian_zero_payoff(3, 3);
    doc["models"] = {{"family_kind", "gaussian_common_mean"},
                     {"grid", {{"simplex_res", 24}}},
                     {"prior", "uniform"}};
    // inscribed triangle ABC; sectors clipped to it, everything else free
    const std::vector<double> A{2.0 * third, 0.0, third};
    const std::vector<double> B{third, 2.0 * third, 0.0};
    const std::vector<double> C{0.0, third, 2.0 * third};
    const std::vector<double> center{third, third, third};
    json regions = json::array();
    regions.push_back({{"vertices", {center, A, B}}, {"actions", {"x2"}}});
    regions.push_back({{"vertices", {center, B, C}}, {"actions", {"x3"}}});
    regions.push_back({{"vertices", {center, C, A}}, {"actions", {"x1"}}});
    doc["policy"] = {{"kind", "table_simplex"},
                     {"regions", regions},
                     {"default_actions", {"x1", "x2", "x3"}}};
    return doc;
  }
  throw UnknownPreset(name);
}

Experiment load_experiment(const json& doc) {
  Experiment ex;
  ex.env = load_environment(doc);
  ex.policy = parse_policy(ex.env, doc.contains("policy") ? doc.at("policy") : json());
  return ex;
}

Experiment make_preset(const std::string& name) {
  return load_experiment(preset_config(name));
}

std::vector<ActionDist> triangle_cycle_polygon() {
  // closed-form fixed point of the sector crossing map s -> 4s/(1+21s)
  const double a = 16.0 / 21.0, b = 1.0 / 21.0, c = 4.0 / 21.0;
  return {ActionDist({a, b, c}), ActionDist({c, a, b}), ActionDist({b, c, a})};
}

}  // namespace misspec
