#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "misspec/env.hpp"
#include "misspec/policy.hpp"

namespace misspec {

struct Experiment {
  Environment env;
  PolicySpec policy;
};

// Built-in example environments. Names:
//   negative-reinforcement, triangle, one-dimensional, redundant-action,
//   positively-reinforcing, robust-counterexample-base
std::vector<std::string> preset_names();
nlohmann::json preset_config(const std::string& name);  // UnknownPreset

Experiment load_experiment(const nlohmann::json& doc);
Experiment make_preset(const std::string& name);

// Analytic limit-cycle polygon of the triangle preset.
std::vector<ActionDist> triangle_cycle_polygon();

}  // namespace misspec
