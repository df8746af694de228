#pragma once

#include <string>

#include "misspec/inclusion.hpp"
#include "misspec/simulate.hpp"

namespace misspec {

// Trajectory CSV: t, action, consequence, sigma_<action>..., kl_gap,
// theta_hat, belief_mean. Vector cells are semicolon-joined.
std::string trajectory_csv(const Environment& env, const Trajectory& traj);
Trajectory parse_trajectory_csv(const Environment& env, const std::string& text);

// DIPath CSV: time, sigma_<action>..., event, selection.
std::string dipath_csv(const Environment& env, const DIPath& path);
DIPath parse_dipath_csv(const Environment& env, const std::string& text);

void write_file(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

}  // namespace misspec
