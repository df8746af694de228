#pragma once

#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "misspec/bayes.hpp"
#include "misspec/env.hpp"

namespace misspec {

enum class PolicyKind { Myopic, Table1D, TableSimplex, Bellman };
enum class TieRule { Lexicographic, UniformRandom, StickyPrevious };

// Convex polygon in a 3-coordinate probability simplex, with the action set
// chosen while the (degenerate-belief) model lies inside it.
struct SimplexRegion {
  std::vector<std::vector<double>> vertices;  // barycentric, length-3 each
  std::vector<int> actions;
};

struct ValueFunction;

struct PolicySpec {
  PolicyKind kind = PolicyKind::Myopic;
  double tie_tol = 1e-9;
  double snap_tol = 1e-9;

  // Table1D: intervals partition [0,1]; breakpoint sets must contain both
  // adjacent interval sets (upper hemicontinuity).
  std::vector<double> breakpoints;
  std::vector<std::vector<int>> interval_actions;    // breakpoints.size()+1
  std::vector<std::vector<int>> breakpoint_actions;  // breakpoints.size()

  // TableSimplex: boundary points take the union of touching regions;
  // points covered by no region fall back to default_actions (empty = invalid).
  std::vector<SimplexRegion> regions;
  std::vector<int> default_actions;

  // Bellman
  double beta = 0.0;
  int resolution = 50;
  double vi_tol = 1e-8;

  // lazily solved value function (derived cache, not part of identity)
  mutable std::shared_ptr<const ValueFunction> bellman_cache;
  mutable std::shared_ptr<std::once_flag> bellman_once =
      std::make_shared<std::once_flag>();
};

struct ValueFunction {
  std::vector<std::vector<double>> grid;      // belief points over the model grid
  std::vector<double> values;
  std::vector<std::vector<int>> policy_sets;  // tie_tol-optimal actions per point
  double beta = 0.0;
  int resolution = 0;
  double tol = 0.0;
};

// argmax_x of expected payoff under the belief-mixture kernel Q-bar.
std::vector<int> myopic_actions(const Environment& env, const Belief& belief,
                                double tie_tol = 1e-9);

// Policy correspondence evaluated at a belief. Table kinds reduce the belief
// to its posterior mean.
std::vector<int> policy_actions(const Environment& env, const PolicySpec& policy,
                                const Belief& belief);

// Same correspondence at a degenerate belief on the given model value.
std::vector<int> policy_actions_at_model(const Environment& env,
                                         const PolicySpec& policy,
                                         const std::vector<double>& theta);

int select_action(const std::vector<int>& action_set, TieRule rule, CounterRng& rng,
                  int previous = -1);

// Value iteration on a discretized belief simplex (grid of <= 3 models,
// Discrete consequences); barycentric interpolation at updated beliefs.
ValueFunction solve_bellman(const Environment& env, double beta, int resolution,
                            double tol);

// One-step lookahead with interpolated continuation value; beta = 0 reduces
// exactly to myopic_actions.
std::vector<int> bellman_actions(const Environment& env, const ValueFunction& vf,
                                 const Belief& belief, double tie_tol = 1e-9);

void validate_policy(const Environment& env, const PolicySpec& policy);

PolicySpec parse_policy(const Environment& env, const nlohmann::json& doc);
nlohmann::json serialize_policy(const Environment& env, const PolicySpec& policy);

// Signed continuous boundary gap between the regions selecting a and b, as a
// function of theta; vanishes on the a/b decision boundary. Used by the
// differential-inclusion integrator for Filippov sliding.
double policy_boundary_gap(const Environment& env, const PolicySpec& policy,
                           const std::vector<double>& theta, int a, int b);

std::string action_set_label(const Environment& env, const std::vector<int>& set);

}  // namespace misspec
