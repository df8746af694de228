#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "misspec/env.hpp"
#include "misspec/inclusion.hpp"
#include "misspec/policy.hpp"

namespace misspec {

// A candidate set: isolated points, or a closed polyline (limit cycle).
struct TargetSet {
  std::vector<ActionDist> points;
  bool closed_polyline = false;
  double distance_to(const ActionDist& sigma) const;
};

enum class Verdict { Attracting, RobustlyAttracting, Repelling, Inconclusive };

std::string verdict_name(Verdict v);

struct StabilityCertificate {
  std::string subject;
  Verdict verdict = Verdict::Inconclusive;
  nlohmann::json parameters;
  nlohmann::json evidence;
  nlohmann::json to_json() const;
};

struct StabilityParams {
  double step = 1e-3;
  std::uint64_t seed = 71;
  double residual_tol = 1e-6;
};

// Distance from sigma to conv{delta_x : x in F(dTheta(sigma))}; 0 iff
// sigma is an equilibrium of the differential inclusion.
double equilibrium_residual(const Environment& env, const PolicySpec& policy,
                            const ActionDist& sigma);

struct FoundEquilibria {
  std::vector<ActionDist> points;
  std::vector<int> component;          // connected-component id per point
  std::vector<bool> component_is_continuum;
  std::size_t n_components() const { return component_is_continuum.size(); }
};

FoundEquilibria find_equilibria(const Environment& env, const PolicySpec& policy,
                                int resolution, double tol = 1e-6);

StabilityCertificate test_attracting(const Environment& env, const PolicySpec& policy,
                                     const TargetSet& A, double U_radius, double eps,
                                     double T, int n_init, int n_branch,
                                     const StabilityParams& params = {});

StabilityCertificate test_repelling(const Environment& env, const PolicySpec& policy,
                                    const ActionDist& sigma_star, double U_radius,
                                    double T, int n_sigma,
                                    const std::vector<double>& beta_ladder,
                                    int n_branch, const StabilityParams& params = {});

// Requires a prior Attracting certificate for A (supplies the basin radius).
StabilityCertificate test_robust_attracting(const Environment& env,
                                            const PolicySpec& policy,
                                            const TargetSet& A, double zeta,
                                            double eps, double T, int samples,
                                            const StabilityCertificate& attracting_cert,
                                            const StabilityParams& params = {});

enum class ModelClass { AttractingModel, RepellingModel, Neither };

std::string model_class_name(ModelClass c);

ModelClass classify_model(const Environment& env, const PolicySpec& policy,
                          double theta_star, double eps);

// Staircase structure of B(theta) = theta(dF(delta_theta)) for monotone
// one-dimensional policies; fixed points are classified into the four cases
// (1: endpoint of a vertical segment, 2: interior of a vertical segment,
//  3: interior of a horizontal segment, 4: boundary 0/1 plateau).
struct Staircase {
  std::vector<double> breakpoints;                    // 0 = a_0 < ... < a_K = 1
  std::vector<std::pair<double, double>> verticals;   // A_i at each interior a_i
  std::vector<double> levels;                         // horizontal level per interval
  std::vector<int> level_actions;                     // the action behind each level
  struct FixedPoint {
    double theta = 0.0;
    int case_id = 0;
    std::vector<int> support;  // actions supporting the equilibrium
  };
  std::vector<FixedPoint> fixed_points;
};

Staircase build_staircase(const Environment& env, const PolicySpec& policy);

std::vector<double> equilibrium_models(const Environment& env, const PolicySpec& policy);

struct WeakIdResult {
  bool ok = false;
  std::string witness;  // a failing pair, when not ok
};

WeakIdResult check_weak_identification(const Environment& env, const ActionDist& sigma,
                                       double tol = 1e-9);

double berk_nash_residual(const Environment& env, const ActionDist& sigma,
                          int belief_resolution);

}  // namespace misspec
