#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "misspec/env.hpp"
#include "misspec/policy.hpp"

namespace misspec {

struct DIEvent {
  double time = 0.0;
  std::string boundary;   // action set met at the boundary
  std::string selection;  // selection taken after the event
};

// One time-sampled solution branch of sigma-dot in dF(dTheta(sigma)) - sigma.
struct DIPath {
  std::vector<double> times;
  std::vector<ActionDist> states;
  std::vector<DIEvent> events;
  std::string selection_strategy;
};

enum class SelectionKind { FixedSelection, Filippov, BranchSample };

struct Strategy {
  SelectionKind kind = SelectionKind::Filippov;
  std::vector<int> priority;       // FixedSelection order (action indices)
  int count = 32;                  // BranchSample branch count
  std::uint64_t seed = 0;          // BranchSample
};

// Action set F(dTheta(sigma)): grid KLD minimizers, policy at each degenerate
// belief, union. With eps > 0 the union extends over a deterministic stencil
// of the eps-ball: the center, +-eps along each (e_x - center)/|.| axis, and
// +-eps along each pairwise diagonal (e_i - e_j)/sqrt(2), all projected onto
// the simplex.
std::vector<int> di_action_set(const Environment& env, const PolicySpec& policy,
                               const ActionDist& sigma, double eps = 0.0);

// Extreme velocities {delta_x - sigma : x in F(dTheta(sigma))}; the full
// right-hand side is their convex hull.
std::vector<std::vector<double>> di_rhs(const Environment& env,
                                        const PolicySpec& policy,
                                        const ActionDist& sigma);

std::vector<DIPath> integrate_di(const Environment& env, const PolicySpec& policy,
                                 const ActionDist& sigma0, double T, double step,
                                 const Strategy& strategy);

std::vector<DIPath> integrate_perturbed_di(const Environment& env,
                                           const PolicySpec& policy,
                                           const ActionDist& sigma0, double T,
                                           double step, double epsilon,
                                           const Strategy& strategy);

// Euclidean distance from a point to the convex hull of {delta_x : x in set},
// i.e. the face of the simplex spanned by the set. Exact (sort-based
// projection).
double face_distance(const ActionDist& sigma, const std::vector<int>& action_set);

// Min-norm point of conv{delta_x - sigma : x in set}; zero iff sigma is
// stationary for that set.
std::vector<double> min_norm_velocity(const ActionDist& sigma,
                                      const std::vector<int>& action_set);

}  // namespace misspec
