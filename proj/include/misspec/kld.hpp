#pragma once

#include <optional>
#include <vector>

#include "misspec/bayes.hpp"
#include "misspec/env.hpp"

namespace misspec {

struct KldResult {
  double k_star = 0.0;                   // minimum of K over the grid
  std::vector<std::size_t> minimizers;   // indices within tie_tol of k_star
  std::optional<std::vector<double>> values;
  // 1-d grids: three-point parabolic refinement inside the bracketing cell.
  std::optional<double> refined_theta;
  std::optional<double> refined_k;
  // Interior 1-d minima: central second difference of K exceeds 1e-8
  // (identifiability second-order condition; reported, never asserted).
  std::optional<bool> second_order_ok;
};

inline constexpr double kDefaultTieTol = 1e-9;

// K(theta, sigma) in nats, closed form per family. theta need not be a grid
// point for the analytic families; DiscreteTable requires a grid point.
double kl_divergence(const Environment& env, const std::vector<double>& theta,
                     const ActionDist& sigma);

// Fast row form for grid points: dot(kl_rows[i], sigma).
double kl_divergence_at(const Environment& env, std::size_t theta_idx,
                        const ActionDist& sigma);

KldResult minimize_kld(const Environment& env, const ActionDist& sigma,
                       double tie_tol = kDefaultTieTol, bool want_values = false);

// Unique refined minimizer for 1-d grids; NonUniqueMinimizer when two
// non-adjacent cells tie within tie_tol.
double closest_model(const Environment& env, const ActionDist& sigma,
                     double tie_tol = kDefaultTieTol);

// Posterior-weighted excess divergence: integral of (K(theta, sigma) - K*(sigma)) under the belief.
double weighted_kl_gap(const Environment& env, const ActionDist& sigma,
                       const Belief& belief);

}  // namespace misspec
