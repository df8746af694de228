#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "misspec/bayes.hpp"
#include "misspec/env.hpp"
#include "misspec/inclusion.hpp"
#include "misspec/policy.hpp"

namespace misspec {

struct TrajectoryStep {
  long t = 0;
  int action = -1;
  Consequence y;
  ActionDist sigma;                // empirical frequency of actions 1..t
  double kl_gap = 0.0;             // weighted_kl_gap(sigma_t, mu_{t+1})
  std::vector<double> theta_hat;   // closest model given sigma_t
  std::vector<double> belief_mean; // E_{mu_{t+1}}[theta]
  double tau = 0.0;                // harmonic time sum_{i<=t} 1/i
};

struct Trajectory {
  std::vector<TrajectoryStep> steps;
  std::uint64_t seed = 0;
  std::string config_hash;
  long horizon = 0;
  std::size_t n_actions = 0;
  // innovation diagnostics over tie events (|action set| > 1)
  long tie_events = 0;
  std::vector<double> innovation_sum;
};

struct LearnOptions {
  long horizon = 0;
  std::uint64_t seed = 0;
  TieRule tie_rule = TieRule::UniformRandom;
  long record_every = 1;
  long record_prefix = 1000;          // fully recorded leading segment
  double record_tau_resolution = 0.0; // >0: also record on tau advances
  std::string config_hash;
};

Trajectory run_learning(const Environment& env, const PolicySpec& policy,
                        const LearnOptions& opt);

ActionDist action_frequency(const std::vector<int>& actions, std::size_t n_actions);
ActionDist action_frequency(const std::vector<std::string>& actions,
                            const Environment& env);

// Piecewise-linear continuous-time interpolation on the harmonic clock.
struct Interpolation {
  std::vector<double> tau_breaks;
  std::vector<ActionDist> values;
  ActionDist eval(double tau) const;  // CoverageError outside the range
  double tau_min() const { return tau_breaks.front(); }
  double tau_max() const { return tau_breaks.back(); }
};

Interpolation interpolate(const Trajectory& trajectory);  // TooShort if < 2 records

struct AptConfig {
  double step = 1e-3;
  int branches = 8;
  std::uint64_t seed = 0;
};

// Shadowing statistic: integrate a branch bundle from w(t_start) and return
// min over branches of sup_{s in [0,T]} |w(t_start+s) - sigma(s)|.
// t_start is on the tau clock.
double apt_distance(const Environment& env, const PolicySpec& policy,
                    const Trajectory& trajectory, double t_start, double T,
                    const AptConfig& cfg);

}  // namespace misspec
