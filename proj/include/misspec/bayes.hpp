#pragma once

#include <vector>

#include "misspec/env.hpp"

namespace misspec {

// Grid posterior held as accumulated log-likelihoods. log_post is kept
// normalized (logsumexp = 0) and is always recomputable as
// log_prior + cum_loglik - normalizer.
struct Belief {
  std::vector<double> log_post;
  long t = 0;
  std::vector<double> cum_loglik;    // sum_tau ln q_theta(y_tau | x_tau)
  double cum_loglik_true = 0.0;      // sum_tau ln q(y_tau | x_tau)
};

Belief init_belief(const ModelGrid& grid);

Belief update_belief(const Environment& env, const Belief& belief, int action,
                     const Consequence& y);

// L_t(theta_i) = (cum_loglik_true - cum_loglik[i]) / t
double log_likelihood_avg(const Belief& belief, std::size_t grid_index);

std::vector<double> posterior(const Belief& belief);

// E_mu[theta], one entry per theta coordinate.
std::vector<double> posterior_mean(const Environment& env, const Belief& belief);

}  // namespace misspec
