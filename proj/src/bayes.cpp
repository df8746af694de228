#include "misspec/bayes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace misspec {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// subtracts the log-sum-exp in place; returns it
double normalize_log(std::vector<double>& logw) {
  double m = -kInf;
  for (double v : logw) m = std::max(m, v);
  if (!std::isfinite(m)) throw ZeroLikelihood("all grid points have zero weight");
  double s = 0.0;
  for (double v : logw) s += std::exp(v - m);
  const double z = m + std::log(s);
  for (double& v : logw) v -= z;
  return z;
}

}  // namespace

Belief init_belief(const ModelGrid& grid) {
  Belief b;
  b.log_post = grid.log_prior;
  normalize_log(b.log_post);
  b.cum_loglik.assign(grid.size(), 0.0);
  b.t = 0;
  b.cum_loglik_true = 0.0;
  return b;
}

Belief update_belief(const Environment& env, const Belief& belief, int action,
                     const Consequence& y) {
  Belief next = belief;
  bool any_finite = false;
  for (std::size_t i = 0; i < env.models.size(); ++i) {
    const double ll = log_density_model(env, i, action, y);
    next.cum_loglik[i] += ll;
    next.log_post[i] += ll;
    any_finite = any_finite || std::isfinite(next.log_post[i]);
  }
  if (!any_finite)
    throw ZeroLikelihood("observation has zero density under every grid model");
  normalize_log(next.log_post);
  next.cum_loglik_true += log_density_true(env, action, y);
  next.t += 1;
  return next;
}

double log_likelihood_avg(const Belief& belief, std::size_t grid_index) {
  if (belief.t < 1) throw NoObservations("log_likelihood_avg requires t >= 1");
  return (belief.cum_loglik_true - belief.cum_loglik[grid_index]) /
         static_cast<double>(belief.t);
}

std::vector<double> posterior(const Belief& belief) {
  std::vector<double> w(belief.log_post.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::exp(belief.log_post[i]);
  return w;
}

std::vector<double> posterior_mean(const Environment& env, const Belief& belief) {
  if (belief.log_post.size() != env.models.size())
    throw GridMismatch("belief grid size differs from environment grid");
  const int d = env.models.theta_dim();
  std::vector<double> mean(d, 0.0);
  for (std::size_t i = 0; i < env.models.size(); ++i) {
    const double w = std::exp(belief.log_post[i]);
    if (w == 0.0) continue;
    for (int c = 0; c < d; ++c) mean[c] += w * env.models.points[i][c];
  }
  return mean;
}

}  // namespace misspec
