#include "misspec/simulate.hpp"

#include <algorithm>
#include <cmath>

#include "misspec/kld.hpp"

namespace misspec {

namespace {

// Incremental posterior state for the hot loop. The authoritative belief is
// the log-space accumulator. The linear weights are a derived cache: the
// Bernoulli path updates it multiplicatively (with a hard floor against
// subnormals) and resyncs from the logs every few steps, which keeps models
// whose mass underflowed able to come back; other families rebuild the cache
// from the logs whenever it is read.
struct BeliefEngine {
  static constexpr double kWeightFloor = 1e-280;
  static constexpr int kResyncPeriod = 16;

  const Environment& env;
  std::vector<double> cum_loglik;
  double cum_loglik_true = 0.0;
  long t = 0;
  std::vector<double> w;  // normalized linear posterior (cache)
  bool w_dirty = false;
  int since_resync = 0;

  // Discrete fast path: per-label model pmf and log-pmf columns
  std::vector<std::vector<double>> pmf_cols;   // [label][grid]
  std::vector<std::vector<double>> lpmf_cols;  // [label][grid]
  bool discrete_common = false;

  explicit BeliefEngine(const Environment& e) : env(e) {
    const std::size_t n = env.models.size();
    cum_loglik.assign(n, 0.0);
    w.resize(n);
    resync();
    if (env.truth.kind == ConsequenceKind::Discrete &&
        env.models.family == FamilyKind::BernoulliCommon) {
      discrete_common = true;
      pmf_cols.assign(2, std::vector<double>(n));
      lpmf_cols.assign(2, std::vector<double>(n));
      for (std::size_t i = 0; i < n; ++i) {
        const double th = env.models.points[i][0];
        pmf_cols[0][i] = 1.0 - th;
        pmf_cols[1][i] = th;
        lpmf_cols[0][i] = std::log(1.0 - th);
        lpmf_cols[1][i] = std::log(th);
      }
    }
  }

  void resync() {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < w.size(); ++i) {
      w[i] = env.models.log_prior[i] + cum_loglik[i];
      m = std::max(m, w[i]);
    }
    if (!std::isfinite(m))
      throw ZeroLikelihood("observation has zero density under every grid model");
    double sum = 0.0;
    for (double& x : w) {
      x = std::exp(x - m);
      sum += x;
    }
    const double inv = 1.0 / sum;
    for (double& x : w) x *= inv;
    w_dirty = false;
    since_resync = 0;
  }

  void ensure_weights() {
    if (w_dirty) resync();
  }

  void observe(int action, const Consequence& y) {
    const std::size_t n = w.size();
    if (discrete_common) {
      const auto& p = pmf_cols[y.label];
      const auto& lp = lpmf_cols[y.label];
      double sum = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        cum_loglik[i] += lp[i];
        // floor the cache before multiplying: subnormal operands are very
        // slow, and a 1e-280 relative weight is far below anything a
        // 16-step likelihood swing (<= 16 ln(hi/lo) nats) could revive
        const double wi = w[i] < kWeightFloor ? 0.0 : w[i] * p[i];
        w[i] = wi;
        sum += wi;
      }
      if (!(sum > 0.0) || !std::isfinite(sum))
        throw ZeroLikelihood("observation has zero density under every grid model");
      const double inv = 1.0 / sum;
      for (double& x : w) x *= inv;
      if (++since_resync >= kResyncPeriod) resync();
    } else {
      for (std::size_t i = 0; i < n; ++i)
        cum_loglik[i] += log_density_model(env, i, action, y);
      w_dirty = true;
    }
    cum_loglik_true += log_density_true(env, action, y);
    ++t;
  }

  std::vector<double> mean() {
    ensure_weights();
    const int d = env.models.theta_dim();
    std::vector<double> m(d, 0.0);
    for (std::size_t i = 0; i < w.size(); ++i)
      for (int c = 0; c < d; ++c) m[c] += w[i] * env.models.points[i][c];
    return m;
  }

  std::vector<int> actions(const PolicySpec& policy) {
    switch (policy.kind) {
      case PolicyKind::Myopic: {
        ensure_weights();
        std::vector<double> scores(env.n_actions(), 0.0);
        for (std::size_t i = 0; i < w.size(); ++i) {
          if (w[i] == 0.0) continue;
          for (std::size_t x = 0; x < scores.size(); ++x)
            scores[x] += w[i] * env.exp_payoff[i][x];
        }
        double best = scores[0];
        for (double s : scores) best = std::max(best, s);
        std::vector<int> out;
        for (std::size_t x = 0; x < scores.size(); ++x)
          if (scores[x] >= best - policy.tie_tol) out.push_back(static_cast<int>(x));
        return out;
      }
      case PolicyKind::Table1D:
      case PolicyKind::TableSimplex:
        return policy_actions_at_model(env, policy, mean());
      case PolicyKind::Bellman:
        return policy_actions(env, policy, snapshot());
    }
    throw DomainError("unknown policy kind");
  }

  Belief snapshot() const {
    Belief b;
    b.t = t;
    b.cum_loglik = cum_loglik;
    b.cum_loglik_true = cum_loglik_true;
    b.log_post.resize(w.size());
    double m = -1e300;
    for (std::size_t i = 0; i < w.size(); ++i) {
      b.log_post[i] = env.models.log_prior[i] + cum_loglik[i];
      m = std::max(m, b.log_post[i]);
    }
    double s = 0.0;
    for (double v : b.log_post) s += std::exp(v - m);
    const double z = m + std::log(s);
    for (double& v : b.log_post) v -= z;
    return b;
  }
};

}  // namespace

ActionDist action_frequency(const std::vector<int>& actions, std::size_t n_actions) {
  if (actions.empty()) throw EmptyHistory("action_frequency needs a nonempty history");
  ActionDist d(std::vector<double>(n_actions, 0.0));
  for (int a : actions) d.w[a] += 1.0;
  for (double& x : d.w) x /= static_cast<double>(actions.size());
  return d;
}

ActionDist action_frequency(const std::vector<std::string>& actions,
                            const Environment& env) {
  std::vector<int> idx;
  idx.reserve(actions.size());
  for (const auto& a : actions) idx.push_back(env.action_index(a));
  return action_frequency(idx, env.n_actions());
}

Trajectory run_learning(const Environment& env, const PolicySpec& policy,
                        const LearnOptions& opt) {
  if (opt.horizon < 1) throw DomainError("horizon must be positive");
  if (opt.record_every < 1) throw DomainError("record_every must be positive");

  Trajectory traj;
  traj.seed = opt.seed;
  traj.config_hash = opt.config_hash;
  traj.horizon = opt.horizon;
  traj.n_actions = env.n_actions();
  traj.innovation_sum.assign(env.n_actions(), 0.0);

  TrajectoryRng rng(opt.seed);
  BeliefEngine belief(env);
  std::vector<double> sigma(env.n_actions(), 0.0);
  double tau = 0.0, last_rec_tau = -1.0;
  int prev_action = -1;

  for (long t = 1; t <= opt.horizon; ++t) {
    const auto acts = belief.actions(policy);
    const int x = select_action(acts, opt.tie_rule, rng.tie_break, prev_action);
    if (acts.size() > 1 && opt.tie_rule == TieRule::UniformRandom) {
      traj.tie_events += 1;
      const double u = 1.0 / static_cast<double>(acts.size());
      for (int a : acts) traj.innovation_sum[a] -= u;
      traj.innovation_sum[x] += 1.0;
    }
    const Consequence y = sample_consequence(env, x, rng.consequence);
    belief.observe(x, y);

    // frequency recursion sigma_t = sigma_{t-1} + (1/t)(1(x_t) - sigma_{t-1})
    const double inv_t = 1.0 / static_cast<double>(t);
    for (std::size_t k = 0; k < sigma.size(); ++k)
      sigma[k] += inv_t * ((static_cast<int>(k) == x ? 1.0 : 0.0) - sigma[k]);
    tau += inv_t;
    prev_action = x;

    const bool rec = (t <= opt.record_prefix) || (t % opt.record_every == 0) ||
                     (t == opt.horizon) ||
                     (opt.record_tau_resolution > 0.0 &&
                      tau - last_rec_tau >= opt.record_tau_resolution);
    if (!rec) continue;
    last_rec_tau = tau;

    TrajectoryStep step;
    step.t = t;
    step.action = x;
    step.y = y;
    step.sigma = ActionDist(sigma);
    step.tau = tau;
    const Belief snap = belief.snapshot();
    step.kl_gap = weighted_kl_gap(env, step.sigma, snap);
    const KldResult kr = minimize_kld(env, step.sigma);
    if (kr.refined_theta)
      step.theta_hat = {*kr.refined_theta};
    else
      step.theta_hat = env.models.points[kr.minimizers.front()];
    step.belief_mean = posterior_mean(env, snap);
    traj.steps.push_back(std::move(step));
  }
  return traj;
}

ActionDist Interpolation::eval(double tau) const {
  if (tau_breaks.empty()) throw CoverageError("empty interpolation");
  if (tau < tau_breaks.front() - 1e-12 || tau > tau_breaks.back() + 1e-12)
    throw CoverageError("tau outside the interpolation range");
  const auto it = std::lower_bound(tau_breaks.begin(), tau_breaks.end(), tau);
  std::size_t j = static_cast<std::size_t>(it - tau_breaks.begin());
  if (j == 0) return values.front();
  if (j >= tau_breaks.size()) return values.back();
  const double t0 = tau_breaks[j - 1], t1 = tau_breaks[j];
  const double f = (t1 > t0) ? (tau - t0) / (t1 - t0) : 0.0;
  ActionDist out = values[j - 1];
  for (std::size_t k = 0; k < out.size(); ++k)
    out.w[k] += f * (values[j].w[k] - values[j - 1].w[k]);
  return out;
}

Interpolation interpolate(const Trajectory& trajectory) {
  if (trajectory.steps.size() < 2)
    throw TooShort("interpolation needs at least 2 recorded steps");
  Interpolation interp;
  interp.tau_breaks.reserve(trajectory.steps.size());
  interp.values.reserve(trajectory.steps.size());
  for (const auto& s : trajectory.steps) {
    interp.tau_breaks.push_back(s.tau);
    interp.values.push_back(s.sigma);
  }
  return interp;
}

double apt_distance(const Environment& env, const PolicySpec& policy,
                    const Trajectory& trajectory, double t_start, double T,
                    const AptConfig& cfg) {
  if (T < 0.0) throw DomainError("T must be >= 0");
  const Interpolation interp = interpolate(trajectory);
  if (t_start < interp.tau_min() - 1e-12 || t_start + T > interp.tau_max() + 1e-12)
    throw CoverageError("interpolation does not cover [t_start, t_start+T]");
  const ActionDist w0 = interp.eval(t_start);
  if (T == 0.0) return 0.0;

  std::vector<DIPath> bundle;
  {
    Strategy fil;
    fil.kind = SelectionKind::Filippov;
    auto p = integrate_di(env, policy, w0, T, cfg.step, fil);
    bundle.insert(bundle.end(), p.begin(), p.end());
    Strategy br;
    br.kind = SelectionKind::BranchSample;
    br.count = cfg.branches;
    br.seed = cfg.seed;
    auto q = integrate_di(env, policy, w0, T, cfg.step, br);
    bundle.insert(bundle.end(), q.begin(), q.end());
  }

  double best = std::numeric_limits<double>::infinity();
  for (const auto& path : bundle) {
    double sup = 0.0;
    for (std::size_t i = 0; i < path.times.size(); ++i) {
      const double s = path.times[i];
      if (s > T + 1e-12) break;
      const ActionDist wt = interp.eval(t_start + s);
      sup = std::max(sup, distance(wt, path.states[i]));
    }
    best = std::min(best, sup);
  }
  return best;
}

}  // namespace misspec
