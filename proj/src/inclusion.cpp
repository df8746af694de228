#include "misspec/inclusion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "misspec/kld.hpp"
#include "misspec/threads.hpp"

namespace misspec {

namespace {

constexpr double kStationaryTol = 1e-9;
constexpr double kProbeStep = 1e-6;

// Projection of v onto the probability simplex (sort-based, exact).
std::vector<double> project_simplex(std::vector<double> v) {
  std::vector<double> u = v;
  std::sort(u.begin(), u.end(), std::greater<double>());
  double css = 0.0;
  int rho = 0;
  double cs = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    cs += u[j];
    const double t = (cs - 1.0) / static_cast<double>(j + 1);
    if (u[j] - t > 0.0) {
      rho = static_cast<int>(j + 1);
      css = cs;
    }
  }
  const double tau = (css - 1.0) / rho;
  for (double& x : v) x = std::max(0.0, x - tau);
  return v;
}

}  // namespace

double face_distance(const ActionDist& sigma, const std::vector<int>& action_set) {
  if (action_set.empty()) throw EmptyActionSet("face_distance on empty set");
  std::vector<double> sub;
  sub.reserve(action_set.size());
  for (int x : action_set) sub.push_back(sigma[x]);
  const auto proj = project_simplex(sub);
  double d2 = 0.0;
  for (std::size_t k = 0; k < sub.size(); ++k) {
    const double d = proj[k] - sub[k];
    d2 += d * d;
  }
  std::vector<char> in_set(sigma.size(), 0);
  for (int x : action_set) in_set[x] = 1;
  for (std::size_t x = 0; x < sigma.size(); ++x)
    if (!in_set[x]) d2 += sigma[x] * sigma[x];
  return std::sqrt(d2);
}

std::vector<double> min_norm_velocity(const ActionDist& sigma,
                                      const std::vector<int>& action_set) {
  // conv{delta_x - sigma} = (face spanned by the set) - sigma, so the
  // min-norm point is the face projection of sigma minus sigma.
  std::vector<double> sub;
  sub.reserve(action_set.size());
  for (int x : action_set) sub.push_back(sigma[x]);
  const auto proj = project_simplex(sub);
  std::vector<double> v(sigma.size());
  for (std::size_t x = 0; x < sigma.size(); ++x) v[x] = -sigma[x];
  for (std::size_t k = 0; k < action_set.size(); ++k) v[action_set[k]] += proj[k];
  return v;
}

std::vector<int> di_action_set(const Environment& env, const PolicySpec& policy,
                               const ActionDist& sigma, double eps) {
  const std::size_t n = sigma.size();
  std::vector<ActionDist> stencil{sigma};
  if (eps > 0.0) {
    auto push = [&](std::vector<double> dir) {
      double norm = 0.0;
      for (double d : dir) norm += d * d;
      norm = std::sqrt(norm);
      if (norm == 0.0) return;
      for (int sgn : {+1, -1}) {
        std::vector<double> p(n);
        for (std::size_t k = 0; k < n; ++k) p[k] = sigma[k] + sgn * eps * dir[k] / norm;
        stencil.emplace_back(project_simplex(std::move(p)));
      }
    };
    const double c = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {  // axis points: e_i - barycenter
      std::vector<double> dir(n, -c);
      dir[i] += 1.0;
      push(std::move(dir));
    }
    for (std::size_t i = 0; i < n; ++i)  // diagonal points: e_i - e_j
      for (std::size_t j = i + 1; j < n; ++j) {
        std::vector<double> dir(n, 0.0);
        dir[i] = 1.0;
        dir[j] = -1.0;
        push(std::move(dir));
      }
  }
  std::vector<int> out;
  auto merge = [&out](const std::vector<int>& acts) {
    for (int a : acts) {
      auto it = std::lower_bound(out.begin(), out.end(), a);
      if (it == out.end() || *it != a) out.insert(it, a);
    }
  };
  for (const auto& pt : stencil) {
    // The analytic families admit exact sub-grid minimizers; boundary
    // crossings then land on the true policy switching surfaces instead of
    // lattice-cell edges. DiscreteTable grids keep the literal grid argmin.
    if (env.models.family == FamilyKind::GaussianCommonMean ||
        env.models.family == FamilyKind::BernoulliCommon) {
      if (env.models.theta_dim() == 1) {
        try {
          merge(policy_actions_at_model(env, policy, {closest_model(env, pt)}));
          continue;
        } catch (const NonUniqueMinimizer&) {
          // tie at grid resolution: fall through to the grid minimizers
        }
      } else {
        const auto theta = continuous_closest_model(env, pt);
        if (theta) {
          merge(policy_actions_at_model(env, policy, *theta));
          continue;
        }
      }
    }
    const KldResult r = minimize_kld(env, pt);
    for (std::size_t idx : r.minimizers)
      merge(policy_actions_at_model(env, policy, env.models.points[idx]));
  }
  return out;
}

std::vector<std::vector<double>> di_rhs(const Environment& env,
                                        const PolicySpec& policy,
                                        const ActionDist& sigma) {
  const auto set = di_action_set(env, policy, sigma, 0.0);
  std::vector<std::vector<double>> vel;
  vel.reserve(set.size());
  for (int x : set) {
    std::vector<double> v(sigma.size());
    for (std::size_t k = 0; k < sigma.size(); ++k)
      v[k] = (static_cast<int>(k) == x ? 1.0 : 0.0) - sigma[k];
    vel.push_back(std::move(v));
  }
  return vel;
}

namespace {

struct Mode {
  enum Kind { Pure, Sliding, Stationary } kind = Pure;
  int action = -1;             // Pure
  int a = -1, b = -1;          // Sliding pair
  std::vector<int> signature;  // Pure: expected action set just downstream
};

class Integrator {
 public:
  Integrator(const Environment& env, const PolicySpec& policy, double eps,
             const Strategy& strategy, std::uint64_t branch_seed)
      : env_(env),
        policy_(policy),
        eps_(eps),
        strategy_(strategy),
        rng_(branch_seed, CounterRng::kSamplingStream) {}

  DIPath run(const ActionDist& sigma0, double T, double h) {
    if (!(h > 0.0) || !(T >= 0.0)) throw DomainError("need step > 0 and T >= 0");
    DIPath path;
    path.selection_strategy = strategy_label();
    ActionDist s = sigma0;
    normalize(s);
    double t = 0.0;
    Mode mode = choose_mode(s, action_set(s));
    path.times.push_back(t);
    path.states.push_back(s);

    while (t < T - 1e-15) {
      const double step = std::min(h, T - t);
      if (mode.kind == Mode::Stationary) {
        t += step;
        path.times.push_back(t);
        path.states.push_back(s);
        continue;
      }
      const std::vector<double> v = velocity(s, mode);
      const ActionDist next = advance(s, v, step);
      if (mode_holds(next, mode)) {
        t += step;
        s = next;
        check_finite(s);
        path.times.push_back(t);
        path.states.push_back(s);
        continue;
      }
      // Bisect the boundary-crossing time to 1e-10, then re-select.
      double lo = 0.0, hi = step;
      int iters = 0;
      while (hi - lo > 1e-10) {
        if (++iters > 200) throw StepTooLarge("event bisection failed to converge");
        const double mid = 0.5 * (lo + hi);
        if (mode_holds(advance(s, v, mid), mode))
          lo = mid;
        else
          hi = mid;
      }
      s = advance(s, v, hi);
      t += hi;
      check_finite(s);
      const auto bset = action_set(s);
      mode = choose_mode(s, bset);
      path.events.push_back({t, action_set_label(env_, bset), mode_label(mode)});
      path.times.push_back(t);
      path.states.push_back(s);
      if (path.events.size() > 4000000)
        throw StepTooLarge("event count exploded; reduce the step size");
    }
    return path;
  }

 private:
  std::vector<int> action_set(const ActionDist& s) const {
    return di_action_set(env_, policy_, s, eps_);
  }

  std::string strategy_label() const {
    switch (strategy_.kind) {
      case SelectionKind::FixedSelection: return "fixed";
      case SelectionKind::Filippov: return "filippov";
      case SelectionKind::BranchSample: return "branch";
    }
    return "?";
  }

  std::string mode_label(const Mode& m) const {
    switch (m.kind) {
      case Mode::Pure: return env_.actions[m.action];
      case Mode::Sliding:
        return "slide(" + env_.actions[m.a] + "," + env_.actions[m.b] + ")";
      case Mode::Stationary: return "stationary";
    }
    return "?";
  }

  static void normalize(ActionDist& s) {
    double sum = 0.0;
    for (double& x : s.w) {
      if (x < 0.0 && x > -1e-12) x = 0.0;
      sum += x;
    }
    for (double& x : s.w) x /= sum;
  }

  void check_finite(const ActionDist& s) const {
    for (double x : s.w)
      if (!std::isfinite(x)) throw NonFiniteState("non-finite state during integration");
  }

  // Exact flow step: every mode's velocity has the affine form target - s,
  // whose solution is s + (1 - e^{-h}) (target - s). This keeps pure segments
  // on the true exponential and is simplex-preserving.
  static ActionDist advance(const ActionDist& s, const std::vector<double>& v,
                            double h) {
    const double f = -std::expm1(-h);
    ActionDist out = s;
    for (std::size_t k = 0; k < out.size(); ++k) out.w[k] += f * v[k];
    normalize(out);
    return out;
  }

  std::vector<double> pure_velocity(const ActionDist& s, int x) const {
    std::vector<double> v(s.size());
    for (std::size_t k = 0; k < s.size(); ++k)
      v[k] = (static_cast<int>(k) == x ? 1.0 : 0.0) - s[k];
    return v;
  }

  // Directional derivative of the continuous a/b boundary gap along v.
  double dir_deriv(const ActionDist& s, const std::vector<double>& v, int a,
                   int b) const {
    const double h = 1e-6;
    auto gap_at = [&](double sgn) {
      std::vector<double> p(s.size());
      for (std::size_t k = 0; k < s.size(); ++k) p[k] = s[k] + sgn * h * v[k];
      const auto theta = continuous_closest_model(env_, ActionDist(p));
      if (!theta) throw DomainError("Filippov sliding needs an analytic model family");
      return policy_boundary_gap(env_, policy_, *theta, a, b);
    };
    return (gap_at(+1.0) - gap_at(-1.0)) / (2.0 * h);
  }

  bool sliding_condition(const ActionDist& s, int a, int b, double* lambda) const {
    const double Da = dir_deriv(s, pure_velocity(s, a), a, b);
    const double Db = dir_deriv(s, pure_velocity(s, b), a, b);
    if (!(Da > 0.0 && Db < 0.0)) return false;
    if (lambda) *lambda = Db / (Db - Da);
    return true;
  }

  std::vector<double> velocity(const ActionDist& s, const Mode& mode) const {
    if (mode.kind == Mode::Pure) return pure_velocity(s, mode.action);
    if (mode.kind == Mode::Stationary) return std::vector<double>(s.size(), 0.0);
    double lam = 0.5;
    sliding_condition(s, mode.a, mode.b, &lam);
    lam = std::clamp(lam, 0.0, 1.0);
    const auto va = pure_velocity(s, mode.a);
    const auto vb = pure_velocity(s, mode.b);
    std::vector<double> v(s.size());
    for (std::size_t k = 0; k < s.size(); ++k)
      v[k] = lam * va[k] + (1.0 - lam) * vb[k];
    return v;
  }

  // Whether the current mode remains a valid selection at state s. Pure modes
  // hold while the action set matches the downstream signature; sliding
  // tolerates the grid-snapped set fluttering between {a}, {a,b}, {b} and
  // ends when a foreign action appears or the fields stop opposing.
  bool mode_holds(const ActionDist& s, const Mode& mode) const {
    if (mode.kind == Mode::Stationary) return true;
    const auto set = action_set(s);
    if (mode.kind == Mode::Pure) return set == mode.signature;
    for (int x : set)
      if (x != mode.a && x != mode.b) return false;
    return sliding_condition(s, mode.a, mode.b, nullptr);
  }

  // The action set just downstream of s under action x's own flow; x is a
  // viable pure continuation iff it belongs to that set.
  std::vector<int> downstream_set(const ActionDist& s, int x) const {
    return action_set(advance(s, pure_velocity(s, x), kProbeStep));
  }

  bool hull_contains_zero(const ActionDist& s, const std::vector<int>& set) const {
    const auto mn = min_norm_velocity(s, set);
    double norm = 0.0;
    for (double x : mn) norm += x * x;
    return std::sqrt(norm) <= kStationaryTol;
  }

  Mode choose_mode(const ActionDist& s, const std::vector<int>& set) {
    if (set.empty()) throw EmptyActionSet("empty action set during integration");
    Mode m;
    if (set.size() == 1) {
      m.action = set.front();
      m.signature = downstream_set(s, m.action);
      return m;
    }
    // Filippov follows the convexified field: stationary wherever the hull of
    // extreme velocities contains zero. Sampling strategies keep exploring
    // pure selections instead.
    if (strategy_.kind == SelectionKind::Filippov && hull_contains_zero(s, set)) {
      m.kind = Mode::Stationary;
      return m;
    }
    std::vector<int> viables;
    std::vector<std::vector<int>> signatures;
    for (int x : set) {
      auto ds = downstream_set(s, x);
      if (std::binary_search(ds.begin(), ds.end(), x)) {
        viables.push_back(x);
        signatures.push_back(std::move(ds));
      }
    }
    if (!viables.empty()) {
      std::size_t pick = 0;
      switch (strategy_.kind) {
        case SelectionKind::FixedSelection:
          for (int p : strategy_.priority) {
            const auto it = std::find(viables.begin(), viables.end(), p);
            if (it != viables.end()) {
              pick = static_cast<std::size_t>(it - viables.begin());
              break;
            }
          }
          break;
        case SelectionKind::BranchSample:
          pick = rng_.next_index(viables.size());
          break;
        case SelectionKind::Filippov:
          // a transversal crossing has exactly the downstream action viable
          pick = 0;
          break;
      }
      m.action = viables[pick];
      m.signature = signatures[pick];
      return m;
    }
    // No viable pure continuation. A zero hull point means the state can rest
    // there; otherwise the only absolutely continuous solutions slide.
    if (hull_contains_zero(s, set)) {
      m.kind = Mode::Stationary;
      return m;
    }
    for (std::size_t i = 0; i < set.size(); ++i)
      for (std::size_t j = i + 1; j < set.size(); ++j)
        if (sliding_condition(s, set[i], set[j], nullptr)) {
          m.kind = Mode::Sliding;
          m.a = set[i];
          m.b = set[j];
          return m;
        }
    // opposing pair not found: fall back to the lowest-index action
    m.action = set.front();
    m.signature = downstream_set(s, m.action);
    return m;
  }

  const Environment& env_;
  const PolicySpec& policy_;
  double eps_;
  Strategy strategy_;
  CounterRng rng_;
};

}  // namespace

std::vector<DIPath> integrate_perturbed_di(const Environment& env,
                                           const PolicySpec& policy,
                                           const ActionDist& sigma0, double T,
                                           double step, double epsilon,
                                           const Strategy& strategy) {
  if (epsilon < 0.0) throw DomainError("epsilon must be >= 0");
  if (strategy.kind == SelectionKind::BranchSample) {
    std::vector<DIPath> out(std::max(1, strategy.count));
    parallel_for_index(out.size(), [&](std::size_t b) {
      Integrator integ(env, policy, epsilon, strategy,
                       strategy.seed * 1315423911ULL + b);
      out[b] = integ.run(sigma0, T, step);
    });
    return out;
  }
  Integrator integ(env, policy, epsilon, strategy, strategy.seed);
  return {integ.run(sigma0, T, step)};
}

std::vector<DIPath> integrate_di(const Environment& env, const PolicySpec& policy,
                                 const ActionDist& sigma0, double T, double step,
                                 const Strategy& strategy) {
  return integrate_perturbed_di(env, policy, sigma0, T, step, 0.0, strategy);
}

}  // namespace misspec
