#include "misspec/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "misspec/kld.hpp"
#include "misspec/threads.hpp"

namespace misspec {

using nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double point_segment_distance(const ActionDist& p, const ActionDist& a,
                              const ActionDist& b) {
  double ab2 = 0.0, ap_ab = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double d = b.w[k] - a.w[k];
    ab2 += d * d;
    ap_ab += (p.w[k] - a.w[k]) * d;
  }
  const double t = ab2 > 0.0 ? std::clamp(ap_ab / ab2, 0.0, 1.0) : 0.0;
  double d2 = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double d = p.w[k] - (a.w[k] + t * (b.w[k] - a.w[k]));
    d2 += d * d;
  }
  return std::sqrt(d2);
}

std::vector<double> project_simplex_vec(std::vector<double> v) {
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

// Deterministic sample within `radius` of the anchor, inside the simplex.
ActionDist sample_near(const ActionDist& anchor, double radius, CounterRng& rng) {
  const std::size_t n = anchor.size();
  std::vector<double> dir(n);
  double mean = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    dir[k] = rng.next_normal();
    mean += dir[k];
  }
  mean /= static_cast<double>(n);
  double norm = 0.0;
  for (double& d : dir) {
    d -= mean;  // tangent to the simplex
    norm += d * d;
  }
  norm = std::sqrt(norm);
  const double r =
      radius * std::pow(rng.next_open_double(), 1.0 / std::max<std::size_t>(1, n - 1));
  std::vector<double> p(n);
  for (std::size_t k = 0; k < n; ++k)
    p[k] = anchor[k] + (norm > 0 ? r * dir[k] / norm : 0.0);
  return ActionDist(project_simplex_vec(std::move(p)));
}

json actiondist_json(const ActionDist& a) {
  json out = json::array();
  for (double v : a.w) out.push_back(v);
  return out;
}

}  // namespace

double TargetSet::distance_to(const ActionDist& sigma) const {
  if (points.empty()) throw DomainError("empty target set");
  double best = kInf;
  if (closed_polyline && points.size() >= 2) {
    for (std::size_t i = 0; i < points.size(); ++i)
      best = std::min(best, point_segment_distance(sigma, points[i],
                                                   points[(i + 1) % points.size()]));
    return best;
  }
  for (const auto& p : points) best = std::min(best, distance(sigma, p));
  return best;
}

std::string verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Attracting: return "attracting";
    case Verdict::RobustlyAttracting: return "robustly_attracting";
    case Verdict::Repelling: return "repelling";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "?";
}

json StabilityCertificate::to_json() const {
  return json{{"subject", subject},
              {"verdict", verdict_name(verdict)},
              {"parameters", parameters},
              {"evidence", evidence}};
}

double equilibrium_residual(const Environment& env, const PolicySpec& policy,
                            const ActionDist& sigma) {
  const auto set = di_action_set(env, policy, sigma, 0.0);
  return face_distance(sigma, set);
}

FoundEquilibria find_equilibria(const Environment& env, const PolicySpec& policy,
                                int resolution, double tol) {
  const std::size_t n = env.n_actions();
  if (n > 4) throw UnsupportedSize("find_equilibria scans simplices of <= 4 actions");
  if (resolution < 2) throw ResolutionTooCoarse("resolution must be >= 2");

  // barycentric grid with denominator `resolution`
  std::vector<std::vector<int>> keys;
  {
    std::vector<int> k(n, 0);
    std::function<void(std::size_t, int)> rec = [&](std::size_t pos, int rem) {
      if (pos + 1 == n) {
        k[pos] = rem;
        keys.push_back(k);
        return;
      }
      for (int v = 0; v <= rem; ++v) {
        k[pos] = v;
        rec(pos + 1, rem - v);
      }
    };
    rec(0, resolution);
  }
  auto to_dist = [&](const std::vector<int>& k) {
    std::vector<double> w(n);
    for (std::size_t j = 0; j < n; ++j)
      w[j] = static_cast<double>(k[j]) / resolution;
    return ActionDist(w);
  };

  std::vector<double> res_vals(keys.size());
  parallel_for_index(keys.size(), [&](std::size_t i) {
    res_vals[i] = equilibrium_residual(env, policy, to_dist(keys[i]));
  });

  std::map<std::vector<int>, std::size_t> index_of;
  for (std::size_t i = 0; i < keys.size(); ++i) index_of[keys[i]] = i;

  // local minima over single-unit transfers between coordinates
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    bool is_min = true;
    for (std::size_t a = 0; a < n && is_min; ++a)
      for (std::size_t b = 0; b < n && is_min; ++b) {
        if (a == b || keys[i][a] == 0) continue;
        auto k2 = keys[i];
        k2[a] -= 1;
        k2[b] += 1;
        const auto it = index_of.find(k2);
        if (it != index_of.end() && res_vals[it->second] < res_vals[i] - 1e-12)
          is_min = false;
      }
    if (is_min && res_vals[i] < 0.5) candidates.push_back(i);
  }

  // greedy shrinking-step descent along coordinate-pair directions,
  // round-capped so shallow valleys cannot stall the scan
  auto refine = [&](ActionDist s) {
    double r = equilibrium_residual(env, policy, s);
    double step = 1.0 / resolution;
    for (int round = 0; round < 400 && step > 1e-12 && r > 1e-13; ++round) {
      bool improved = false;
      for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b) {
          if (a == b) continue;
          ActionDist trial = s;
          trial.w[a] += step;
          trial.w[b] -= step;
          if (trial.w[b] < 0.0) continue;
          trial = ActionDist(project_simplex_vec(trial.w));
          const double rt = equilibrium_residual(env, policy, trial);
          if (rt < r - 1e-15) {
            s = trial;
            r = rt;
            improved = true;
          }
        }
      if (!improved) step *= 0.5;
    }
    return std::make_pair(s, r);
  };

  std::vector<ActionDist> accepted;
  for (std::size_t i : candidates) {
    auto [s, r] = refine(to_dist(keys[i]));
    if (r <= tol) accepted.push_back(s);
  }

  // cluster within 2/resolution
  const double merge_dist = 2.0 / resolution;
  std::vector<int> comp(accepted.size(), -1);
  int n_comp = 0;
  for (std::size_t i = 0; i < accepted.size(); ++i) {
    if (comp[i] >= 0) continue;
    comp[i] = n_comp;
    std::vector<std::size_t> stack{i};
    while (!stack.empty()) {
      const std::size_t cur = stack.back();
      stack.pop_back();
      for (std::size_t j = 0; j < accepted.size(); ++j)
        if (comp[j] < 0 && distance(accepted[cur], accepted[j]) <= merge_dist) {
          comp[j] = n_comp;
          stack.push_back(j);
        }
    }
    ++n_comp;
  }

  FoundEquilibria out;
  for (int c = 0; c < n_comp; ++c) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < accepted.size(); ++i)
      if (comp[i] == c) members.push_back(i);
    double diam = 0.0;
    for (std::size_t a = 0; a < members.size(); ++a)
      for (std::size_t b = a + 1; b < members.size(); ++b)
        diam = std::max(diam, distance(accepted[members[a]], accepted[members[b]]));
    if (diam <= merge_dist * 0.5 + 1e-9) {
      out.points.push_back(accepted[members.front()]);
      out.component.push_back(c);
      out.component_is_continuum.push_back(false);
      continue;
    }
    // midpoints along the member chain separate a continuum from an
    // ambiguous merge of distinct equilibria
    std::sort(members.begin(), members.end(), [&](std::size_t a, std::size_t b) {
      return accepted[a].w < accepted[b].w;
    });
    bool continuum = true;
    for (std::size_t j = 0; j + 1 < members.size(); ++j) {
      ActionDist mid = accepted[members[j]];
      for (std::size_t k = 0; k < mid.size(); ++k)
        mid.w[k] = 0.5 * (mid.w[k] + accepted[members[j + 1]].w[k]);
      if (equilibrium_residual(env, policy, mid) > std::max(tol, 1e-9) * 10.0)
        continuum = false;
    }
    if (!continuum)
      throw ResolutionTooCoarse("adjacent equilibrium candidates merge ambiguously");
    for (std::size_t i : members) {
      out.points.push_back(accepted[i]);
      out.component.push_back(c);
    }
    out.component_is_continuum.push_back(true);
  }
  return out;
}

StabilityCertificate test_attracting(const Environment& env, const PolicySpec& policy,
                                     const TargetSet& A, double U_radius, double eps,
                                     double T, int n_init, int n_branch,
                                     const StabilityParams& params) {
  if (!(eps < U_radius)) throw DomainError("need eps < U_radius");
  StabilityCertificate cert;
  cert.subject = "attracting-set candidate";
  cert.parameters = {{"U_radius", U_radius}, {"eps", eps},      {"T", T},
                     {"n_init", n_init},     {"n_branch", n_branch},
                     {"step", params.step},  {"seed", params.seed}};
  CounterRng rng(params.seed, CounterRng::kSamplingStream);
  bool all_pass = true;
  json evidence = json::array();
  for (int k = 0; k < n_init; ++k) {
    const ActionDist anchor = A.points[k % A.points.size()];
    const ActionDist s0 = sample_near(anchor, U_radius, rng);
    Strategy br;
    br.kind = SelectionKind::BranchSample;
    br.count = n_branch;
    br.seed = params.seed * 7919 + k;
    const auto bundle =
        integrate_di(env, policy, s0, 2.0 * T, params.step, br);
    double worst = 0.0;
    for (const auto& path : bundle)
      for (std::size_t i = 0; i < path.times.size(); ++i)
        if (path.times[i] >= T)
          worst = std::max(worst, A.distance_to(path.states[i]));
    evidence.push_back({{"init", actiondist_json(s0)}, {"worst_tail_distance", worst}});
    if (worst >= eps) all_pass = false;
  }
  cert.evidence = evidence;
  cert.verdict = all_pass ? Verdict::Attracting : Verdict::Inconclusive;
  return cert;
}

StabilityCertificate test_repelling(const Environment& env, const PolicySpec& policy,
                                    const ActionDist& sigma_star, double U_radius,
                                    double T, int n_sigma,
                                    const std::vector<double>& beta_ladder,
                                    int n_branch, const StabilityParams& params) {
  if (equilibrium_residual(env, policy, sigma_star) > params.residual_tol)
    throw NotAnEquilibrium("test_repelling requires an equilibrium subject");
  StabilityCertificate cert;
  cert.subject = "repelling candidate";
  cert.parameters = {{"U_radius", U_radius},   {"T", T},
                     {"n_sigma", n_sigma},     {"beta_ladder", beta_ladder},
                     {"n_branch", n_branch},   {"step", params.step},
                     {"seed", params.seed}};
  CounterRng rng(params.seed, CounterRng::kSamplingStream);
  const auto f_star = di_action_set(env, policy, sigma_star, 0.0);
  bool all_pass = true;
  json evidence = json::array();
  for (int k = 0; k < n_sigma; ++k) {
    const ActionDist sig = sample_near(sigma_star, U_radius, rng);
    for (int x : f_star) {
      for (double beta_bar : beta_ladder) {
        bool some_beta_exits = false;
        double exit_time = -1.0;
        for (int j = 1; j <= 3 && !some_beta_exits; ++j) {
          const double beta = 1.0 - (1.0 - beta_bar) / std::pow(2.0, j);
          ActionDist start = sig;
          for (std::size_t c = 0; c < start.size(); ++c)
            start.w[c] = beta * sig[c] +
                         (1.0 - beta) * (static_cast<int>(c) == x ? 1.0 : 0.0);
          Strategy br;
          br.kind = SelectionKind::BranchSample;
          br.count = n_branch;
          br.seed = params.seed * 104729 + k * 31 + x * 7 + j;
          const auto bundle = integrate_di(env, policy, start, T, params.step, br);
          bool all_branches_exit = true;
          double worst_exit = 0.0;
          for (const auto& path : bundle) {
            bool exited = false;
            for (std::size_t i = 0; i < path.times.size(); ++i)
              if (distance(path.states[i], sigma_star) > U_radius) {
                exited = true;
                worst_exit = std::max(worst_exit, path.times[i]);
                break;
              }
            if (!exited) all_branches_exit = false;
          }
          if (all_branches_exit) {
            some_beta_exits = true;
            exit_time = worst_exit;
          }
        }
        if (!some_beta_exits) all_pass = false;
        evidence.push_back({{"sigma", actiondist_json(sig)},
                            {"action", env.actions[x]},
                            {"beta_bar", beta_bar},
                            {"exits", some_beta_exits},
                            {"exit_time", exit_time}});
      }
    }
  }
  cert.evidence = evidence;
  cert.verdict = all_pass ? Verdict::Repelling : Verdict::Inconclusive;
  return cert;
}

StabilityCertificate test_robust_attracting(const Environment& env,
                                            const PolicySpec& policy,
                                            const TargetSet& A, double zeta,
                                            double eps, double T, int samples,
                                            const StabilityCertificate& attracting_cert,
                                            const StabilityParams& params) {
  if (attracting_cert.verdict != Verdict::Attracting &&
      attracting_cert.verdict != Verdict::RobustlyAttracting)
    throw MissingBasin("test_robust_attracting needs a prior Attracting certificate");
  const double basin = attracting_cert.parameters.at("U_radius").get<double>();
  StabilityCertificate cert;
  cert.subject = "robustly-attracting candidate";
  cert.parameters = {{"zeta", zeta},     {"eps", eps},   {"T", T},
                     {"samples", samples}, {"U_radius", basin},
                     {"step", params.step}, {"seed", params.seed}};
  CounterRng rng(params.seed, CounterRng::kSamplingStream);
  bool all_pass = true;
  json evidence = json::array();
  for (int k = 0; k < samples; ++k) {
    const ActionDist anchor = A.points[k % A.points.size()];
    const ActionDist s0 = sample_near(anchor, zeta, rng);
    Strategy br;
    br.kind = SelectionKind::BranchSample;
    br.count = 4;
    br.seed = params.seed * 15485863 + k;
    const auto bundle =
        integrate_perturbed_di(env, policy, s0, 2.0 * T, params.step, eps, br);
    double worst = 0.0;
    for (const auto& path : bundle)
      for (const auto& st : path.states) worst = std::max(worst, A.distance_to(st));
    evidence.push_back({{"init", actiondist_json(s0)}, {"worst_distance", worst}});
    if (worst > basin) all_pass = false;
  }
  cert.evidence = evidence;
  cert.verdict = all_pass ? Verdict::RobustlyAttracting : Verdict::Inconclusive;
  return cert;
}

std::string model_class_name(ModelClass c) {
  switch (c) {
    case ModelClass::AttractingModel: return "attracting";
    case ModelClass::RepellingModel: return "repelling";
    case ModelClass::Neither: return "neither";
  }
  return "?";
}

namespace {

double pure_model(const Environment& env, int x) {
  return closest_model(env, ActionDist::pure(env.n_actions(), x));
}

// Effective Table1D view of a one-dimensional policy; exact for Table1D,
// breakpoints located by bisection for Myopic.
struct Table1DView {
  std::vector<double> breakpoints;
  std::vector<std::vector<int>> interval_sets;
  std::vector<std::vector<int>> breakpoint_sets;

  std::vector<int> at(double theta, double snap) const {
    for (std::size_t j = 0; j < breakpoints.size(); ++j)
      if (std::abs(theta - breakpoints[j]) <= snap) return breakpoint_sets[j];
    const std::size_t k =
        std::upper_bound(breakpoints.begin(), breakpoints.end(), theta) -
        breakpoints.begin();
    return interval_sets[k];
  }
};

Table1DView table_view(const Environment& env, const PolicySpec& policy) {
  Table1DView v;
  if (policy.kind == PolicyKind::Table1D) {
    v.breakpoints = policy.breakpoints;
    v.interval_sets = policy.interval_actions;
    v.breakpoint_sets = policy.breakpoint_actions;
    return v;
  }
  if (policy.kind != PolicyKind::Myopic)
    throw UnsupportedBeliefReduction("one-dimensional analysis needs Table1D or Myopic");
  const int scan = 4096;
  auto set_at = [&](double th) {
    return policy_actions_at_model(env, policy, std::vector<double>{th});
  };
  auto merged = [](std::vector<int> a, const std::vector<int>& b) {
    for (int x : b)
      if (!std::count(a.begin(), a.end(), x)) a.push_back(x);
    std::sort(a.begin(), a.end());
    return a;
  };
  double prev = 0.0;
  auto prev_set = set_at(0.0);
  std::vector<double> bps;
  std::vector<std::vector<int>> mids{prev_set};
  for (int i = 1; i <= scan; ++i) {
    const double th = static_cast<double>(i) / scan;
    auto cur = set_at(th);
    if (cur != prev_set) {
      double lo = prev, hi = th;
      while (hi - lo > 1e-12) {
        const double mid = 0.5 * (lo + hi);
        if (set_at(mid) == prev_set)
          lo = mid;
        else
          hi = mid;
      }
      bps.push_back(0.5 * (lo + hi));
      mids.push_back(cur);
      prev_set = cur;
    }
    prev = th;
  }
  v.breakpoints = bps;
  v.interval_sets = mids;
  for (std::size_t j = 0; j < bps.size(); ++j)
    v.breakpoint_sets.push_back(merged(v.interval_sets[j], v.interval_sets[j + 1]));
  return v;
}

}  // namespace

ModelClass classify_model(const Environment& env, const PolicySpec& policy,
                          double theta_star, double eps) {
  if (env.models.theta_dim() != 1)
    throw UnsupportedBeliefReduction("classify_model needs a 1-d model grid");
  const Table1DView view = table_view(env, policy);
  std::vector<double> theta_of_action(env.n_actions());
  try {
    for (std::size_t x = 0; x < env.n_actions(); ++x)
      theta_of_action[x] = pure_model(env, static_cast<int>(x));
  } catch (const NonUniqueMinimizer& e) {
    throw IdentifiabilityFailure(e.what());
  }

  // collect the union of policy values over an open window, exactly:
  // interval pieces plus any breakpoints strictly inside
  auto window_actions = [&](double lo, double hi) {
    std::vector<int> acts;
    auto add = [&acts](const std::vector<int>& s) {
      for (int x : s)
        if (!std::count(acts.begin(), acts.end(), x)) acts.push_back(x);
    };
    if (hi <= lo) return acts;  // empty window
    std::vector<double> cuts{lo, hi};
    for (double b : view.breakpoints)
      if (b > lo && b < hi) cuts.push_back(b);
    std::sort(cuts.begin(), cuts.end());
    for (std::size_t j = 0; j + 1 < cuts.size(); ++j)
      add(view.at(0.5 * (cuts[j] + cuts[j + 1]), 0.0));
    for (double b : view.breakpoints)
      if (b > lo && b < hi) add(view.at(b, 1e-15));
    return acts;
  };

  const auto left = window_actions(std::max(0.0, theta_star - eps), theta_star);
  const auto right = window_actions(theta_star, std::min(1.0, theta_star + eps));

  bool attracting = true;
  for (int x : left) attracting = attracting && theta_of_action[x] >= theta_star;
  for (int x : right) attracting = attracting && theta_of_action[x] <= theta_star;
  if (attracting) return ModelClass::AttractingModel;

  if (theta_star > 0.0 && theta_star < 1.0) {
    bool repelling = true;
    for (int x : view.at(theta_star, 1e-12))
      repelling = repelling && std::abs(theta_of_action[x] - theta_star) > 1e-12;
    for (int x : left) repelling = repelling && theta_of_action[x] <= theta_star - eps;
    for (int x : right) repelling = repelling && theta_of_action[x] >= theta_star + eps;
    if (repelling) return ModelClass::RepellingModel;
  }
  return ModelClass::Neither;
}

Staircase build_staircase(const Environment& env, const PolicySpec& policy) {
  if (env.models.theta_dim() != 1)
    throw UnsupportedBeliefReduction("build_staircase needs a 1-d model grid");
  const Table1DView view = table_view(env, policy);

  std::vector<double> theta_of_action(env.n_actions());
  for (std::size_t x = 0; x < env.n_actions(); ++x)
    theta_of_action[x] = pure_model(env, static_cast<int>(x));

  // ordering preconditions; the piecewise step structure itself is defined
  // for any Table1D policy, so a non-monotone interval assignment (the one-dimensional preset)
  // is still admitted
  for (std::size_t x = 1; x < env.n_actions(); ++x)
    if (!(theta_of_action[x] > theta_of_action[x - 1]))
      throw MonotonicityViolation("x -> theta(delta_x) must be increasing");
  for (const auto& s : view.interval_sets)
    if (s.size() != 1)
      throw MonotonicityViolation("interval action sets must be single-valued");

  Staircase st;
  st.breakpoints.push_back(0.0);
  for (double b : view.breakpoints) st.breakpoints.push_back(b);
  st.breakpoints.push_back(1.0);
  for (std::size_t j = 0; j < view.breakpoints.size(); ++j) {
    const auto& bs = view.breakpoint_sets[j];
    const int xmin = *std::min_element(bs.begin(), bs.end());
    const int xmax = *std::max_element(bs.begin(), bs.end());
    st.verticals.push_back({theta_of_action[xmin], theta_of_action[xmax]});
  }
  for (const auto& s : view.interval_sets) {
    st.levels.push_back(theta_of_action[s.front()]);
    st.level_actions.push_back(s.front());
  }

  auto push_fixed = [&st](double theta, int case_id, std::vector<int> support) {
    for (const auto& f : st.fixed_points)
      if (std::abs(f.theta - theta) <= 1e-12) return;
    st.fixed_points.push_back({theta, case_id, std::move(support)});
  };

  // horizontal crossings: level inside its interval
  for (std::size_t j = 0; j < st.levels.size(); ++j) {
    const double a_lo = st.breakpoints[j], a_hi = st.breakpoints[j + 1];
    const double lv = st.levels[j];
    const bool closed_lo = (j == 0), closed_hi = (j + 1 == st.levels.size());
    if (lv > a_lo && lv < a_hi) {
      const int case_id = (lv == 0.0 || lv == 1.0) ? 4 : 3;
      push_fixed(lv, case_id, {st.level_actions[j]});
    } else if ((closed_lo && lv == a_lo) || (closed_hi && lv == a_hi)) {
      push_fixed(lv, 4, {st.level_actions[j]});
    } else if (lv == a_lo || lv == a_hi) {
      push_fixed(lv, 1, {st.level_actions[j]});
    }
  }
  // vertical crossings: breakpoint inside its own image segment
  for (std::size_t j = 0; j < st.verticals.size(); ++j) {
    const double a = st.breakpoints[j + 1];
    const auto [lo, hi] = st.verticals[j];
    if (a > lo && a < hi) {
      std::vector<int> support = view.breakpoint_sets[j];
      push_fixed(a, 2, std::move(support));
    } else if (a == lo || a == hi) {
      push_fixed(a, 1, view.breakpoint_sets[j]);
    }
  }
  std::sort(st.fixed_points.begin(), st.fixed_points.end(),
            [](const auto& a, const auto& b) { return a.theta < b.theta; });
  return st;
}

std::vector<double> equilibrium_models(const Environment& env,
                                       const PolicySpec& policy) {
  const Staircase st = build_staircase(env, policy);
  std::vector<double> out;
  for (const auto& f : st.fixed_points) out.push_back(f.theta);
  return out;
}

WeakIdResult check_weak_identification(const Environment& env, const ActionDist& sigma,
                                       double tol) {
  const KldResult r = minimize_kld(env, sigma);
  WeakIdResult res;
  res.ok = true;
  auto tv = [&](std::size_t i, std::size_t j, std::size_t x) {
    if (env.truth.kind == ConsequenceKind::Discrete) {
      double s = 0.0;
      for (std::size_t y = 0; y < env.truth.support.size(); ++y) {
        double qi, qj;
        if (env.models.family == FamilyKind::BernoulliCommon) {
          qi = (y == 1) ? env.models.points[i][0] : 1.0 - env.models.points[i][0];
          qj = (y == 1) ? env.models.points[j][0] : 1.0 - env.models.points[j][0];
        } else {
          qi = env.models.table[i][x][y];
          qj = env.models.table[j][x][y];
        }
        s += std::abs(qi - qj);
      }
      return 0.5 * s;
    }
    double d2 = 0.0;
    for (std::size_t c = 0; c < env.models.points[i].size(); ++c) {
      const double d = env.models.points[i][c] - env.models.points[j][c];
      d2 += d * d;
    }
    return std::erf(std::sqrt(d2) / (2.0 * std::sqrt(2.0)));
  };
  for (std::size_t a = 0; a < r.minimizers.size(); ++a)
    for (std::size_t b = a + 1; b < r.minimizers.size(); ++b)
      for (std::size_t x = 0; x < env.n_actions(); ++x) {
        if (sigma[x] <= 0.0) continue;
        const double d = tv(r.minimizers[a], r.minimizers[b], x);
        if (d > tol) {
          res.ok = false;
          std::ostringstream os;
          os << "models " << r.minimizers[a] << " and " << r.minimizers[b]
             << " differ on action " << env.actions[x] << " (tv=" << d << ")";
          res.witness = os.str();
          return res;
        }
      }
  return res;
}

double berk_nash_residual(const Environment& env, const ActionDist& sigma,
                          int belief_resolution) {
  const KldResult r = minimize_kld(env, sigma);
  const std::size_t k = r.minimizers.size();
  if (k > 4) throw UnsupportedSize("berk_nash_residual scans tie sets of <= 4 models");

  // enumerate belief weights over the tie set at the given resolution
  std::vector<std::vector<double>> beliefs;
  std::vector<int> comp(k, 0);
  std::function<void(std::size_t, int)> rec = [&](std::size_t pos, int rem) {
    if (pos + 1 == k) {
      comp[pos] = rem;
      std::vector<double> w(k);
      for (std::size_t j = 0; j < k; ++j)
        w[j] = static_cast<double>(comp[j]) / belief_resolution;
      beliefs.push_back(std::move(w));
      return;
    }
    for (int v = 0; v <= rem; ++v) {
      comp[pos] = v;
      rec(pos + 1, rem - v);
    }
  };
  rec(0, belief_resolution);

  double best = kInf;
  for (const auto& mu : beliefs) {
    std::vector<double> scores(env.n_actions(), 0.0);
    for (std::size_t j = 0; j < k; ++j) {
      if (mu[j] == 0.0) continue;
      const auto& row = env.exp_payoff[r.minimizers[j]];
      for (std::size_t x = 0; x < scores.size(); ++x) scores[x] += mu[j] * row[x];
    }
    double m = -kInf;
    for (double s : scores) m = std::max(m, s);
    std::vector<int> f0;
    for (std::size_t x = 0; x < scores.size(); ++x)
      if (scores[x] >= m - 1e-9) f0.push_back(static_cast<int>(x));
    best = std::min(best, face_distance(sigma, f0));
  }
  return best;
}

}  // namespace misspec
