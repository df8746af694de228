#include "misspec/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace misspec {

using nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// 2-D coordinates in the plane {sum theta = 1} for 3-coordinate simplices.
struct Plane2D {
  double u, v;
};

Plane2D to_plane(const std::vector<double>& th) {
  static const double s2 = std::sqrt(2.0), s6 = std::sqrt(6.0);
  return {(th[0] - th[1]) / s2, (th[0] + th[1] - 2.0 * th[2]) / s6};
}

// Signed distance of p to the polygon edge (a -> b); positive on the side of
// the polygon interior for CCW winding.
double edge_signed_distance(const Plane2D& a, const Plane2D& b, const Plane2D& p) {
  const double ex = b.u - a.u, ey = b.v - a.v;
  const double len = std::sqrt(ex * ex + ey * ey);
  return ((p.u - a.u) * ey - (p.v - a.v) * ex) / len * -1.0;
}

double polygon_depth(const SimplexRegion& region, const std::vector<double>& theta) {
  std::vector<Plane2D> poly;
  poly.reserve(region.vertices.size());
  for (const auto& v : region.vertices) poly.push_back(to_plane(v));
  // shoelace; flip to CCW
  double area2 = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const auto& a = poly[i];
    const auto& b = poly[(i + 1) % poly.size()];
    area2 += a.u * b.v - b.u * a.v;
  }
  const Plane2D p = to_plane(theta);
  double depth = kInf;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const auto& a = poly[i];
    const auto& b = poly[(i + 1) % poly.size()];
    double d = edge_signed_distance(a, b, p);
    if (area2 < 0) d = -d;
    depth = std::min(depth, d);
  }
  return depth;  // >= 0 inside, < 0 outside
}

void insert_sorted(std::vector<int>& set, int a) {
  auto it = std::lower_bound(set.begin(), set.end(), a);
  if (it == set.end() || *it != a) set.insert(it, a);
}

double expected_payoff_at(const Environment& env, const std::vector<double>& theta,
                          std::size_t x) {
  if (env.truth.kind == ConsequenceKind::Discrete) {
    double ep = 0.0;
    if (env.models.family == FamilyKind::BernoulliCommon) {
      const double th = theta[0];
      ep = env.payoff.table[x][0] * (1.0 - th) + env.payoff.table[x][1] * th;
    } else {
      throw DomainError("myopic evaluation at a raw model needs an analytic family");
    }
    return ep;
  }
  double ep = env.payoff.affine_b[x];
  for (std::size_t c = 0; c < theta.size(); ++c)
    ep += env.payoff.affine_a[x][c] * theta[c];
  return ep;
}

std::vector<int> argmax_set(const std::vector<double>& scores, double tie_tol) {
  double best = -kInf;
  for (double s : scores) best = std::max(best, s);
  std::vector<int> out;
  for (std::size_t x = 0; x < scores.size(); ++x)
    if (scores[x] >= best - tie_tol) out.push_back(static_cast<int>(x));
  return out;
}

std::vector<int> table1d_actions(const PolicySpec& policy, double theta) {
  const auto& bp = policy.breakpoints;
  for (std::size_t j = 0; j < bp.size(); ++j)
    if (std::abs(theta - bp[j]) <= policy.snap_tol) return policy.breakpoint_actions[j];
  const std::size_t k = std::upper_bound(bp.begin(), bp.end(), theta) - bp.begin();
  return policy.interval_actions[k];
}

std::vector<int> table_simplex_actions(const PolicySpec& policy,
                                       const std::vector<double>& theta) {
  std::vector<int> out;
  for (const auto& region : policy.regions) {
    if (polygon_depth(region, theta) >= -policy.snap_tol)
      for (int a : region.actions) insert_sorted(out, a);
  }
  if (out.empty()) {
    if (policy.default_actions.empty())
      throw DomainError("model point not covered by any policy region");
    return policy.default_actions;
  }
  return out;
}

// --- Bellman machinery -----------------------------------------------------

double model_pmf(const Environment& env, std::size_t i, std::size_t x, std::size_t y) {
  if (env.models.family == FamilyKind::BernoulliCommon) {
    const double th = env.models.points[i][0];
    return y == 1 ? th : 1.0 - th;
  }
  return env.models.table[i][x][y];
}

struct BeliefGrid {
  int m = 0;  // number of models
  int res = 0;
  std::vector<std::vector<double>> points;

  static std::size_t tri_index(int k1, int k2, int res) {
    const std::size_t off = static_cast<std::size_t>(k1) * (res + 1) -
                            static_cast<std::size_t>(k1) * (k1 - 1) / 2;
    return off + static_cast<std::size_t>(k2);
  }

  void build(int models, int resolution) {
    m = models;
    res = resolution;
    points.clear();
    if (m == 1) {
      points.push_back({1.0});
    } else if (m == 2) {
      for (int k = 0; k <= res; ++k) {
        const double p = static_cast<double>(k) / res;
        points.push_back({1.0 - p, p});
      }
    } else {
      for (int k1 = 0; k1 <= res; ++k1)
        for (int k2 = 0; k2 <= res - k1; ++k2)
          points.push_back({static_cast<double>(k1) / res,
                            static_cast<double>(k2) / res,
                            static_cast<double>(res - k1 - k2) / res});
    }
  }

  // barycentric interpolation of grid values at an arbitrary belief
  double interp(const std::vector<double>& values, const std::vector<double>& mu) const {
    if (m == 1) return values[0];
    if (m == 2) {
      const double p = std::clamp(mu[1], 0.0, 1.0) * res;
      const int k = std::min(static_cast<int>(p), res - 1);
      const double f = p - k;
      return values[k] * (1.0 - f) + values[k + 1] * f;
    }
    double u = std::clamp(mu[0], 0.0, 1.0) * res;
    double v = std::clamp(mu[1], 0.0, 1.0) * res;
    if (u + v > res) {  // clamp back into the triangle
      const double over = (u + v - res) / 2.0;
      u -= over;
      v -= over;
    }
    int i = std::min(static_cast<int>(u), res - 1);
    int j = std::min(static_cast<int>(v), res - 1);
    if (i + j >= res) {
      const int excess = i + j - (res - 1);
      if (i >= j) i -= excess; else j -= excess;
    }
    const double fu = u - i, fv = v - j;
    if (fu + fv <= 1.0) {
      return values[tri_index(i, j, res)] * (1.0 - fu - fv) +
             values[tri_index(i + 1, j, res)] * fu +
             values[tri_index(i, j + 1, res)] * fv;
    }
    return values[tri_index(i + 1, j + 1, res)] * (fu + fv - 1.0) +
           values[tri_index(i, j + 1, res)] * (1.0 - fu) +
           values[tri_index(i + 1, j, res)] * (1.0 - fv);
  }
};

// One-step Bellman Q-values at an arbitrary belief vector.
std::vector<double> bellman_q(const Environment& env, const BeliefGrid& grid,
                              const std::vector<double>& values, double beta,
                              const std::vector<double>& mu) {
  const std::size_t nx = env.n_actions();
  const std::size_t ny = env.truth.support.size();
  const std::size_t m = env.models.size();
  std::vector<double> q(nx, 0.0);
  std::vector<double> post(m);
  for (std::size_t x = 0; x < nx; ++x) {
    double total = 0.0;
    for (std::size_t y = 0; y < ny; ++y) {
      double qbar = 0.0;
      for (std::size_t i = 0; i < m; ++i) qbar += mu[i] * model_pmf(env, i, x, y);
      if (qbar <= 0.0) continue;
      double cont = 0.0;
      if (beta > 0.0) {
        for (std::size_t i = 0; i < m; ++i)
          post[i] = mu[i] * model_pmf(env, i, x, y) / qbar;
        cont = grid.interp(values, post);
      }
      total += qbar * (env.payoff.table[x][y] + beta * cont);
    }
    q[x] = total;
  }
  return q;
}

}  // namespace

std::vector<int> myopic_actions(const Environment& env, const Belief& belief,
                                double tie_tol) {
  const auto w = posterior(belief);
  std::vector<double> scores(env.n_actions(), 0.0);
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] == 0.0) continue;
    for (std::size_t x = 0; x < scores.size(); ++x)
      scores[x] += w[i] * env.exp_payoff[i][x];
  }
  return argmax_set(scores, tie_tol);
}

std::vector<int> policy_actions_at_model(const Environment& env,
                                         const PolicySpec& policy,
                                         const std::vector<double>& theta) {
  switch (policy.kind) {
    case PolicyKind::Myopic: {
      std::vector<double> scores(env.n_actions());
      for (std::size_t x = 0; x < scores.size(); ++x)
        scores[x] = expected_payoff_at(env, theta, x);
      return argmax_set(scores, policy.tie_tol);
    }
    case PolicyKind::Table1D:
      if (theta.size() != 1)
        throw UnsupportedBeliefReduction("Table1D needs a scalar model");
      return table1d_actions(policy, theta[0]);
    case PolicyKind::TableSimplex:
      if (theta.size() != 3)
        throw UnsupportedBeliefReduction(
            "TableSimplex needs a 3-coordinate simplex model");
      return table_simplex_actions(policy, theta);
    case PolicyKind::Bellman:
      throw UnsupportedBeliefReduction("Bellman policies evaluate at beliefs only");
  }
  throw DomainError("unknown policy kind");
}

std::vector<int> policy_actions(const Environment& env, const PolicySpec& policy,
                                const Belief& belief) {
  switch (policy.kind) {
    case PolicyKind::Myopic:
      return myopic_actions(env, belief, policy.tie_tol);
    case PolicyKind::Table1D:
    case PolicyKind::TableSimplex:
      return policy_actions_at_model(env, policy, posterior_mean(env, belief));
    case PolicyKind::Bellman: {
      std::call_once(*policy.bellman_once, [&]() {
        policy.bellman_cache = std::make_shared<const ValueFunction>(
            solve_bellman(env, policy.beta, policy.resolution, policy.vi_tol));
      });
      return bellman_actions(env, *policy.bellman_cache, belief, policy.tie_tol);
    }
  }
  throw DomainError("unknown policy kind");
}

int select_action(const std::vector<int>& action_set, TieRule rule, CounterRng& rng,
                  int previous) {
  if (action_set.empty()) throw EmptyActionSet("select_action on empty set");
  if (action_set.size() == 1) return action_set.front();
  switch (rule) {
    case TieRule::Lexicographic:
      return *std::min_element(action_set.begin(), action_set.end());
    case TieRule::UniformRandom:
      return action_set[rng.next_index(action_set.size())];
    case TieRule::StickyPrevious:
      if (previous >= 0 &&
          std::find(action_set.begin(), action_set.end(), previous) != action_set.end())
        return previous;
      return *std::min_element(action_set.begin(), action_set.end());
  }
  throw DomainError("unknown tie rule");
}

ValueFunction solve_bellman(const Environment& env, double beta, int resolution,
                            double tol) {
  if (env.models.size() > 3)
    throw UnsupportedSize("solve_bellman supports model grids of <= 3 points");
  if (env.truth.kind != ConsequenceKind::Discrete)
    throw UnsupportedSize("solve_bellman requires a discrete consequence model");
  if (beta < 0.0 || beta >= 1.0) throw DomainError("beta must lie in [0,1)");

  ValueFunction vf;
  vf.beta = beta;
  vf.resolution = resolution;
  vf.tol = tol;

  BeliefGrid grid;
  grid.build(static_cast<int>(env.models.size()), resolution);
  vf.grid = grid.points;
  vf.values.assign(grid.points.size(), 0.0);

  const long max_iters = 200000;
  for (long it = 0;; ++it) {
    if (it >= max_iters) throw NonConvergence("value iteration cap reached");
    double delta = 0.0;
    std::vector<double> next(vf.values.size());
    for (std::size_t g = 0; g < grid.points.size(); ++g) {
      const auto q = bellman_q(env, grid, vf.values, beta, grid.points[g]);
      const double w = *std::max_element(q.begin(), q.end());
      next[g] = w;
      delta = std::max(delta, std::abs(w - vf.values[g]));
    }
    vf.values.swap(next);
    if (delta < tol) break;
    if (beta == 0.0) break;  // one sweep is exact
  }

  vf.policy_sets.resize(grid.points.size());
  for (std::size_t g = 0; g < grid.points.size(); ++g) {
    const auto q = bellman_q(env, grid, vf.values, beta, grid.points[g]);
    vf.policy_sets[g] = argmax_set(q, 1e-9);
  }
  return vf;
}

std::vector<int> bellman_actions(const Environment& env, const ValueFunction& vf,
                                 const Belief& belief, double tie_tol) {
  BeliefGrid grid;
  grid.build(static_cast<int>(env.models.size()), vf.resolution);
  const auto mu = posterior(belief);
  const auto q = bellman_q(env, grid, vf.values, vf.beta, mu);
  return argmax_set(q, tie_tol);
}

void validate_policy(const Environment& env, const PolicySpec& policy) {
  const int nx = static_cast<int>(env.n_actions());
  auto check_set = [&](const std::vector<int>& s, const std::string& where) {
    if (s.empty()) throw ValidationError("empty action set in " + where);
    for (int a : s)
      if (a < 0 || a >= nx) throw ValidationError("action index out of range in " + where);
  };
  if (policy.kind == PolicyKind::Table1D) {
    const auto& bp = policy.breakpoints;
    for (std::size_t j = 1; j < bp.size(); ++j)
      if (!(bp[j] > bp[j - 1]))
        throw ValidationError("breakpoints must be strictly increasing");
    if (policy.interval_actions.size() != bp.size() + 1 ||
        policy.breakpoint_actions.size() != bp.size())
      throw ValidationError("Table1D interval/breakpoint action sizes mismatch");
    for (const auto& s : policy.interval_actions) check_set(s, "interval_actions");
    for (std::size_t j = 0; j < bp.size(); ++j) {
      check_set(policy.breakpoint_actions[j], "breakpoint_actions");
      for (const auto& side : {policy.interval_actions[j], policy.interval_actions[j + 1]})
        for (int a : side)
          if (std::find(policy.breakpoint_actions[j].begin(),
                        policy.breakpoint_actions[j].end(),
                        a) == policy.breakpoint_actions[j].end())
            throw ValidationError(
                "upper hemicontinuity: breakpoint set must contain both adjacent "
                "interval sets");
    }
  } else if (policy.kind == PolicyKind::TableSimplex) {
    if (policy.regions.empty()) throw ValidationError("TableSimplex needs regions");
    for (const auto& r : policy.regions) {
      if (r.vertices.size() < 3)
        throw ValidationError("simplex region needs at least 3 vertices");
      for (const auto& v : r.vertices)
        if (v.size() != 3)
          throw ValidationError("simplex region vertices must be barycentric length 3");
      check_set(r.actions, "region actions");
    }
    if (!policy.default_actions.empty()) check_set(policy.default_actions, "default");
  } else if (policy.kind == PolicyKind::Bellman) {
    if (policy.beta < 0.0 || policy.beta >= 1.0)
      throw ValidationError("bellman beta must lie in [0,1)");
    if (policy.resolution < 1) throw ValidationError("bellman resolution must be >= 1");
  }
}

PolicySpec parse_policy(const Environment& env, const json& doc) {
  PolicySpec p;
  if (doc.is_null()) return p;  // myopic default
  const std::string kind = doc.value("kind", "myopic");
  p.tie_tol = doc.value("tie_tol", 1e-9);
  p.snap_tol = doc.value("snap_tol", 1e-9);
  auto parse_set = [&env](const json& arr) {
    std::vector<int> s;
    for (const auto& a : arr) s.push_back(env.action_index(a.get<std::string>()));
    std::sort(s.begin(), s.end());
    return s;
  };
  if (kind == "myopic") {
    p.kind = PolicyKind::Myopic;
  } else if (kind == "table1d") {
    p.kind = PolicyKind::Table1D;
    for (const auto& b : doc.at("breakpoints")) p.breakpoints.push_back(b.get<double>());
    for (const auto& s : doc.at("interval_actions")) p.interval_actions.push_back(parse_set(s));
    for (const auto& s : doc.at("breakpoint_actions"))
      p.breakpoint_actions.push_back(parse_set(s));
  } else if (kind == "table_simplex") {
    p.kind = PolicyKind::TableSimplex;
    for (const auto& r : doc.at("regions")) {
      SimplexRegion region;
      for (const auto& v : r.at("vertices"))
        region.vertices.push_back(v.get<std::vector<double>>());
      region.actions = parse_set(r.at("actions"));
      p.regions.push_back(std::move(region));
    }
    if (doc.contains("default_actions"))
      p.default_actions = parse_set(doc.at("default_actions"));
  } else if (kind == "bellman") {
    p.kind = PolicyKind::Bellman;
    p.beta = doc.value("beta", 0.0);
    p.resolution = doc.value("resolution", 50);
    p.vi_tol = doc.value("tol", 1e-8);
  } else {
    throw SchemaError("unknown policy kind '" + kind + "'");
  }
  validate_policy(env, p);
  return p;
}

json serialize_policy(const Environment& env, const PolicySpec& policy) {
  json doc;
  auto labels = [&env](const std::vector<int>& s) {
    std::vector<std::string> out;
    for (int a : s) out.push_back(env.actions[a]);
    return out;
  };
  switch (policy.kind) {
    case PolicyKind::Myopic:
      doc["kind"] = "myopic";
      break;
    case PolicyKind::Table1D: {
      doc["kind"] = "table1d";
      doc["breakpoints"] = policy.breakpoints;
      json ia = json::array(), ba = json::array();
      for (const auto& s : policy.interval_actions) ia.push_back(labels(s));
      for (const auto& s : policy.breakpoint_actions) ba.push_back(labels(s));
      doc["interval_actions"] = ia;
      doc["breakpoint_actions"] = ba;
      break;
    }
    case PolicyKind::TableSimplex: {
      doc["kind"] = "table_simplex";
      json regions = json::array();
      for (const auto& r : policy.regions)
        regions.push_back({{"vertices", r.vertices}, {"actions", labels(r.actions)}});
      doc["regions"] = regions;
      if (!policy.default_actions.empty())
        doc["default_actions"] = labels(policy.default_actions);
      break;
    }
    case PolicyKind::Bellman:
      doc["kind"] = "bellman";
      doc["beta"] = policy.beta;
      doc["resolution"] = policy.resolution;
      doc["tol"] = policy.vi_tol;
      break;
  }
  doc["tie_tol"] = policy.tie_tol;
  doc["snap_tol"] = policy.snap_tol;
  return doc;
}

double policy_boundary_gap(const Environment& env, const PolicySpec& policy,
                           const std::vector<double>& theta, int a, int b) {
  switch (policy.kind) {
    case PolicyKind::Myopic:
      return expected_payoff_at(env, theta, b) - expected_payoff_at(env, theta, a);
    case PolicyKind::Table1D: {
      // nearest breakpoint separating an a-interval from a b-interval
      double best = kInf, gap = 0.0;
      for (std::size_t j = 0; j < policy.breakpoints.size(); ++j) {
        const auto& left = policy.interval_actions[j];
        const auto& right = policy.interval_actions[j + 1];
        const bool sep =
            (std::count(left.begin(), left.end(), a) &&
             std::count(right.begin(), right.end(), b)) ||
            (std::count(left.begin(), left.end(), b) &&
             std::count(right.begin(), right.end(), a));
        if (!sep) continue;
        const double d = std::abs(theta[0] - policy.breakpoints[j]);
        if (d < best) {
          best = d;
          gap = theta[0] - policy.breakpoints[j];
        }
      }
      if (!std::isfinite(best)) throw DomainError("no separating breakpoint found");
      return gap;
    }
    case PolicyKind::TableSimplex: {
      double da = -kInf, db = -kInf;
      for (const auto& r : policy.regions) {
        const double depth = polygon_depth(r, theta);
        if (std::count(r.actions.begin(), r.actions.end(), a)) da = std::max(da, depth);
        if (std::count(r.actions.begin(), r.actions.end(), b)) db = std::max(db, depth);
      }
      if (!std::isfinite(da) || !std::isfinite(db))
        throw DomainError("actions not represented by any region");
      return db - da;
    }
    case PolicyKind::Bellman:
      throw DomainError("boundary gap undefined for Bellman policies");
  }
  throw DomainError("unknown policy kind");
}

std::string action_set_label(const Environment& env, const std::vector<int>& set) {
  std::ostringstream os;
  os << '{';
  for (std::size_t i = 0; i < set.size(); ++i) {
    if (i) os << ',';
    os << env.actions[set[i]];
  }
  os << '}';
  return os.str();
}

}  // namespace misspec
