#include "misspec/env.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace misspec {

using nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double lse_normalizer(const std::vector<double>& logw) {
  double m = -kInf;
  for (double v : logw) m = std::max(m, v);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double v : logw) s += std::exp(v - m);
  return m + std::log(s);
}

std::vector<double> as_double_vector(const json& j, const std::string& where) {
  if (!j.is_array()) throw SchemaError(where + " must be an array");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& v : j) {
    if (!v.is_number()) throw SchemaError(where + " must contain numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

std::vector<std::vector<double>> as_matrix(const json& j, const std::string& where) {
  if (!j.is_array()) throw SchemaError(where + " must be an array of arrays");
  std::vector<std::vector<double>> out;
  out.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i)
    out.push_back(as_double_vector(j[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

void check_pmf(const std::vector<double>& p, const std::string& where) {
  double s = 0.0;
  for (double v : p) {
    if (v < 0.0) throw ValidationError("pmf entry negative in " + where);
    s += v;
  }
  if (std::abs(s - 1.0) > 1e-12)
    throw ValidationError("pmf does not sum to 1 in " + where);
}

ConsequenceModel parse_truth(const json& doc, std::size_t n_actions) {
  if (!doc.is_object() || !doc.contains("kind"))
    throw SchemaError("truth must be an object with a 'kind'");
  ConsequenceModel cm;
  const std::string kind = doc.at("kind").get<std::string>();
  if (kind == "discrete") {
    cm.kind = ConsequenceKind::Discrete;
    if (!doc.contains("support") || !doc.contains("pmf"))
      throw SchemaError("discrete truth needs 'support' and 'pmf'");
    for (const auto& s : doc.at("support")) cm.support.push_back(s.get<std::string>());
    cm.pmf = as_matrix(doc.at("pmf"), "truth.pmf");
    if (cm.pmf.size() != n_actions)
      throw ValidationError("truth.pmf must have one row per action");
    for (std::size_t x = 0; x < cm.pmf.size(); ++x) {
      if (cm.pmf[x].size() != cm.support.size())
        throw ValidationError("truth.pmf row size must match support size");
      check_pmf(cm.pmf[x], "truth.pmf[" + std::to_string(x) + "]");
    }
  } else if (kind == "gaussian_iso") {
    cm.kind = ConsequenceKind::GaussianIso;
    if (!doc.contains("dim") || !doc.contains("means"))
      throw SchemaError("gaussian_iso truth needs 'dim' and 'means'");
    cm.dim = doc.at("dim").get<int>();
    if (cm.dim <= 0) throw ValidationError("gaussian_iso dim must be positive");
    cm.mean = as_matrix(doc.at("means"), "truth.means");
    if (cm.mean.size() != n_actions)
      throw ValidationError("truth.means must have one row per action");
    for (const auto& m : cm.mean)
      if (static_cast<int>(m.size()) != cm.dim)
        throw ValidationError("truth mean vector length must equal dim");
  } else {
    throw SchemaError("unknown truth kind '" + kind + "'");
  }
  return cm;
}

PayoffSpec parse_payoff(const json& doc, const ConsequenceModel& truth,
                        std::size_t n_actions) {
  PayoffSpec p;
  if (!doc.is_object()) throw SchemaError("payoff must be an object");
  if (truth.kind == ConsequenceKind::Discrete) {
    if (!doc.contains("table")) throw SchemaError("discrete payoff needs 'table'");
    p.table = as_matrix(doc.at("table"), "payoff.table");
    if (p.table.size() != n_actions)
      throw ValidationError("payoff table must have one row per action");
    for (const auto& row : p.table)
      if (row.size() != truth.support.size())
        throw ValidationError("payoff table dimensions must match actions x support");
  } else {
    if (!doc.contains("affine")) throw SchemaError("gaussian payoff needs 'affine'");
    const json& a = doc.at("affine");
    p.affine_a = as_matrix(a.at("a"), "payoff.affine.a");
    p.affine_b = as_double_vector(a.at("b"), "payoff.affine.b");
    if (p.affine_a.size() != n_actions || p.affine_b.size() != n_actions)
      throw ValidationError("affine payoff must have one entry per action");
    for (const auto& row : p.affine_a)
      if (static_cast<int>(row.size()) != truth.dim)
        throw ValidationError("affine payoff coefficient length must equal dim");
  }
  return p;
}

std::vector<std::vector<double>> simplex_lattice_points(int res, int dim) {
  std::vector<std::vector<double>> pts;
  if (dim != 3) throw SchemaError("simplex grids are supported for dim 3 only");
  pts.reserve(static_cast<std::size_t>(res + 1) * (res + 2) / 2);
  for (int k1 = 0; k1 <= res; ++k1)
    for (int k2 = 0; k2 <= res - k1; ++k2) {
      const int k3 = res - k1 - k2;
      pts.push_back({static_cast<double>(k1) / res, static_cast<double>(k2) / res,
                     static_cast<double>(k3) / res});
    }
  return pts;
}

ModelGrid parse_models(const json& doc, const ConsequenceModel& truth,
                       std::size_t n_actions) {
  if (!doc.is_object()) throw SchemaError("models must be an object");
  ModelGrid g;
  const std::string fam = doc.at("family_kind").get<std::string>();
  if (fam == "bernoulli_common")
    g.family = FamilyKind::BernoulliCommon;
  else if (fam == "gaussian_common_mean")
    g.family = FamilyKind::GaussianCommonMean;
  else if (fam == "discrete_table")
    g.family = FamilyKind::DiscreteTable;
  else
    throw SchemaError("unknown family_kind '" + fam + "'");

  const json& grid = doc.at("grid");
  if (grid.is_object() && grid.contains("n")) {
    const double lo = grid.at("lo").get<double>();
    const double hi = grid.at("hi").get<double>();
    const int n = grid.at("n").get<int>();
    if (n < 1 || hi < lo) throw ValidationError("grid {lo,hi,n} malformed");
    g.points.reserve(n);
    for (int i = 0; i < n; ++i) {
      const double t = (n == 1) ? lo : lo + (hi - lo) * i / (n - 1);
      g.points.push_back({t});
    }
    g.lattice.kind = GridLattice::Kind::Uniform1D;
    g.lattice.lo = lo;
    g.lattice.hi = hi;
    g.lattice.n = n;
  } else if (grid.is_object() && grid.contains("simplex_res")) {
    const int res = grid.at("simplex_res").get<int>();
    if (res < 1) throw ValidationError("simplex_res must be >= 1");
    g.points = simplex_lattice_points(res, 3);
    g.lattice.kind = GridLattice::Kind::Simplex;
    g.lattice.res = res;
    g.lattice.dim = 3;
  } else if (grid.is_object() && grid.contains("points")) {
    g.points = as_matrix(grid.at("points"), "models.grid.points");
    // detect a uniform 1-d lattice
    if (!g.points.empty() && g.points[0].size() == 1 && g.points.size() >= 2) {
      const int n = static_cast<int>(g.points.size());
      const double lo = g.points.front()[0], hi = g.points.back()[0];
      const double step = (hi - lo) / (n - 1);
      bool uniform = step > 0;
      for (int i = 0; i < n && uniform; ++i)
        uniform = std::abs(g.points[i][0] - (lo + step * i)) <= 1e-12;
      if (uniform) {
        g.lattice.kind = GridLattice::Kind::Uniform1D;
        g.lattice.lo = lo;
        g.lattice.hi = hi;
        g.lattice.n = n;
      }
    }
  } else {
    throw SchemaError("models.grid must give {lo,hi,n}, {simplex_res} or {points}");
  }
  if (g.points.empty()) throw ValidationError("model grid must be nonempty");

  const json& prior = doc.at("prior");
  std::vector<double> logw(g.points.size(), 0.0);
  if (prior.is_string() && prior.get<std::string>() == "uniform") {
    // zeros
  } else if (prior.is_object() && prior.contains("log_weights")) {
    logw = as_double_vector(prior.at("log_weights"), "models.prior.log_weights");
    if (logw.size() != g.points.size())
      throw ValidationError("prior log_weights size must match grid size");
  } else if (prior.is_array()) {
    auto w = as_double_vector(prior, "models.prior");
    if (w.size() != g.points.size())
      throw ValidationError("prior weights size must match grid size");
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (!(w[i] > 0.0))
        throw ValidationError("prior must be strictly positive on every grid point");
      logw[i] = std::log(w[i]);
    }
  } else {
    throw SchemaError("models.prior must be \"uniform\", weights, or {log_weights}");
  }
  const double z = lse_normalizer(logw);
  for (double& v : logw) v -= z;
  g.log_prior = std::move(logw);

  if (g.family == FamilyKind::DiscreteTable) {
    if (truth.kind != ConsequenceKind::Discrete)
      throw ValidationError("discrete_table family requires a discrete truth");
    if (!doc.contains("table")) throw SchemaError("discrete_table needs models.table");
    const json& tbl = doc.at("table");
    if (tbl.size() != g.points.size())
      throw ValidationError("models.table must have one entry per grid point");
    for (const auto& per_theta : tbl) {
      auto m = as_matrix(per_theta, "models.table[i]");
      if (m.size() != n_actions)
        throw ValidationError("models.table rows must match action count");
      for (std::size_t x = 0; x < m.size(); ++x) {
        if (m[x].size() != truth.support.size())
          throw ValidationError("models.table pmf size must match support");
        check_pmf(m[x], "models.table");
      }
      g.table.push_back(std::move(m));
    }
  }

  if (g.family == FamilyKind::BernoulliCommon) {
    if (truth.kind != ConsequenceKind::Discrete || truth.support.size() != 2)
      throw ValidationError(
          "bernoulli_common family requires a discrete truth with binary support");
    for (const auto& p : g.points) {
      if (p.size() != 1) throw ValidationError("bernoulli_common grid must be 1-d");
      if (!(p[0] > 0.0 && p[0] < 1.0))
        throw ValidationError(
            "support containment: bernoulli_common grid points must lie in (0,1)");
    }
  }
  if (g.family == FamilyKind::GaussianCommonMean) {
    if (truth.kind != ConsequenceKind::GaussianIso)
      throw ValidationError("gaussian_common_mean family requires a gaussian truth");
    for (const auto& p : g.points)
      if (static_cast<int>(p.size()) != truth.dim)
        throw ValidationError("family consequence space must match truth (theta dim)");
  }
  return g;
}

}  // namespace

void Environment::finalize() {
  const std::size_t nt = models.size();
  const std::size_t nx = n_actions();
  kl_rows.assign(nt, std::vector<double>(nx, 0.0));
  exp_payoff.assign(nt, std::vector<double>(nx, 0.0));

  for (std::size_t i = 0; i < nt; ++i) {
    for (std::size_t x = 0; x < nx; ++x) {
      double kl = 0.0, ep = 0.0;
      if (truth.kind == ConsequenceKind::Discrete) {
        for (std::size_t y = 0; y < truth.support.size(); ++y) {
          const double q = truth.pmf[x][y];
          double qi = 0.0;
          if (models.family == FamilyKind::BernoulliCommon) {
            const double th = models.points[i][0];
            qi = (y == 1) ? th : 1.0 - th;
          } else {
            qi = models.table[i][x][y];
          }
          if (q > 0.0) kl += (qi > 0.0) ? q * std::log(q / qi) : kInf;
          ep += payoff.table.empty() ? 0.0 : payoff.table[x][y] * qi;
        }
      } else {
        // GaussianIso truth with common-mean family
        const auto& mx = truth.mean[x];
        const auto& th = models.points[i];
        double d2 = 0.0;
        for (std::size_t k = 0; k < mx.size(); ++k) {
          const double d = mx[k] - th[k];
          d2 += d * d;
        }
        kl = 0.5 * d2;
        if (!payoff.affine_a.empty()) {
          ep = payoff.affine_b[x];
          for (std::size_t k = 0; k < th.size(); ++k) ep += payoff.affine_a[x][k] * th[k];
        }
      }
      kl_rows[i][x] = kl;
      exp_payoff[i][x] = ep;
    }
  }
}

Environment load_environment(const json& doc) {
  if (!doc.is_object()) throw SchemaError("config root must be an object");
  Environment env;
  if (!doc.contains("actions")) throw SchemaError("config needs 'actions'");
  for (const auto& a : doc.at("actions")) env.actions.push_back(a.get<std::string>());
  if (env.actions.empty()) throw ValidationError("actions list must be nonempty");
  env.truth = parse_truth(doc.at("truth"), env.actions.size());
  env.payoff = parse_payoff(doc.at("payoff"), env.truth, env.actions.size());
  env.models = parse_models(doc.at("models"), env.truth, env.actions.size());

  // DiscreteTable support containment (implied by Assumption 2(iii))
  if (env.models.family == FamilyKind::DiscreteTable) {
    for (std::size_t i = 0; i < env.models.size(); ++i)
      for (std::size_t x = 0; x < env.n_actions(); ++x)
        for (std::size_t y = 0; y < env.truth.support.size(); ++y)
          if (env.truth.pmf[x][y] > 0.0 && env.models.table[i][x][y] <= 0.0)
            throw ValidationError(
                "support containment: q_theta(y|x)=0 where q(y|x)>0 at grid point " +
                std::to_string(i));
  }
  env.finalize();
  return env;
}

json serialize_environment(const Environment& env) {
  json doc;
  doc["actions"] = env.actions;
  if (env.truth.kind == ConsequenceKind::Discrete) {
    doc["truth"] = {{"kind", "discrete"},
                    {"support", env.truth.support},
                    {"pmf", env.truth.pmf}};
    doc["payoff"] = {{"table", env.payoff.table}};
  } else {
    doc["truth"] = {{"kind", "gaussian_iso"},
                    {"dim", env.truth.dim},
                    {"means", env.truth.mean}};
    doc["payoff"] = {{"affine", {{"a", env.payoff.affine_a}, {"b", env.payoff.affine_b}}}};
  }
  json models;
  switch (env.models.family) {
    case FamilyKind::BernoulliCommon: models["family_kind"] = "bernoulli_common"; break;
    case FamilyKind::GaussianCommonMean:
      models["family_kind"] = "gaussian_common_mean";
      break;
    case FamilyKind::DiscreteTable: models["family_kind"] = "discrete_table"; break;
  }
  if (env.models.lattice.kind == GridLattice::Kind::Uniform1D) {
    models["grid"] = {{"lo", env.models.lattice.lo},
                      {"hi", env.models.lattice.hi},
                      {"n", env.models.lattice.n}};
  } else if (env.models.lattice.kind == GridLattice::Kind::Simplex) {
    models["grid"] = {{"simplex_res", env.models.lattice.res}};
  } else {
    models["grid"] = {{"points", env.models.points}};
  }
  models["prior"] = {{"log_weights", env.models.log_prior}};
  if (env.models.family == FamilyKind::DiscreteTable) models["table"] = env.models.table;
  doc["models"] = std::move(models);
  return doc;
}

ValidationReport validate_environment(const Environment& env) {
  ValidationReport rep;
  auto add = [&rep](const std::string& name, bool pass, const std::string& detail) {
    rep.checks.push_back({name, pass, detail});
  };

  if (env.truth.kind == ConsequenceKind::Discrete) {
    bool ok = true;
    std::string detail;
    for (std::size_t x = 0; x < env.truth.pmf.size(); ++x) {
      double s = 0.0;
      bool nonneg = true;
      for (double v : env.truth.pmf[x]) {
        s += v;
        nonneg = nonneg && v >= 0.0;
      }
      if (!nonneg || std::abs(s - 1.0) > 1e-12) {
        ok = false;
        detail = "action " + env.actions[x];
      }
    }
    add("A1: pmf normalization", ok, detail);
  } else {
    bool ok = true;
    for (const auto& m : env.truth.mean)
      ok = ok && static_cast<int>(m.size()) == env.truth.dim;
    add("A1: gaussian mean dimensions", ok, "");
  }

  {
    bool ok = true;
    std::string detail;
    if (env.models.family == FamilyKind::DiscreteTable) {
      for (std::size_t i = 0; i < env.models.size() && ok; ++i)
        for (std::size_t x = 0; x < env.n_actions() && ok; ++x)
          for (std::size_t y = 0; y < env.truth.support.size() && ok; ++y)
            if (env.truth.pmf[x][y] > 0.0 && env.models.table[i][x][y] <= 0.0) {
              ok = false;
              detail = "grid point " + std::to_string(i) + ", action " +
                       env.actions[x] + ", y=" + env.truth.support[y];
            }
    } else if (env.models.family == FamilyKind::BernoulliCommon) {
      for (const auto& p : env.models.points)
        if (!(p[0] > 0.0 && p[0] < 1.0)) {
          ok = false;
          detail = "grid point at theta=" + std::to_string(p[0]);
        }
    }
    add("A2(iii): support containment", ok, detail);
  }

  {
    bool ok = !env.models.points.empty();
    std::string detail;
    const double z = lse_normalizer(env.models.log_prior);
    for (std::size_t i = 0; i < env.models.log_prior.size(); ++i)
      if (!std::isfinite(env.models.log_prior[i])) {
        ok = false;
        detail = "zero prior weight at grid point " + std::to_string(i);
      }
    if (std::abs(z) > 1e-9) {
      ok = false;
      detail = "prior not normalized";
    }
    add("A3: prior full support on grid", ok, detail);
  }

  {
    bool ok = true;
    if (env.truth.kind == ConsequenceKind::Discrete)
      ok = env.payoff.table.size() == env.n_actions();
    else
      ok = env.payoff.affine_a.size() == env.n_actions() &&
           env.payoff.affine_b.size() == env.n_actions();
    add("A1(iii): payoff integrability (finite table / affine-in-y)", ok, "");
  }

  {
    bool ok = true;
    if (env.models.family == FamilyKind::GaussianCommonMean)
      ok = env.truth.kind == ConsequenceKind::GaussianIso &&
           (env.models.points.empty() ||
            static_cast<int>(env.models.points[0].size()) == env.truth.dim);
    if (env.models.family != FamilyKind::GaussianCommonMean)
      ok = env.truth.kind == ConsequenceKind::Discrete;
    add("A2: family consequence space matches truth", ok, "");
  }

  return rep;
}

Consequence sample_consequence(const Environment& env, int action, CounterRng& rng) {
  if (action < 0 || action >= static_cast<int>(env.n_actions()))
    throw UnknownAction("action index " + std::to_string(action));
  Consequence y;
  if (env.truth.kind == ConsequenceKind::Discrete) {
    const double u = rng.next_double();
    double acc = 0.0;
    const auto& p = env.truth.pmf[action];
    for (std::size_t k = 0; k < p.size(); ++k) {
      acc += p[k];
      if (u < acc) {
        y.label = static_cast<int>(k);
        return y;
      }
    }
    y.label = static_cast<int>(p.size()) - 1;
    return y;
  }
  y.vec.resize(env.truth.dim);
  for (int k = 0; k < env.truth.dim; ++k)
    y.vec[k] = env.truth.mean[action][k] + rng.next_normal();
  return y;
}

Consequence sample_consequence(const Environment& env, const std::string& action,
                               CounterRng& rng) {
  return sample_consequence(env, env.action_index(action), rng);
}

double log_density_true(const Environment& env, int action, const Consequence& y) {
  if (env.truth.kind == ConsequenceKind::Discrete) {
    const double q = env.truth.pmf[action][y.label];
    return q > 0.0 ? std::log(q) : -kInf;
  }
  double d2 = 0.0;
  for (std::size_t k = 0; k < y.vec.size(); ++k) {
    const double d = y.vec[k] - env.truth.mean[action][k];
    d2 += d * d;
  }
  return -0.5 * d2;
}

double log_density_model(const Environment& env, std::size_t theta_idx, int action,
                         const Consequence& y) {
  switch (env.models.family) {
    case FamilyKind::BernoulliCommon: {
      const double th = env.models.points[theta_idx][0];
      const double q = (y.label == 1) ? th : 1.0 - th;
      return q > 0.0 ? std::log(q) : -kInf;
    }
    case FamilyKind::DiscreteTable: {
      const double q = env.models.table[theta_idx][action][y.label];
      return q > 0.0 ? std::log(q) : -kInf;
    }
    case FamilyKind::GaussianCommonMean: {
      const auto& th = env.models.points[theta_idx];
      double d2 = 0.0;
      for (std::size_t k = 0; k < y.vec.size(); ++k) {
        const double d = y.vec[k] - th[k];
        d2 += d * d;
      }
      return -0.5 * d2;
    }
  }
  return -kInf;
}

std::optional<std::vector<double>> continuous_closest_model(const Environment& env,
                                                            const ActionDist& sigma) {
  if (env.models.family == FamilyKind::BernoulliCommon) {
    double p = 0.0;
    for (std::size_t x = 0; x < env.n_actions(); ++x)
      p += sigma[x] * env.truth.pmf[x][1];
    return std::vector<double>{p};
  }
  if (env.models.family == FamilyKind::GaussianCommonMean) {
    std::vector<double> m(env.truth.dim, 0.0);
    for (std::size_t x = 0; x < env.n_actions(); ++x)
      for (int k = 0; k < env.truth.dim; ++k) m[k] += sigma[x] * env.truth.mean[x][k];
    return m;
  }
  return std::nullopt;
}

std::string consequence_to_string(const Environment& env, const Consequence& y) {
  if (env.truth.kind == ConsequenceKind::Discrete) return env.truth.support[y.label];
  std::ostringstream os;
  for (std::size_t k = 0; k < y.vec.size(); ++k) {
    if (k) os << ';';
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", y.vec[k]);
    os << buf;
  }
  return os.str();
}

}  // namespace misspec
