#include "misspec/kld.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace misspec {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Nearest simplex-lattice indices to res*q, repairing the sum constraint by
// fractional parts.
std::vector<int> round_to_simplex_lattice(const std::vector<double>& q, int res) {
  const std::size_t d = q.size();
  std::vector<int> k(d);
  std::vector<double> frac(d);
  int sum = 0;
  for (std::size_t j = 0; j < d; ++j) {
    const double kf = std::max(0.0, q[j]) * res;
    k[j] = static_cast<int>(std::floor(kf));
    frac[j] = kf - k[j];
    sum += k[j];
  }
  int deficit = res - sum;
  std::vector<std::size_t> order(d);
  for (std::size_t j = 0; j < d; ++j) order[j] = j;
  std::sort(order.begin(), order.end(),
            [&frac](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
  for (std::size_t j = 0; deficit > 0 && j < d; ++j, --deficit) k[order[j]] += 1;
  for (std::size_t j = 0; deficit < 0 && j < d; ++j) {
    if (k[order[d - 1 - j]] > 0) {
      k[order[d - 1 - j]] -= 1;
      ++deficit;
    }
  }
  return k;
}

// Index of lattice point (k1,k2,res-k1-k2) in the enumeration order of
// simplex_lattice_points.
std::size_t simplex_index(int k1, int k2, int res) {
  // offset of block k1: sum_{a<k1} (res+1-a)
  const std::size_t off =
      static_cast<std::size_t>(k1) * (res + 1) - static_cast<std::size_t>(k1) * (k1 - 1) / 2;
  return off + static_cast<std::size_t>(k2);
}

void candidate_window(const Environment& env, const ActionDist& sigma,
                      std::vector<std::size_t>& out) {
  const auto& g = env.models;
  out.clear();
  const auto cont = continuous_closest_model(env, sigma);
  if (!cont) return;
  if (g.lattice.kind == GridLattice::Kind::Uniform1D && g.lattice.n > 1) {
    const double step = (g.lattice.hi - g.lattice.lo) / (g.lattice.n - 1);
    const double t = std::clamp((*cont)[0], g.lattice.lo, g.lattice.hi);
    const long mid = std::lround((t - g.lattice.lo) / step);
    for (long i = mid - 3; i <= mid + 3; ++i)
      if (i >= 0 && i < g.lattice.n) out.push_back(static_cast<std::size_t>(i));
  } else if (g.lattice.kind == GridLattice::Kind::Simplex) {
    const int res = g.lattice.res;
    const auto k0 = round_to_simplex_lattice(*cont, res);
    for (int d1 = -2; d1 <= 2; ++d1)
      for (int d2 = -2; d2 <= 2; ++d2) {
        const int k1 = k0[0] + d1, k2 = k0[1] + d2;
        if (k1 < 0 || k2 < 0 || k1 + k2 > res) continue;
        out.push_back(simplex_index(k1, k2, res));
      }
  }
}

}  // namespace

double kl_divergence_at(const Environment& env, std::size_t theta_idx,
                        const ActionDist& sigma) {
  const auto& row = env.kl_rows[theta_idx];
  double s = 0.0;
  for (std::size_t x = 0; x < row.size(); ++x) s += sigma[x] * row[x];
  return s;
}

double kl_divergence(const Environment& env, const std::vector<double>& theta,
                     const ActionDist& sigma) {
  const auto& g = env.models;
  switch (g.family) {
    case FamilyKind::BernoulliCommon: {
      if (theta.size() != 1) throw DomainError("bernoulli_common theta must be scalar");
      double lo = kInf, hi = -kInf;
      for (const auto& p : g.points) {
        lo = std::min(lo, p[0]);
        hi = std::max(hi, p[0]);
      }
      const double th = theta[0];
      if (th < lo - 1e-12 || th > hi + 1e-12)
        throw DomainError("theta outside the model box");
      double k = 0.0;
      for (std::size_t x = 0; x < env.n_actions(); ++x) {
        if (sigma[x] == 0.0) continue;
        double kx = 0.0;
        for (std::size_t y = 0; y < env.truth.support.size(); ++y) {
          const double q = env.truth.pmf[x][y];
          if (q <= 0.0) continue;
          const double qt = (y == 1) ? th : 1.0 - th;
          if (qt <= 0.0) throw SupportError("q_theta = 0 where q > 0");
          kx += q * std::log(q / qt);
        }
        k += sigma[x] * kx;
      }
      return k;
    }
    case FamilyKind::GaussianCommonMean: {
      if (static_cast<int>(theta.size()) != env.truth.dim)
        throw DomainError("theta dimension mismatch");
      for (std::size_t c = 0; c < theta.size(); ++c) {
        double lo = kInf, hi = -kInf;
        for (const auto& p : g.points) {
          lo = std::min(lo, p[c]);
          hi = std::max(hi, p[c]);
        }
        if (theta[c] < lo - 1e-9 || theta[c] > hi + 1e-9)
          throw DomainError("theta outside the model box");
      }
      double k = 0.0;
      for (std::size_t x = 0; x < env.n_actions(); ++x) {
        if (sigma[x] == 0.0) continue;
        double d2 = 0.0;
        for (std::size_t c = 0; c < theta.size(); ++c) {
          const double d = env.truth.mean[x][c] - theta[c];
          d2 += d * d;
        }
        k += sigma[x] * 0.5 * d2;
      }
      return k;
    }
    case FamilyKind::DiscreteTable: {
      for (std::size_t i = 0; i < g.size(); ++i) {
        bool match = g.points[i].size() == theta.size();
        for (std::size_t c = 0; match && c < theta.size(); ++c)
          match = std::abs(g.points[i][c] - theta[c]) <= 1e-15;
        if (match) {
          const double k = kl_divergence_at(env, i, sigma);
          if (!std::isfinite(k)) throw SupportError("q_theta = 0 where q > 0");
          return k;
        }
      }
      throw DomainError("discrete_table theta must be a grid point");
    }
  }
  throw DomainError("unknown family");
}

KldResult minimize_kld(const Environment& env, const ActionDist& sigma, double tie_tol,
                       bool want_values) {
  if (tie_tol < 0) throw DomainError("tie_tol must be >= 0");
  const auto& g = env.models;
  KldResult res;

  std::vector<std::size_t> window;
  if (!want_values && g.family != FamilyKind::DiscreteTable)
    candidate_window(env, sigma, window);

  double best = kInf;
  std::vector<double> vals;
  if (window.empty()) {
    vals.resize(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
      vals[i] = kl_divergence_at(env, i, sigma);
      best = std::min(best, vals[i]);
    }
    for (std::size_t i = 0; i < g.size(); ++i)
      if (vals[i] <= best + tie_tol) res.minimizers.push_back(i);
    if (want_values) res.values = vals;
  } else {
    for (std::size_t i : window) best = std::min(best, kl_divergence_at(env, i, sigma));
    for (std::size_t i : window)
      if (kl_divergence_at(env, i, sigma) <= best + tie_tol) res.minimizers.push_back(i);
    std::sort(res.minimizers.begin(), res.minimizers.end());
  }
  res.k_star = best;

  if (g.theta_dim() == 1 && !res.minimizers.empty()) {
    const std::size_t i = res.minimizers.front();
    if (i > 0 && i + 1 < g.size()) {
      const double x0 = g.points[i - 1][0], x1 = g.points[i][0], x2 = g.points[i + 1][0];
      const double y0 = kl_divergence_at(env, i - 1, sigma);
      const double y1 = kl_divergence_at(env, i, sigma);
      const double y2 = kl_divergence_at(env, i + 1, sigma);
      const double denom = y0 - 2.0 * y1 + y2;
      if (denom > 0.0 && std::isfinite(denom)) {
        const double h = 0.5 * (x2 - x0);
        const double t = x1 + 0.5 * h * (y0 - y2) / denom;
        res.refined_theta = std::clamp(t, x0, x2);
        // parabola value at the vertex
        const double a = denom / (2.0 * h * h);
        const double dt = *res.refined_theta - x1;
        res.refined_k = y1 + (y2 - y0) / (2.0 * h) * dt + a * dt * dt;
        res.second_order_ok = denom / (h * h) > 1e-8;
      } else {
        res.refined_theta = x1;
        res.refined_k = y1;
        res.second_order_ok = false;
      }
    } else {
      res.refined_theta = g.points[i][0];
      res.refined_k = res.k_star;
    }
  }
  return res;
}

double closest_model(const Environment& env, const ActionDist& sigma, double tie_tol) {
  if (env.models.theta_dim() != 1)
    throw DomainError("closest_model requires a 1-d model grid");
  const KldResult r = minimize_kld(env, sigma, tie_tol);
  for (std::size_t k = 1; k < r.minimizers.size(); ++k)
    if (r.minimizers[k] - r.minimizers[k - 1] > 1)
      throw NonUniqueMinimizer("non-adjacent grid cells tie within tie_tol");
  return r.refined_theta ? *r.refined_theta : env.models.points[r.minimizers.front()][0];
}

double weighted_kl_gap(const Environment& env, const ActionDist& sigma,
                       const Belief& belief) {
  if (belief.log_post.size() != env.models.size())
    throw GridMismatch("belief grid size differs from environment grid");
  const KldResult r = minimize_kld(env, sigma);
  double gap = 0.0;
  for (std::size_t i = 0; i < env.models.size(); ++i) {
    const double w = std::exp(belief.log_post[i]);
    if (w == 0.0) continue;
    gap += w * (kl_divergence_at(env, i, sigma) - r.k_star);
  }
  return std::max(0.0, gap);
}

}  // namespace misspec
