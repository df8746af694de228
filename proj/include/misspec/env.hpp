#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "misspec/errors.hpp"
#include "misspec/rng.hpp"

namespace misspec {

// Probability vector over the finite action set.
struct ActionDist {
  std::vector<double> w;

  ActionDist() = default;
  explicit ActionDist(std::vector<double> weights) : w(std::move(weights)) {}

  static ActionDist uniform(std::size_t n) {
    return ActionDist(std::vector<double>(n, 1.0 / static_cast<double>(n)));
  }
  static ActionDist pure(std::size_t n, std::size_t k) {
    ActionDist d(std::vector<double>(n, 0.0));
    d.w[k] = 1.0;
    return d;
  }

  std::size_t size() const { return w.size(); }
  double operator[](std::size_t i) const { return w[i]; }

  void validate() const {
    double s = 0.0;
    for (double v : w) {
      if (v < 0.0) throw ValidationError("ActionDist has a negative weight");
      s += v;
    }
    if (std::abs(s - 1.0) > 1e-12)
      throw ValidationError("ActionDist weights do not sum to 1");
  }
};

inline double distance(const ActionDist& a, const ActionDist& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a.w[i] - b.w[i];
    s += d * d;
  }
  return std::sqrt(s);
}

enum class ConsequenceKind { Discrete, GaussianIso };

// Objective consequence function Q: action -> distribution over Y.
struct ConsequenceModel {
  ConsequenceKind kind = ConsequenceKind::Discrete;
  // Discrete
  std::vector<std::string> support;            // consequence labels
  std::vector<std::vector<double>> pmf;        // [action][label]
  // GaussianIso: N(mean(action), I)
  int dim = 0;
  std::vector<std::vector<double>> mean;       // [action][dim]
};

// A drawn consequence: label index for Discrete, vector for GaussianIso.
struct Consequence {
  int label = -1;
  std::vector<double> vec;
};

enum class FamilyKind { BernoulliCommon, GaussianCommonMean, DiscreteTable };

// Regular lattice structure detected on the model grid; enables O(1)
// nearest-point queries in the KLD minimizer.
struct GridLattice {
  enum class Kind { None, Uniform1D, Simplex };
  Kind kind = Kind::None;
  double lo = 0.0, hi = 1.0;  // Uniform1D
  int n = 0;
  int res = 0;                // Simplex: points k/res, sum = res
  int dim = 0;
};

// Finite grid over the model space Theta with prior log-weights.
struct ModelGrid {
  FamilyKind family = FamilyKind::BernoulliCommon;
  std::vector<std::vector<double>> points;
  std::vector<double> log_prior;  // normalized: logsumexp = 0
  // DiscreteTable: q_theta(y|x) as [theta][action][label]
  std::vector<std::vector<std::vector<double>>> table;
  GridLattice lattice;

  std::size_t size() const { return points.size(); }
  int theta_dim() const { return points.empty() ? 0 : static_cast<int>(points[0].size()); }
};

// Payoff: full table for Discrete consequences, affine in y for GaussianIso.
struct PayoffSpec {
  std::vector<std::vector<double>> table;     // [action][label]
  std::vector<std::vector<double>> affine_a;  // [action][dim]
  std::vector<double> affine_b;               // [action]
};

struct Environment {
  std::vector<std::string> actions;
  ConsequenceModel truth;
  PayoffSpec payoff;
  ModelGrid models;

  // Derived caches, built by finalize():
  //   kl_rows[i][x]  = KL(Q(.|x) || Q_{theta_i}(.|x))
  //   exp_payoff[i][x] = E_{Q_{theta_i}(.|x)}[pi(x, Y)]
  std::vector<std::vector<double>> kl_rows;
  std::vector<std::vector<double>> exp_payoff;

  std::size_t n_actions() const { return actions.size(); }

  int action_index(const std::string& label) const {
    for (std::size_t i = 0; i < actions.size(); ++i)
      if (actions[i] == label) return static_cast<int>(i);
    throw UnknownAction(label);
  }

  void finalize();
};

struct ValidationCheck {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;
  bool all_pass() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }
};

Environment load_environment(const nlohmann::json& doc);
nlohmann::json serialize_environment(const Environment& env);
ValidationReport validate_environment(const Environment& env);
Consequence sample_consequence(const Environment& env, int action, CounterRng& rng);
Consequence sample_consequence(const Environment& env, const std::string& action, CounterRng& rng);

// Log densities w.r.t. the common dominating measure. GaussianIso drops the
// additive -dim/2*ln(2*pi) in both truth and model rows; it cancels in every
// likelihood ratio used downstream.
double log_density_true(const Environment& env, int action, const Consequence& y);
double log_density_model(const Environment& env, std::size_t theta_idx, int action,
                         const Consequence& y);

// Continuous KLD minimizer as an affine map of sigma, available for the two
// analytic families: BernoulliCommon -> sum sigma_x p_x (scalar),
// GaussianCommonMean -> sum sigma_x m_x. Empty optional for DiscreteTable.
std::optional<std::vector<double>> continuous_closest_model(const Environment& env,
                                                            const ActionDist& sigma);

std::string consequence_to_string(const Environment& env, const Consequence& y);

}  // namespace misspec
