#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "hgame/behavior_model.hpp"
#include "hgame/game_core.hpp"
#include "hgame/rng.hpp"

namespace hgame {

struct ObservedAction {
  std::string maneuver;
  std::size_t trajectory = 0;

  friend bool operator==(const ObservedAction&, const ObservedAction&) = default;
};

using ObservedProfile = std::map<AgentId, ObservedAction>;

// One observed decision with the regret of every available action under a model.
// For QL1 `action_regrets` are the level-1 (QBR) regrets and `level0_regrets` the level-0 ones.
struct RegretRecord {
  std::string game_id;
  AgentId agent_id = 0;
  int level = 1;
  std::string model_key;
  double epsilon = 0.0;
  std::vector<double> features;
  std::size_t observed_action = 0;
  std::vector<std::size_t> solution_actions;
  std::vector<double> action_regrets;
  std::vector<double> level0_regrets;
  double utility_range = 0.0;
};

inline constexpr double kRegretClampTolerance = 1e-9;

namespace detail {

inline void clamp_regrets(std::vector<double>& r) {
  for (double& v : r) {
    if (v < -kRegretClampTolerance) throw Error(ErrorCode::kSolverFailure, "negative regret " + std::to_string(v));
    if (v < 0.0) v = 0.0;
  }
}

inline void min_into(std::vector<double>& acc, const std::vector<double>& r) {
  if (acc.empty()) {
    acc = r;
    return;
  }
  for (std::size_t a = 0; a < acc.size(); ++a) acc[a] = std::min(acc[a], r[a]);
}

inline std::vector<double> non_strategic_regrets(const LevelGame& g, std::size_t i, ResponseKind kind) {
  return regrets_from_values(kind == ResponseKind::kMM ? pessimistic_values(g, i) : optimistic_values(g, i));
}

}  // namespace detail

struct Level1Regrets {
  std::vector<double> primary;
  std::vector<double> level0;  // QL1 only
};

// Level-1 regrets of player i in one maneuver game under the model's own operator.
inline Level1Regrets level1_regrets(const LevelGame& g1, std::size_t i, const BehaviorModel& model,
                                    std::span<const Profile> pne = {}) {
  Level1Regrets out;
  switch (model.metamodel) {
    case Metamodel::kQL0:
      out.primary = detail::non_strategic_regrets(g1, i, model.g1_response);
      break;
    case Metamodel::kQL1: {
      out.level0 = detail::non_strategic_regrets(g1, i, model.g1_response);
      const auto opp = level0_opponent_profiles(g1, i, model.g1_response);
      out.primary = regrets_from_values(response_values(g1, i, opp));
      break;
    }
    case Metamodel::kPNEQE:
      out.primary = pne_regrets(g1, i, pne);
      break;
  }
  detail::clamp_regrets(out.primary);
  detail::clamp_regrets(out.level0);
  return out;
}

// Per-agent level-1 regrets, minimized over every tracked level-2 solution combination.
inline std::vector<Level1Regrets> model_level1_regrets(const HierarchicalSolution& sol, const BehaviorModel& model) {
  const std::size_t n = sol.level1_games.front().num_players();
  std::vector<Level1Regrets> out(n);
  for (std::size_t k = 0; k < sol.level1_games.size(); ++k) {
    const LevelGame& g1 = sol.level1_games[k];
    std::vector<Profile> pne;
    if (model.metamodel == Metamodel::kPNEQE) {
      pne = sol.level1[k].supports;
      if (pne.empty()) throw Error(ErrorCode::kEmptyEquilibriumSet, "maneuver game has no pure equilibrium");
    }
    for (std::size_t i = 0; i < n; ++i) {
      const Level1Regrets r = level1_regrets(g1, i, model, pne);
      detail::min_into(out[i].primary, r.primary);
      if (!r.level0.empty()) detail::min_into(out[i].level0, r.level0);
    }
  }
  return out;
}

inline std::vector<std::size_t> zero_regret_actions(std::span<const double> r) {
  std::vector<std::size_t> out;
  for (std::size_t a = 0; a < r.size(); ++a) {
    if (r[a] == 0.0) out.push_back(a);
  }
  return out;
}

inline double utility_range(const LevelGame& g, std::size_t i) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t idx = 0; idx < g.num_profiles(); ++idx) {
    lo = std::min(lo, g.payoff(idx, i));
    hi = std::max(hi, g.payoff(idx, i));
  }
  return hi - lo;
}

// Regret records for every observed agent: one level-1 record each, plus a level-2 record when
// level 2 is requested, all agents are observed and the agent had more than one trajectory on the
// observed branch.
// `features` holds one row per game agent.
inline std::vector<RegretRecord> compute_regrets(const std::string& game_id, const HierarchicalGame& game,
                                                 const HierarchicalSolution& sol, const ObservedProfile& observed,
                                                 const BehaviorModel& model,
                                                 const std::vector<std::vector<double>>& features,
                                                 bool include_level2 = true) {
  const std::size_t n = game.num_agents();
  if (features.size() != n) throw Error(ErrorCode::kInvalidArgument, "one feature row per agent required");
  std::vector<std::size_t> obs_maneuver(n, 0);
  std::vector<bool> has_obs(n, false);
  for (const auto& [id, action] : observed) {
    const std::size_t i = game.index_of(id);
    obs_maneuver[i] = game.maneuver_index(i, action.maneuver);
    has_obs[i] = true;
  }
  const bool all_observed =
      include_level2 && std::all_of(has_obs.begin(), has_obs.end(), [](bool b) { return b; });
  std::size_t root = 0;
  if (all_observed) {
    root = game.level1.index(obs_maneuver);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t t = observed.at(game.ids[i]).trajectory;
      if (t >= game.level2[root].num_actions(i)) {
        throw Error(ErrorCode::kObservedActionMissing, "trajectory " + std::to_string(t) + " not available to agent " +
                                                           std::to_string(game.ids[i]));
      }
    }
  }

  const std::vector<Level1Regrets> l1 = model_level1_regrets(sol, model);
  const std::string key = model.key();
  std::vector<RegretRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    if (!has_obs[i]) continue;
    RegretRecord r;
    r.game_id = game_id;
    r.agent_id = game.ids[i];
    r.level = 1;
    r.model_key = key;
    r.features = features[i];
    r.observed_action = obs_maneuver[i];
    r.action_regrets = l1[i].primary;
    r.level0_regrets = l1[i].level0;
    r.epsilon = r.action_regrets[r.observed_action];
    r.solution_actions = zero_regret_actions(r.action_regrets);
    r.utility_range = utility_range(sol.level1_games.front(), i);
    out.push_back(std::move(r));
  }
  if (!all_observed) return out;
  const LevelGame& g2 = game.level2[root];
  const ResponseKind g2_kind = sol.level2_concept.kind;
  for (std::size_t i = 0; i < n; ++i) {
    if (g2.num_actions(i) < 2) continue;
    RegretRecord r;
    r.game_id = game_id;
    r.agent_id = game.ids[i];
    r.level = 2;
    r.model_key = key;
    r.features = features[i];
    r.observed_action = observed.at(game.ids[i]).trajectory;
    r.action_regrets = detail::non_strategic_regrets(g2, i, g2_kind);
    detail::clamp_regrets(r.action_regrets);
    r.epsilon = r.action_regrets[r.observed_action];
    r.solution_actions = zero_regret_actions(r.action_regrets);
    r.utility_range = utility_range(g2, i);
    out.push_back(std::move(r));
  }
  return out;
}

// --- choice probabilities ----------------------------------------------------------------------

struct LogitMoments {
  double log_prob = 0.0;  // ln pi(observed)
  double prob = 0.0;
  double grad = 0.0;      // d ln pi / d lambda
  double var = 0.0;       // variance of the regret under pi
};

// pi(a) proportional to exp(-lambda * r(a)), and its derivatives in lambda at the observed action.
inline LogitMoments logit_moments(std::span<const double> r, std::size_t observed, double lambda) {
  const double m = *std::min_element(r.begin(), r.end());
  double z = 0.0, s1 = 0.0;
  for (double v : r) {
    const double w = std::exp(-lambda * (v - m));
    z += w;
    s1 += w * v;
  }
  const double mean = s1 / z;
  double s2 = 0.0;
  for (double v : r) s2 += std::exp(-lambda * (v - m)) * (v - mean) * (v - mean);
  LogitMoments out;
  out.log_prob = -lambda * (r[observed] - m) - std::log(z);
  out.prob = std::exp(out.log_prob);
  out.grad = mean - r[observed];
  out.var = s2 / z;
  return out;
}

inline double choice_log_prob(const RegretRecord& rec, double lambda, double alpha, bool mixture) {
  const LogitMoments l1 = logit_moments(rec.action_regrets, rec.observed_action, lambda);
  if (!mixture) return l1.log_prob;
  const LogitMoments l0 = logit_moments(rec.level0_regrets, rec.observed_action, lambda);
  return std::log(std::max(alpha * l0.prob + (1.0 - alpha) * l1.prob, std::numeric_limits<double>::min()));
}

// --- fits ---------------------------------------------------------------------------------------

struct GlmOptions {
  double epsilon_min = 1e-6;
  double eta_min = 1e-4;
  double tolerance = 1e-8;  // relative deviance change
  int max_iterations = 100;

  friend bool operator==(const GlmOptions&, const GlmOptions&) = default;
};

struct GlmFit {
  Eigen::VectorXd beta;
  Eigen::MatrixXd covariance;  // of beta, or of (beta, alpha) when has_alpha
  double log_likelihood = 0.0;
  double deviance = 0.0;
  std::size_t n_obs = 0;
  bool converged = false;
  int iterations = 0;
  bool has_alpha = false;
  double alpha = std::numeric_limits<double>::quiet_NaN();
  double alpha_se = std::numeric_limits<double>::quiet_NaN();
  bool alpha_flat = false;
};

inline Eigen::MatrixXd design_matrix(std::span<const RegretRecord> records) {
  if (records.empty()) throw Error(ErrorCode::kInvalidArgument, "no records");
  const std::size_t p = records.front().features.size();
  Eigen::MatrixXd x(static_cast<Eigen::Index>(records.size()), static_cast<Eigen::Index>(p));
  for (std::size_t r = 0; r < records.size(); ++r) {
    if (records[r].features.size() != p) throw Error(ErrorCode::kInvalidArgument, "ragged feature rows");
    for (std::size_t c = 0; c < p; ++c) x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = records[r].features[c];
  }
  return x;
}

namespace detail {

inline void require_full_rank(const Eigen::MatrixXd& x) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  qr.setThreshold(1e-10);
  if (qr.rank() < x.cols()) {
    throw Error(ErrorCode::kSingularDesign, "design matrix has rank " + std::to_string(qr.rank()) + " < " +
                                                std::to_string(x.cols()));
  }
}

inline double gamma_deviance(const Eigen::VectorXd& y, const Eigen::VectorXd& eta) {
  double d = 0.0;
  for (Eigen::Index k = 0; k < y.size(); ++k) {
    const double mu = 1.0 / eta[k];
    d += -std::log(y[k] / mu) + (y[k] - mu) / mu;
  }
  return 2.0 * d;
}

}  // namespace detail

// Exponential (Gamma, shape 1) regression with canonical inverse link: E[y] = 1 / (x . beta).
// IRLS with step-halving that keeps every linear predictor above eta_min.
inline GlmFit fit_gamma_glm(const Eigen::MatrixXd& x, Eigen::VectorXd y, const GlmOptions& opt = {}) {
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  if (n < p + 5) throw Error(ErrorCode::kInvalidArgument, "need at least dim(beta) + 5 records");
  detail::require_full_rank(x);
  for (Eigen::Index k = 0; k < n; ++k) y[k] = std::max(y[k], opt.epsilon_min);

  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  Eigen::VectorXd beta = qr.solve(Eigen::VectorXd::Constant(n, 1.0 / y.mean()));
  Eigen::VectorXd eta = x * beta;
  if (eta.minCoeff() <= opt.eta_min) throw Error(ErrorCode::kNonPositiveEta, "no feasible starting point");

  GlmFit fit;
  fit.n_obs = static_cast<std::size_t>(n);
  double dev = detail::gamma_deviance(y, eta);
  Eigen::MatrixXd xtwx(p, p);
  for (int it = 1; it <= opt.max_iterations; ++it) {
    fit.iterations = it;
    const Eigen::VectorXd mu = eta.cwiseInverse();
    const Eigen::VectorXd w = mu.cwiseProduct(mu);
    xtwx = x.transpose() * w.asDiagonal() * x;
    // X'Wz with z = eta - (y - mu) / mu^2 simplifies to X'(2 mu - y).
    const Eigen::VectorXd rhs = x.transpose() * (2.0 * mu - y);
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(xtwx);
    if (ldlt.info() != Eigen::Success) throw Error(ErrorCode::kSingularDesign, "weighted normal equations singular");
    const Eigen::VectorXd step = ldlt.solve(rhs) - beta;

    double t = 1.0;
    Eigen::VectorXd next_beta, next_eta;
    double next_dev = 0.0;
    bool accepted = false;
    for (int h = 0; h < 40; ++h, t *= 0.5) {
      next_beta = beta + t * step;
      next_eta = x * next_beta;
      if (next_eta.minCoeff() <= opt.eta_min) continue;
      next_dev = detail::gamma_deviance(y, next_eta);
      if (next_dev <= dev + 1e-12 * std::abs(dev)) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      if ((x * (beta + step)).minCoeff() <= opt.eta_min && t < 1e-11) {
        throw Error(ErrorCode::kNonPositiveEta, "step-halving cannot keep x . beta above eta_min");
      }
      fit.converged = true;  // no ascent direction left
      break;
    }
    const double change = std::abs(next_dev - dev) / (std::abs(next_dev) + 0.1);
    beta = next_beta;
    eta = next_eta;
    dev = next_dev;
    if (change < opt.tolerance) {
      fit.converged = true;
      break;
    }
  }
  const Eigen::VectorXd mu = eta.cwiseInverse();
  xtwx = x.transpose() * mu.cwiseProduct(mu).asDiagonal() * x;
  fit.beta = beta;
  fit.covariance = xtwx.inverse();
  fit.deviance = dev;
  fit.log_likelihood = (eta.array().log() - eta.array() * y.array()).sum();
  return fit;
}

inline GlmFit fit_gamma_glm(std::span<const RegretRecord> records, const GlmOptions& opt = {}) {
  const Eigen::MatrixXd x = design_matrix(records);
  Eigen::VectorXd y(x.rows());
  for (std::size_t r = 0; r < records.size(); ++r) y[static_cast<Eigen::Index>(r)] = records[r].epsilon;
  return fit_gamma_glm(x, std::move(y), opt);
}

struct AlphaObservation {
  double p_level0 = 0.0;
  double p_level1 = 0.0;
};

struct AlphaFit {
  double alpha = 0.5;
  double log_likelihood = 0.0;
  bool flat = false;
  int iterations = 0;
};

inline constexpr double kProbabilityFloor = 1e-12;

inline double alpha_log_likelihood(std::span<const AlphaObservation> obs, double alpha) {
  double l = 0.0;
  for (const auto& o : obs) {
    const double p0 = std::max(o.p_level0, kProbabilityFloor);
    const double p1 = std::max(o.p_level1, kProbabilityFloor);
    l += std::log(alpha * p0 + (1.0 - alpha) * p1);
  }
  return l;
}

// Maximizes sum ln(alpha p0 + (1 - alpha) p1) over [0, 1] by projected gradient ascent with a
// curvature-scaled step. The objective is concave in alpha.
inline AlphaFit estimate_alpha(std::span<const AlphaObservation> obs, double tolerance = 1e-12,
                               int max_iterations = 500) {
  AlphaFit fit;
  bool flat = true;
  for (const auto& o : obs) {
    if (std::abs(std::max(o.p_level0, kProbabilityFloor) - std::max(o.p_level1, kProbabilityFloor)) > 1e-12) {
      flat = false;
      break;
    }
  }
  if (flat) {
    fit.flat = true;
    fit.log_likelihood = alpha_log_likelihood(obs, fit.alpha);
    return fit;
  }
  double alpha = 0.5;
  double value = alpha_log_likelihood(obs, alpha);
  for (int it = 1; it <= max_iterations; ++it) {
    fit.iterations = it;
    double g = 0.0, h = 0.0;
    for (const auto& o : obs) {
      const double p0 = std::max(o.p_level0, kProbabilityFloor);
      const double p1 = std::max(o.p_level1, kProbabilityFloor);
      const double d = (p0 - p1) / (alpha * p0 + (1.0 - alpha) * p1);
      g += d;
      h -= d * d;
    }
    if ((alpha <= 0.0 && g <= 0.0) || (alpha >= 1.0 && g >= 0.0)) break;
    double step = h < 0.0 ? -g / h : g;
    double next = std::clamp(alpha + step, 0.0, 1.0);
    double next_value = alpha_log_likelihood(obs, next);
    for (int k = 0; k < 60 && next_value < value; ++k) {
      step *= 0.5;
      next = std::clamp(alpha + step, 0.0, 1.0);
      next_value = alpha_log_likelihood(obs, next);
    }
    if (next_value < value) break;
    const double moved = std::abs(next - alpha);
    alpha = next;
    value = next_value;
    if (moved < tolerance) break;
  }
  fit.alpha = alpha;
  fit.log_likelihood = value;
  return fit;
}

// Exhaustive search on a uniform grid over [0, 1]; first maximizer wins.
inline double alpha_grid_search(std::span<const AlphaObservation> obs, double resolution = 1e-3) {
  const int steps = static_cast<int>(std::lround(1.0 / resolution));
  double best_alpha = 0.0;
  double best = -std::numeric_limits<double>::infinity();
  for (int k = 0; k <= steps; ++k) {
    const double a = static_cast<double>(k) / steps;
    const double v = alpha_log_likelihood(obs, a);
    if (v > best) {
      best = v;
      best_alpha = a;
    }
  }
  return best_alpha;
}

struct ChoiceOptions {
  double eta_min = 1e-4;
  double lambda_start = 10.0;
  double tolerance = 1e-10;  // Newton decrement per barrier stage
  int max_iterations = 200;

  friend bool operator==(const ChoiceOptions&, const ChoiceOptions&) = default;
};

namespace detail {

struct ChoiceState {
  double log_likelihood = 0.0;
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;  // of the log-likelihood
  bool feasible = true;
};

// Log-likelihood, gradient and Hessian over theta = beta (plus alpha last when mixture).
inline ChoiceState choice_state(std::span<const RegretRecord> recs, const Eigen::MatrixXd& x,
                                const Eigen::VectorXd& theta, bool mixture, double eta_min, bool derivatives) {
  const Eigen::Index p = x.cols();
  const Eigen::Index dim = theta.size();
  ChoiceState s;
  s.grad = Eigen::VectorXd::Zero(dim);
  s.hess = Eigen::MatrixXd::Zero(dim, dim);
  const Eigen::VectorXd lambda = x * theta.head(p);
  // small tolerance so that steps landing exactly on the boundary stay feasible
  if (lambda.minCoeff() < eta_min - 1e-9 * std::max(1.0, eta_min)) {
    s.feasible = false;
    return s;
  }
  const double alpha = mixture ? theta[p] : 0.0;
  for (std::size_t r = 0; r < recs.size(); ++r) {
    const Eigen::Index k = static_cast<Eigen::Index>(r);
    const LogitMoments m1 = logit_moments(recs[r].action_regrets, recs[r].observed_action, lambda[k]);
    if (!mixture) {
      s.log_likelihood += m1.log_prob;
      if (derivatives) {
        s.grad.noalias() += m1.grad * x.row(k).transpose();
        s.hess.noalias() -= m1.var * x.row(k).transpose() * x.row(k);
      }
      continue;
    }
    const LogitMoments m0 = logit_moments(recs[r].level0_regrets, recs[r].observed_action, lambda[k]);
    const double f = std::max(alpha * m0.prob + (1.0 - alpha) * m1.prob, std::numeric_limits<double>::min());
    s.log_likelihood += std::log(f);
    if (!derivatives) continue;
    const double g = (alpha * m0.prob * m0.grad + (1.0 - alpha) * m1.prob * m1.grad) / f;
    const double hll = (alpha * m0.prob * (m0.grad * m0.grad - m0.var) +
                        (1.0 - alpha) * m1.prob * (m1.grad * m1.grad - m1.var)) / f - g * g;
    const double ga = (m0.prob - m1.prob) / f;
    const double hla = (m0.prob * m0.grad - m1.prob * m1.grad) / f - g * ga;
    s.grad.head(p).noalias() += g * x.row(k).transpose();
    s.grad[p] += ga;
    s.hess.topLeftCorner(p, p).noalias() += hll * x.row(k).transpose() * x.row(k);
    s.hess.col(p).head(p).noalias() += hla * x.row(k).transpose();
    s.hess(p, p) -= ga * ga;
  }
  if (mixture && derivatives) s.hess.row(p).head(p) = s.hess.col(p).head(p).transpose();
  return s;
}

}  // namespace detail

// Maximum-likelihood precision for the logit choice rule pi(a) proportional to exp(-lambda r(a))
// with lambda = x . beta. With `mixture` the QL1 likelihood
// alpha pi(a | level-0 regrets) + (1 - alpha) pi(a | level-1 regrets) is maximized jointly in
// (beta, alpha) by damped Newton; alpha is then refined by estimate_alpha at the fitted beta.
inline GlmFit fit_choice_precision(std::span<const RegretRecord> records, bool mixture, const ChoiceOptions& opt = {}) {
  const Eigen::MatrixXd x = design_matrix(records);
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  if (n < p + 5) throw Error(ErrorCode::kInvalidArgument, "need at least dim(beta) + 5 records");
  detail::require_full_rank(x);
  if (mixture) {
    for (const auto& r : records) {
      if (r.level0_regrets.size() != r.action_regrets.size()) {
        throw Error(ErrorCode::kInvalidArgument, "mixture fit needs level-0 regrets on every record");
      }
    }
  }

  const Eigen::Index dim = p + (mixture ? 1 : 0);
  Eigen::VectorXd theta(dim);
  theta.head(p) = Eigen::ColPivHouseholderQR<Eigen::MatrixXd>(x).solve(Eigen::VectorXd::Constant(n, opt.lambda_start));
  if (mixture) theta[p] = 0.5;

  // Linear constraints a . theta >= b: lambda >= eta_min on every record, alpha in [0, 1].
  const Eigen::Index m = n + (mixture ? 2 : 0);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, dim);
  Eigen::VectorXd b = Eigen::VectorXd::Constant(m, opt.eta_min);
  a.topLeftCorner(n, p) = x;
  if (mixture) {
    a(n, p) = 1.0;
    b[n] = 0.0;
    a(n + 1, p) = -1.0;
    b[n + 1] = -1.0;
  }
  if ((a * theta - b).minCoeff() <= 0.0) throw Error(ErrorCode::kNonPositiveEta, "no feasible starting point");

  // Log-barrier Newton: maximize lnL + mu sum log(slack) for a decreasing mu. The optimum may sit
  // on the positivity boundary (misspecified models), where many constraints bind at once.
  GlmFit fit;
  fit.n_obs = static_cast<std::size_t>(n);
  fit.has_alpha = mixture;
  fit.converged = true;
  detail::ChoiceState state = detail::choice_state(records, x, theta, mixture, opt.eta_min, true);
  auto barrier = [&](const Eigen::VectorXd& th, double mu) {
    const Eigen::VectorXd slack = a * th - b;
    if (slack.minCoeff() <= 0.0) return -std::numeric_limits<double>::infinity();
    return mu * slack.array().log().sum();
  };
  for (double mu : {1e-2, 1e-5, 1e-8, 1e-11}) {
    bool stage_done = false;
    for (int it = 0; it < opt.max_iterations; ++it) {
      ++fit.iterations;
      const Eigen::VectorXd slack = a * theta - b;
      const Eigen::VectorXd inv = slack.cwiseInverse();
      const Eigen::VectorXd g = state.grad + mu * a.transpose() * inv;
      const Eigen::MatrixXd neg_h = -state.hess + mu * a.transpose() * inv.cwiseAbs2().asDiagonal() * a;
      Eigen::VectorXd step;
      Eigen::LDLT<Eigen::MatrixXd> ldlt(neg_h);
      if (ldlt.info() == Eigen::Success && ldlt.isPositive() && (ldlt.vectorD().array() > 0.0).all()) {
        step = ldlt.solve(g);
      } else {
        // Mixture curvature can be indefinite away from the optimum. Shift the spectrum until it is
        // positive definite; a plain gradient step crawls once the barrier terms dominate the scale.
        const double scale = neg_h.diagonal().cwiseAbs().maxCoeff();
        if (!(scale > 0.0)) throw Error(ErrorCode::kSingularDesign, "no variation in choice regrets");
        const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(dim, dim);
        for (double tau = 1e-10 * scale;; tau *= 10.0) {
          Eigen::LLT<Eigen::MatrixXd> llt(neg_h + tau * eye);
          if (llt.info() == Eigen::Success) {
            step = llt.solve(g);
            break;
          }
          if (tau > 1e3 * scale) {
            step = g / scale;
            break;
          }
        }
      }
      const double decrement = g.dot(step);
      if (decrement < opt.tolerance) {
        stage_done = true;
        break;
      }
      // Stay strictly inside: at most 99% of the way to the nearest constraint.
      double t = 1.0;
      const Eigen::VectorXd rate = a * step;
      for (Eigen::Index j = 0; j < m; ++j) {
        if (rate[j] < 0.0) t = std::min(t, 0.99 * slack[j] / -rate[j]);
      }
      const double current = state.log_likelihood + barrier(theta, mu);
      bool accepted = false;
      for (int h = 0; h < 60; ++h, t *= 0.5) {
        const Eigen::VectorXd cand = theta + t * step;
        const double bar = barrier(cand, mu);
        if (!std::isfinite(bar)) continue;
        const auto trial = detail::choice_state(records, x, cand, mixture, opt.eta_min, false);
        if (!trial.feasible) continue;
        if (trial.log_likelihood + bar >= current + 1e-4 * t * decrement) {
          theta = cand;
          accepted = true;
          break;
        }
      }
      if (!accepted) {
        // No ascent left at floating-point resolution.
        stage_done = decrement < 1e-6 * (1.0 + std::abs(state.log_likelihood));
        break;
      }
      state = detail::choice_state(records, x, theta, mixture, opt.eta_min, true);
    }
    if (!stage_done) fit.converged = false;
  }

  const Eigen::MatrixXd info = -state.hess;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(info);
  if (!lu.isInvertible()) throw Error(ErrorCode::kSingularDesign, "information matrix is singular");
  const Eigen::MatrixXd cov = lu.inverse();
  fit.beta = theta.head(p);
  fit.covariance = cov;
  fit.log_likelihood = state.log_likelihood;
  if (mixture) {
    std::vector<AlphaObservation> obs;
    obs.reserve(records.size());
    const Eigen::VectorXd lambda = x * fit.beta;
    for (std::size_t r = 0; r < records.size(); ++r) {
      const double l = lambda[static_cast<Eigen::Index>(r)];
      obs.push_back({logit_moments(records[r].level0_regrets, records[r].observed_action, l).prob,
                     logit_moments(records[r].action_regrets, records[r].observed_action, l).prob});
    }
    const AlphaFit a = estimate_alpha(obs);
    fit.alpha = a.alpha;
    fit.alpha_flat = a.flat;
    fit.alpha_se = std::sqrt(std::max(cov(p, p), 0.0));
    theta[p] = a.alpha;
    fit.log_likelihood = detail::choice_state(records, x, theta, true, opt.eta_min, false).log_likelihood;
  }
  return fit;
}

// --- model-level wrappers -----------------------------------------------------------------------

enum class Likelihood { kChoice, kGamma };

inline std::string_view to_string(Likelihood l) { return l == Likelihood::kChoice ? "choice" : "gamma"; }

inline Likelihood parse_likelihood(std::string_view s) {
  if (s == "choice") return Likelihood::kChoice;
  if (s == "gamma") return Likelihood::kGamma;
  throw Error(ErrorCode::kInvalidArgument, "unknown likelihood '" + std::string(s) + "'");
}

struct EstimationOptions {
  Likelihood likelihood = Likelihood::kChoice;
  GlmOptions glm;
  ChoiceOptions choice;

  friend bool operator==(const EstimationOptions&, const EstimationOptions&) = default;
};

inline std::vector<RegretRecord> level1_only(std::span<const RegretRecord> records) {
  std::vector<RegretRecord> out;
  for (const auto& r : records) {
    if (r.level == 1) out.push_back(r);
  }
  return out;
}

// Fits the precision coefficients (and alpha for QL1) on level-1 records.
inline GlmFit fit_model(std::span<const RegretRecord> level1, const BehaviorModel& model,
                        const EstimationOptions& opt = {}) {
  const bool mixture = model.metamodel == Metamodel::kQL1;
  if (opt.likelihood == Likelihood::kChoice) return fit_choice_precision(level1, mixture, opt.choice);
  GlmFit fit = fit_gamma_glm(level1, opt.glm);
  if (mixture) {
    std::vector<AlphaObservation> obs;
    for (const auto& r : level1) {
      double l = 0.0;
      for (std::size_t c = 0; c < r.features.size(); ++c) l += fit.beta[static_cast<Eigen::Index>(c)] * r.features[c];
      l = std::max(l, opt.glm.eta_min);
      obs.push_back({logit_moments(r.level0_regrets, r.observed_action, l).prob,
                     logit_moments(r.action_regrets, r.observed_action, l).prob});
    }
    const AlphaFit a = estimate_alpha(obs);
    fit.has_alpha = true;
    fit.alpha = a.alpha;
    fit.alpha_flat = a.flat;
  }
  return fit;
}

struct LambdaPrediction {
  double lambda = 0.0;
  double se = 0.0;
  double inverse = 0.0;     // 1 / lambda, the expected regret
  double inverse_se = 0.0;
  bool clamped = false;     // x . beta fell below eta_min; callers exclude it from averages
};

inline LambdaPrediction predict_lambda(const GlmFit& fit, std::span<const double> x, double eta_min = 1e-4) {
  const auto p = fit.beta.size();
  if (static_cast<Eigen::Index>(x.size()) != p) throw Error(ErrorCode::kInvalidArgument, "feature length mismatch");
  Eigen::VectorXd v(p);
  for (Eigen::Index c = 0; c < p; ++c) v[c] = x[static_cast<std::size_t>(c)];
  LambdaPrediction out;
  out.lambda = fit.beta.dot(v);
  out.se = std::sqrt(std::max(0.0, v.dot(fit.covariance.topLeftCorner(p, p) * v)));
  if (out.lambda <= eta_min) {
    out.lambda = eta_min;
    out.clamped = true;
  }
  out.inverse = 1.0 / out.lambda;
  out.inverse_se = out.se / (out.lambda * out.lambda);
  return out;
}

inline double model_aic(double log_likelihood, std::size_t k) {
  return 2.0 * static_cast<double>(k) - 2.0 * log_likelihood;
}

inline double model_aic(const GlmFit& fit, const BehaviorModel& model) {
  return model_aic(fit.log_likelihood, static_cast<std::size_t>(fit.beta.size()) + model.extra_parameters());
}

// Choice log-likelihood of records under a fitted model.
inline double choice_log_likelihood(std::span<const RegretRecord> level1, const GlmFit& fit, const BehaviorModel& model,
                                    double eta_min = 1e-4) {
  const bool mixture = model.metamodel == Metamodel::kQL1;
  double total = 0.0;
  for (const auto& r : level1) {
    const double l = predict_lambda(fit, r.features, eta_min).lambda;
    total += choice_log_prob(r, l, mixture ? fit.alpha : 0.0, mixture);
  }
  return total;
}

struct GameRecords {
  std::string game_id;
  std::vector<RegretRecord> records;  // level 1
};

struct PredictiveResult {
  double mean = 0.0;
  double std = 0.0;
  int runs = 0;
  int failed_runs = 0;
  std::vector<double> per_run;
  std::vector<std::string> failures;
};

inline constexpr std::size_t kMinPredictiveGames = 40;

// Repeated random subsampling: per run, fit on a `split` share of games and score the observed
// level-1 actions of the rest. Games are ordered by id first so results ignore input order.
inline PredictiveResult evaluate_predictive(std::vector<GameRecords> games, const BehaviorModel& model, double split,
                                            int runs, std::uint64_t seed, const EstimationOptions& opt = {}) {
  if (!(split > 0.0 && split < 1.0)) throw Error(ErrorCode::kInvalidSplit, "split must lie strictly inside (0, 1)");
  if (runs < 1) throw Error(ErrorCode::kInvalidSplit, "at least one run required");
  if (games.size() < kMinPredictiveGames) {
    throw Error(ErrorCode::kInvalidArgument, "predictive evaluation needs at least 40 games");
  }
  std::sort(games.begin(), games.end(), [](const auto& a, const auto& b) { return a.game_id < b.game_id; });
  const std::size_t n_train = static_cast<std::size_t>(std::llround(split * static_cast<double>(games.size())));
  if (n_train == 0 || n_train >= games.size()) throw Error(ErrorCode::kInvalidSplit, "split leaves an empty side");

  PredictiveResult out;
  out.runs = runs;
  std::vector<std::size_t> order(games.size());
  for (int run = 0; run < runs; ++run) {
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(run)}));
    for (std::size_t k = order.size() - 1; k > 0; --k) {
      std::uniform_int_distribution<std::size_t> pick(0, k);
      std::swap(order[k], order[pick(rng)]);
    }
    std::sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    std::sort(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
    std::vector<RegretRecord> train, test;
    for (std::size_t k = 0; k < order.size(); ++k) {
      auto& dst = k < n_train ? train : test;
      const auto& src = games[order[k]].records;
      dst.insert(dst.end(), src.begin(), src.end());
    }
    try {
      const GlmFit fit = fit_model(train, model, opt);
      out.per_run.push_back(choice_log_likelihood(test, fit, model, opt.choice.eta_min));
    } catch (const Error& e) {
      ++out.failed_runs;
      out.failures.push_back("run " + std::to_string(run) + ": " + e.what());
    }
  }
  if (!out.per_run.empty()) {
    const double n = static_cast<double>(out.per_run.size());
    out.mean = std::accumulate(out.per_run.begin(), out.per_run.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : out.per_run) ss += (v - out.mean) * (v - out.mean);
    out.std = out.per_run.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  } else {
    out.mean = out.std = std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

}  // namespace hgame
