#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "hgame/config.hpp"
#include "hgame/estimation.hpp"
#include "hgame/parallel.hpp"
#include "hgame/scenario_io.hpp"

namespace hgame {

// Level-1 regret records of one model over a dataset; per_game[k] is empty when game k cannot be
// explained by the model (no pure equilibrium, observed action missing, or the game failed to build).
struct ModelRecords {
  BehaviorModel model;
  std::vector<std::optional<std::vector<RegretRecord>>> per_game;
  std::size_t discarded_no_pne = 0;
  std::size_t skipped_missing = 0;
  std::size_t build_failures = 0;
};

// Builds every game once per scheme, solves level-2 games once per (scheme, level-2 rule), and
// extracts regret records for all models.
inline std::vector<ModelRecords> extract_records(std::span<const ScenarioRecord> data,
                                                 std::span<const BehaviorModel> models, const ModelSetup& setup,
                                                 const FeatureSpec& features, unsigned threads = 1) {
  enum class Outcome { kOk, kNoPne, kMissing, kBuild };
  struct Cell {
    Outcome outcome = Outcome::kOk;
    std::vector<RegretRecord> records;
  };
  std::vector<std::vector<Cell>> cells(data.size(), std::vector<Cell>(models.size()));
  std::set<Scheme> schemes;
  for (const auto& m : models) schemes.insert(m.scheme);

  parallel_for(data.size(), threads, [&](std::size_t k) {
    const ScenarioRecord& rec = data[k];
    const auto rows = game_features(features, rec.agents);
    for (Scheme scheme : schemes) {
      std::optional<HierarchicalGame> game;
      try {
        game = build_record_game(rec.agents, rec.pedestrians, rec.game_id, scheme, setup);
      } catch (const Error&) {
        for (std::size_t m = 0; m < models.size(); ++m) {
          if (models[m].scheme == scheme) cells[k][m].outcome = Outcome::kBuild;
        }
        continue;
      }
      std::map<ResponseKind, std::vector<LevelOutcome>> level2;
      for (std::size_t m = 0; m < models.size(); ++m) {
        const BehaviorModel& model = models[m];
        if (model.scheme != scheme) continue;
        const ResponseConcept c2 = model.level2_concept();
        auto it = level2.find(c2.kind);
        if (it == level2.end()) it = level2.emplace(c2.kind, solve_level2(*game, c2, setup.propagation)).first;
        Cell& cell = cells[k][m];
        try {
          const HierarchicalSolution sol =
              backward_induction(*game, it->second, c2, model.level1_concept(), setup.propagation);
          cell.records = compute_regrets(rec.game_id, *game, sol, rec.observed, model, rows,
                                         rec.trajectory_scheme == model.scheme);
        } catch (const Error& e) {
          if (e.code() == ErrorCode::kEmptyEquilibriumSet) cell.outcome = Outcome::kNoPne;
          else if (e.code() == ErrorCode::kObservedActionMissing) cell.outcome = Outcome::kMissing;
          else throw;
        }
      }
    }
  });

  std::vector<ModelRecords> out(models.size());
  for (std::size_t m = 0; m < models.size(); ++m) {
    out[m].model = models[m];
    out[m].per_game.resize(data.size());
    for (std::size_t k = 0; k < data.size(); ++k) {
      Cell& c = cells[k][m];
      switch (c.outcome) {
        case Outcome::kOk: out[m].per_game[k] = std::move(c.records); break;
        case Outcome::kNoPne: ++out[m].discarded_no_pne; break;
        case Outcome::kMissing: ++out[m].skipped_missing; break;
        case Outcome::kBuild: ++out[m].build_failures; break;
      }
    }
  }
  return out;
}

struct ModelReport {
  std::string model_key;
  std::string status = "OK";
  std::string message;
  std::size_t n_games = 0;
  std::size_t n_obs = 0;
  std::size_t k = 0;
  double log_likelihood = std::nan("");
  double aic = std::nan("");
  double lambda_mean = std::nan("");
  double lambda_se = std::nan("");
  double lambda_inv_mean = std::nan("");
  double lambda_inv_se = std::nan("");
  double alpha = std::nan("");
  double alpha_se = std::nan("");
  bool alpha_flat = false;
  bool converged = false;
  std::vector<double> beta;
  std::vector<double> beta_se;
  double test_ll_mean = std::nan("");
  double test_ll_std = std::nan("");
  int runs = 0;
  int failed_runs = 0;
  std::size_t discarded_no_pne = 0;
  std::size_t skipped_missing = 0;
  std::size_t build_failures = 0;
};

struct EvaluationReport {
  std::vector<ModelReport> rows;
  std::size_t n_games = 0;
  std::size_t common_games = 0;
  nlohmann::json config;
};

// Fits every requested model on the games all known models can explain, and optionally runs the
// repeated-subsampling predictive evaluation. Rows are sorted by AIC; failed rows follow in
// request order.
inline EvaluationReport evaluate_models(std::span<const ScenarioRecord> data, const RunConfig& cfg, bool predictive) {
  EvaluationReport report;
  report.config = to_json(cfg);
  report.n_games = data.size();

  std::vector<BehaviorModel> models;
  std::vector<ModelReport> unknown;
  for (const auto& key : cfg.model_keys()) {
    if (const auto m = find_model(key)) {
      if (std::find(models.begin(), models.end(), *m) == models.end()) models.push_back(*m);
    } else {
      ModelReport r;
      r.model_key = key;
      r.status = "UNKNOWN_MODEL";
      r.message = "no registered model with this key";
      unknown.push_back(r);
    }
  }

  const auto extracted = extract_records(data, models, cfg.setup, cfg.features, cfg.threads);
  std::vector<bool> common(data.size(), true);
  for (const auto& mr : extracted) {
    for (std::size_t k = 0; k < data.size(); ++k) {
      if (!mr.per_game[k]) common[k] = false;
    }
  }
  report.common_games = static_cast<std::size_t>(std::count(common.begin(), common.end(), true));

  std::vector<ModelReport> fitted(extracted.size());
  parallel_for(extracted.size(), cfg.threads, [&](std::size_t m) {
    const ModelRecords& mr = extracted[m];
    ModelReport& r = fitted[m];
    r.model_key = mr.model.key();
    r.discarded_no_pne = mr.discarded_no_pne;
    r.skipped_missing = mr.skipped_missing;
    r.build_failures = mr.build_failures;
    std::vector<GameRecords> games;
    std::vector<RegretRecord> all;
    for (std::size_t k = 0; k < data.size(); ++k) {
      if (!common[k]) continue;
      GameRecords g{data[k].game_id, level1_only(*mr.per_game[k])};
      all.insert(all.end(), g.records.begin(), g.records.end());
      games.push_back(std::move(g));
    }
    r.n_games = games.size();
    r.n_obs = all.size();
    try {
      const GlmFit fit = fit_model(all, mr.model, cfg.estimation);
      r.converged = fit.converged;
      r.k = static_cast<std::size_t>(fit.beta.size()) + mr.model.extra_parameters();
      r.log_likelihood = fit.log_likelihood;
      r.aic = model_aic(fit, mr.model);
      for (Eigen::Index c = 0; c < fit.beta.size(); ++c) {
        r.beta.push_back(fit.beta[c]);
        r.beta_se.push_back(std::sqrt(std::max(0.0, fit.covariance(c, c))));
      }
      std::vector<double> mean_x(r.beta.size(), 0.0);
      for (const auto& rec : all) {
        for (std::size_t c = 0; c < mean_x.size(); ++c) mean_x[c] += rec.features[c] / static_cast<double>(all.size());
      }
      const LambdaPrediction lp = predict_lambda(fit, mean_x, cfg.estimation.glm.eta_min);
      r.lambda_mean = lp.lambda;
      r.lambda_se = lp.se;
      r.lambda_inv_mean = lp.inverse;
      r.lambda_inv_se = lp.inverse_se;
      if (fit.has_alpha) {
        r.alpha = fit.alpha;
        r.alpha_se = fit.alpha_se;
        r.alpha_flat = fit.alpha_flat;
      }
      if (!fit.converged) r.status = "NOT_CONVERGED";
    } catch (const Error& e) {
      r.status = std::string("FIT_FAILED:") + std::string(to_string(e.code()));
      r.message = e.what();
      return;
    }
    if (!predictive) return;
    try {
      const PredictiveResult pr = evaluate_predictive(games, mr.model, cfg.split, cfg.runs, cfg.seed, cfg.estimation);
      r.test_ll_mean = pr.mean;
      r.test_ll_std = pr.std;
      r.runs = pr.runs;
      r.failed_runs = pr.failed_runs;
      if (pr.failed_runs > 0) r.message = pr.failures.front();
    } catch (const Error& e) {
      r.status = std::string("PREDICTIVE_FAILED:") + std::string(to_string(e.code()));
      r.message = e.what();
    }
  });

  std::stable_sort(fitted.begin(), fitted.end(), [](const ModelReport& a, const ModelReport& b) {
    const bool fa = std::isfinite(a.aic), fb = std::isfinite(b.aic);
    if (fa != fb) return fa;
    return fa && a.aic < b.aic;
  });
  report.rows = std::move(fitted);
  report.rows.insert(report.rows.end(), unknown.begin(), unknown.end());
  return report;
}

// --- output -------------------------------------------------------------------------------------

inline std::string format_number(double v) {
  if (std::isnan(v)) return "";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline void write_report_csv(std::ostream& out, const EvaluationReport& report) {
  out << "model_key,status,n_games,n_obs,k,log_likelihood,aic,lambda_mean,lambda_se,lambda_inv_mean,lambda_inv_se,"
         "alpha,alpha_se,test_ll_mean,test_ll_std,runs,failed_runs,discarded_no_pne,skipped_missing,build_failures,"
         "beta,message\n";
  for (const auto& r : report.rows) {
    std::string beta;
    for (std::size_t c = 0; c < r.beta.size(); ++c) beta += (c ? ";" : "") + format_number(r.beta[c]);
    out << r.model_key << ',' << r.status << ',' << r.n_games << ',' << r.n_obs << ',' << r.k << ','
        << format_number(r.log_likelihood) << ',' << format_number(r.aic) << ',' << format_number(r.lambda_mean) << ','
        << format_number(r.lambda_se) << ',' << format_number(r.lambda_inv_mean) << ','
        << format_number(r.lambda_inv_se) << ',' << format_number(r.alpha) << ',' << format_number(r.alpha_se) << ','
        << format_number(r.test_ll_mean) << ',' << format_number(r.test_ll_std) << ',' << r.runs << ','
        << r.failed_runs << ',' << r.discarded_no_pne << ',' << r.skipped_missing << ',' << r.build_failures << ','
        << beta << ',' << csv_escape(r.message) << '\n';
  }
}

inline nlohmann::json to_json(const ModelReport& r) {
  auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  return {{"model_key", r.model_key},
          {"status", r.status},
          {"message", r.message},
          {"n_games", r.n_games},
          {"n_obs", r.n_obs},
          {"k", r.k},
          {"log_likelihood", num(r.log_likelihood)},
          {"aic", num(r.aic)},
          {"lambda_mean", num(r.lambda_mean)},
          {"lambda_se", num(r.lambda_se)},
          {"lambda_inv_mean", num(r.lambda_inv_mean)},
          {"lambda_inv_se", num(r.lambda_inv_se)},
          {"alpha", num(r.alpha)},
          {"alpha_se", num(r.alpha_se)},
          {"alpha_flat", r.alpha_flat},
          {"converged", r.converged},
          {"beta", r.beta},
          {"beta_se", r.beta_se},
          {"test_ll_mean", num(r.test_ll_mean)},
          {"test_ll_std", num(r.test_ll_std)},
          {"runs", r.runs},
          {"failed_runs", r.failed_runs},
          {"discarded_no_pne", r.discarded_no_pne},
          {"skipped_missing", r.skipped_missing},
          {"build_failures", r.build_failures}};
}

inline nlohmann::json to_json(const EvaluationReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : report.rows) rows.push_back(to_json(r));
  return {{"n_games", report.n_games}, {"common_games", report.common_games}, {"models", rows}, {"config", report.config}};
}

// Solved-game export: tree shape, per-level solutions, values and concept tags.
inline nlohmann::json solution_to_json(const std::string& game_id, const HierarchicalGame& game,
                                       const HierarchicalSolution& sol, const BehaviorModel& model) {
  using nlohmann::json;
  json agents = json::array();
  for (std::size_t i = 0; i < game.num_agents(); ++i) {
    json traj = json::array();
    for (std::size_t m = 0; m < game.num_maneuvers(i); ++m) traj.push_back(game.num_trajectories(i, m));
    agents.push_back({{"id", game.ids[i]}, {"maneuvers", game.maneuvers[i]}, {"trajectories", traj}});
  }
  auto outcome = [](const LevelOutcome& o) {
    return json{{"responses", o.responses}, {"supports", o.supports}, {"values", o.values}};
  };
  json level2 = json::array();
  for (std::size_t r = 0; r < sol.level2.size(); ++r) {
    level2.push_back({{"root", r}, {"maneuvers", game.partial_strategy(r)}, {"solution", outcome(sol.level2[r])}});
  }
  json level1 = json::array();
  for (std::size_t k = 0; k < sol.level1.size(); ++k) {
    level1.push_back({{"combination", sol.combinations[k]}, {"solution", outcome(sol.level1[k])}});
  }
  return {{"game_id", game_id},
          {"model", model.key()},
          {"level1_concept", to_string(sol.level1_concept.kind)},
          {"level2_concept", to_string(sol.level2_concept.kind)},
          {"value_propagation", to_string(sol.propagation)},
          {"agents", agents},
          {"level2_roots", game.num_roots()},
          {"level2", level2},
          {"level1", level1},
          {"truncated", sol.truncated}};
}

}  // namespace hgame
