#include <gtest/gtest.h>

#include <sstream>

#include "helpers.hpp"

using namespace hgame;

namespace {

std::vector<ScenarioRecord> dataset(const std::string& model, std::size_t n, std::uint64_t seed) {
  RunConfig c;
  c.generate.model = model;
  c.generate.n_games = n;
  c.generate.seed = seed;
  return generate_synthetic(c.synthetic_spec(), c.setup).records;
}

std::string csv(const EvaluationReport& r) {
  std::ostringstream out;
  write_report_csv(out, r);
  return out.str();
}

}  // namespace

TEST(Pipeline, TrueModelHasTheLowestAic) {
  for (const char* key : {"QL0:MM:MM:S1", "PNE-QE:BR:S1B"}) {
    const auto data = dataset(key, 500, 3);
    RunConfig cfg;
    const EvaluationReport report = evaluate_models(data, cfg, false);
    ASSERT_EQ(report.rows.size(), 25u);
    EXPECT_EQ(report.rows.front().model_key, parse_model(key).key()) << csv(report);
    for (std::size_t k = 1; k < report.rows.size(); ++k) {
      if (std::isfinite(report.rows[k].aic)) { EXPECT_LE(report.rows[k - 1].aic, report.rows[k].aic); }
    }
    for (const auto& row : report.rows) {
      EXPECT_EQ(row.status, "OK") << row.model_key << " " << row.message;
      EXPECT_EQ(row.n_games, report.common_games);
    }
  }
}

TEST(Pipeline, UnknownModelsGetTheirOwnRow) {
  const auto data = dataset("QL0:BR:BR:S1", 60, 1);
  RunConfig cfg;
  cfg.models = {"QL0:BR:BR:S1", "QL7:XX", "QL0:BR:S1"};
  const EvaluationReport report = evaluate_models(data, cfg, false);
  ASSERT_EQ(report.rows.size(), 2u);
  EXPECT_EQ(report.rows[0].model_key, "QL0:BR:BR:S1");
  EXPECT_EQ(report.rows[0].status, "OK");
  EXPECT_EQ(report.rows[1].model_key, "QL7:XX");
  EXPECT_EQ(report.rows[1].status, "UNKNOWN_MODEL");
  EXPECT_TRUE(std::isnan(report.rows[1].aic));
}

TEST(Pipeline, OutputDoesNotDependOnThreadsOrReruns) {
  const auto data = dataset("QL1:BR:MM:S1B", 120, 5);
  RunConfig cfg;
  cfg.models = {"QL1:BR:MM:S1B", "QL0:BR:BR:S1G", "PNE-QE:MM:S1B", "PNE-QE:BR:S1B"};
  cfg.runs = 4;
  const std::string one = csv(evaluate_models(data, cfg, true));
  EXPECT_EQ(csv(evaluate_models(data, cfg, true)), one);
  cfg.threads = 3;
  EXPECT_EQ(csv(evaluate_models(data, cfg, true)), one);
  EXPECT_NE(one.find("PNE-QE:MM:S1B,"), std::string::npos);
}

TEST(Pipeline, PredictiveColumnsAreFilled) {
  const auto data = dataset("QL0:BR:BR:S1", 80, 2);
  RunConfig cfg;
  cfg.models = {"QL0:BR:BR:S1"};
  cfg.runs = 5;
  const EvaluationReport report = evaluate_models(data, cfg, true);
  ASSERT_EQ(report.rows.size(), 1u);
  const ModelReport& r = report.rows[0];
  EXPECT_EQ(r.runs + r.failed_runs, 5);
  EXPECT_TRUE(std::isfinite(r.test_ll_mean));
  EXPECT_LE(r.test_ll_mean, 0.0);
  EXPECT_GE(r.test_ll_std, 0.0);
  const EvaluationReport no_pred = evaluate_models(data, cfg, false);
  EXPECT_TRUE(std::isnan(no_pred.rows[0].test_ll_mean));
  EXPECT_EQ(no_pred.rows[0].aic, r.aic);
}
