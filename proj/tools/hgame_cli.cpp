#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "hgame/hgame.hpp"

namespace fs = std::filesystem;
using namespace hgame;

namespace {

enum Exit { kOk = 0, kIo = 1, kConfig = 2, kInternal = 3 };

struct Flags {
  std::string config;
  std::string models;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::string out;
  std::string input;
  bool dump_config = false;
};

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("hgame");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::info);
  if (const char* env = std::getenv("QR_LOG")) {
    const auto level = spdlog::level::from_str(env);
    // from_str maps unknown names to off
    if (level != spdlog::level::off || std::string(env) == "off") spdlog::set_level(level);
    else spdlog::warn("QR_LOG='{}' not recognised, keeping info", env);
  }
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

RunConfig resolve(const Flags& f) {
  RunConfig cfg = f.config.empty() ? RunConfig{} : load_config(f.config);
  if (!f.models.empty()) cfg.models = split_list(f.models);
  if (f.seed) {
    cfg.seed = *f.seed;
    cfg.generate.seed = *f.seed;
  }
  if (f.threads) cfg.threads = *f.threads;
  if (!f.out.empty()) cfg.output_dir = f.out;
  if (!f.input.empty()) cfg.input = f.input;
  cfg.validate();
  return cfg;
}

fs::path prepare_output(const RunConfig& cfg) {
  const fs::path dir(cfg.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output dir " + dir.string() + ": " + ec.message());
  const fs::path probe = dir / ".write_probe";
  {
    std::ofstream test(probe);
    if (!test) throw IoError("output dir " + dir.string() + " is not writable");
  }
  fs::remove(probe, ec);
  return dir;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw IoError("cannot write " + p.string());
  return out;
}

void finish(std::ofstream& out, const fs::path& p) {
  out.flush();
  if (!out) throw IoError("write failed for " + p.string());
  spdlog::info("wrote {}", p.string());
}

std::vector<ScenarioRecord> load_dataset(const RunConfig& cfg) {
  if (cfg.input.empty()) throw Error(ErrorCode::kInvalidArgument, "no input dataset (set input or pass --input)");
  ParseResult parsed = parse_scenarios(fs::path(cfg.input), cfg.strict_parse);
  for (const auto& issue : parsed.issues) spdlog::warn("skipped line {}: {}", issue.line, issue.message);
  for (const auto& r : parsed.records) validate_record(r, cfg.setup.rules);
  spdlog::info("loaded {} games from {}", parsed.records.size(), cfg.input);
  return std::move(parsed.records);
}

std::vector<BehaviorModel> requested_models(const RunConfig& cfg) {
  std::vector<BehaviorModel> out;
  for (const auto& key : cfg.model_keys()) {
    if (auto m = find_model(key)) out.push_back(*m);
    else spdlog::warn("unknown model key '{}' skipped", key);
  }
  return out;
}

int cmd_generate(RunConfig cfg) {
  if (!cfg.models.empty()) {
    if (cfg.models.size() != 1) throw Error(ErrorCode::kInvalidArgument, "generate takes a single model key");
    cfg.generate.model = cfg.models.front();
  }
  const SyntheticSpec spec = cfg.synthetic_spec();
  const fs::path dir = prepare_output(cfg);
  spdlog::info("generating {} games under {} (seed {})", spec.n_games, spec.model.key(), spec.seed);
  const SyntheticDataset data = generate_synthetic(spec, cfg.setup);

  const fs::path dataset = dir / "dataset.jsonl";
  auto out = open_out(dataset);
  write_scenarios(out, data.records);
  finish(out, dataset);

  nlohmann::json manifest = {{"dataset", dataset.filename().string()},
                             {"schema_version", kSchemaVersion},
                             {"model", spec.model.key()},
                             {"seed", spec.seed},
                             {"n_games", data.records.size()},
                             {"decisions", data.decisions},
                             {"regenerated", data.regenerated},
                             {"infeasible_redrawn", data.infeasible},
                             {"config", to_json(cfg)}};
  const fs::path mpath = dir / "manifest.json";
  auto mout = open_out(mpath);
  mout << manifest.dump(2) << '\n';
  finish(mout, mpath);
  if (data.regenerated > 0) spdlog::info("{} draws without a pure equilibrium were redrawn", data.regenerated);
  if (data.infeasible > 0) spdlog::info("{} draws with an agent lacking any feasible maneuver were redrawn", data.infeasible);
  return kOk;
}

int cmd_solve(const RunConfig& cfg) {
  const auto data = load_dataset(cfg);
  const auto models = requested_models(cfg);
  const fs::path dir = prepare_output(cfg);
  std::vector<std::string> lines(data.size());
  std::vector<std::size_t> failures(data.size(), 0);
  parallel_for(data.size(), cfg.threads, [&](std::size_t k) {
    const ScenarioRecord& rec = data[k];
    std::string text;
    for (const auto& model : models) {
      nlohmann::json row;
      try {
        const HierarchicalGame game =
            build_record_game(rec.agents, rec.pedestrians, rec.game_id, model.scheme, cfg.setup);
        const HierarchicalSolution sol = solve_model(game, model, cfg.setup.propagation);
        row = solution_to_json(rec.game_id, game, sol, model);
      } catch (const Error& e) {
        row = {{"game_id", rec.game_id}, {"model", model.key()}, {"error", e.what()}};
        ++failures[k];
      }
      text += row.dump() + '\n';
    }
    lines[k] = std::move(text);
  });
  const fs::path p = dir / "solutions.jsonl";
  auto out = open_out(p);
  for (const auto& l : lines) out << l;
  finish(out, p);
  std::size_t failed = 0;
  for (auto f : failures) failed += f;
  if (failed > 0) spdlog::warn("{} game/model pairs could not be solved", failed);
  return kOk;
}

int write_report(const RunConfig& cfg, bool predictive, const std::string& stem) {
  const auto data = load_dataset(cfg);
  const fs::path dir = prepare_output(cfg);
  const EvaluationReport report = evaluate_models(data, cfg, predictive);
  spdlog::info("{} of {} games are usable by every model", report.common_games, report.n_games);
  for (const auto& r : report.rows) {
    if (r.status != "OK") spdlog::warn("{}: {} {}", r.model_key, r.status, r.message);
  }
  const fs::path csv = dir / (stem + ".csv");
  auto out = open_out(csv);
  write_report_csv(out, report);
  finish(out, csv);
  const fs::path js = dir / (stem + ".json");
  auto jout = open_out(js);
  jout << to_json(report).dump(2) << '\n';
  finish(jout, js);
  return kOk;
}

int cmd_sample_traj(const RunConfig& cfg) {
  const auto data = load_dataset(cfg);
  std::set<Scheme> schemes;
  if (cfg.models.empty()) schemes = {Scheme::kS1, Scheme::kBound, Scheme::kGauss};
  for (const auto& m : requested_models(cfg)) {
    if (!cfg.models.empty()) schemes.insert(m.scheme);
  }
  const fs::path dir = prepare_output(cfg);
  std::vector<std::string> chunks(data.size());
  parallel_for(data.size(), cfg.threads, [&](std::size_t k) {
    const ScenarioRecord& rec = data[k];
    std::string text;
    for (Scheme scheme : schemes) {
      HierarchicalGame game;
      try {
        game = build_record_game(rec.agents, rec.pedestrians, rec.game_id, scheme, cfg.setup);
      } catch (const Error& e) {
        spdlog::warn("{} {}: {}", rec.game_id, scheme_tag(scheme), e.what());
        continue;
      }
      for (std::size_t i = 0; i < game.num_agents(); ++i) {
        for (std::size_t m = 0; m < game.num_maneuvers(i); ++m) {
          for (std::size_t t = 0; t < game.num_trajectories(i, m); ++t) {
            for (const auto& p : game.trajectories[i][m][t].points) {
              text += rec.game_id + ',' + std::to_string(game.ids[i]) + ',' + game.maneuvers[i][m] + ',' +
                      std::to_string(t) + ',' + std::string(scheme_tag(scheme)) + ',' + format_number(p.t) + ',' +
                      format_number(p.x) + ',' + format_number(p.y) + ',' + format_number(p.v) + '\n';
            }
          }
        }
      }
    }
    chunks[k] = std::move(text);
  });
  const fs::path p = dir / "trajectories.csv";
  auto out = open_out(p);
  out << "game_id,agent_id,maneuver_id,trajectory,scheme_tag,t,x,y,v\n";
  for (const auto& c : chunks) out << c;
  finish(out, p);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Hierarchical driving games: generate, solve, estimate and evaluate behavior models"};
  app.require_subcommand(0, 1);
  app.fallthrough();
  Flags flags;
  app.add_option("--config", flags.config, "run configuration JSON");
  app.add_option("--models", flags.models, "comma separated model keys");
  app.add_option("--seed", flags.seed, "seed (overrides seed and generate.seed)");
  app.add_option("--threads", flags.threads, "worker cap")->check(CLI::PositiveNumber);
  app.add_option("--out", flags.out, "output directory");
  app.add_option("--input", flags.input, "dataset .jsonl");
  app.add_flag("--dump-config", flags.dump_config, "print the resolved config and exit");

  auto* generate = app.add_subcommand("generate", "synthetic dataset and manifest");
  auto* solve = app.add_subcommand("solve", "solve every game under the requested models");
  auto* estimate = app.add_subcommand("estimate", "fit precision (and alpha) per model");
  auto* evaluate = app.add_subcommand("evaluate", "fit, AIC and predictive log-likelihood per model");
  auto* sample = app.add_subcommand("sample-traj", "export sampled trajectories as CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    const RunConfig cfg = resolve(flags);
    if (flags.dump_config) {
      std::cout << to_json(cfg).dump(2) << '\n';
      return kOk;
    }
    if (*generate) return cmd_generate(cfg);
    if (*solve) return cmd_solve(cfg);
    if (*estimate) return write_report(cfg, false, "estimates");
    if (*evaluate) return write_report(cfg, true, "report");
    if (*sample) return cmd_sample_traj(cfg);
    std::cerr << app.help();
    return kConfig;
  } catch (const IoError& e) {
    spdlog::error("{}", e.what());
    return kIo;
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    if (e.code() == ErrorCode::kParseError || e.code() == ErrorCode::kSchemaViolation) return kIo;
    return kConfig;
  } catch (const std::exception& e) {
    spdlog::critical("internal error: {}", e.what());
    return kInternal;
  }
  return kInternal;
}
