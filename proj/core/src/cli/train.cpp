#include "arena/cli/train.hpp"

#include <fstream>

#include "arena/cli/metrics.hpp"
#include "arena/common/format.hpp"

namespace arena::cli {

namespace {

void write_rounds(const std::filesystem::path& path, const std::vector<orch::RoundReport>& reports) {
  std::ofstream out(path, std::ios::trunc);
  out << "round,policy,episodes,mean_score,selection_score,steps,members_consistent\n";
  for (const auto& r : reports) {
    for (const auto& [policy, p] : r.policies) {
      const auto sel = schemes::selection_score(p.episode_returns);
      out << r.round << ',' << policy << ',' << p.episodes << ',' << format_double(p.mean_score) << ','
          << (sel ? format_double(*sel) : "") << ',' << r.steps << ',' << (r.members_consistent ? 1 : 0) << '\n';
    }
  }
  if (!out) throw IoError("cannot write " + path.string());
}

}  // namespace

TrainResult run_training(const RunConfig& config, const TrainOptions& options) {
  RunConfig effective = config;
  effective.transport = effective_transport(config, options.deterministic);
  const RunFiles files{options.output_dir.value_or(std::filesystem::path(config.output_dir))};
  effective.output_dir = files.root.string();

  std::filesystem::create_directories(files.root);
  std::filesystem::remove_all(files.checkpoints());
  std::filesystem::remove(files.lineage());
  {
    std::ofstream out(files.effective_config(), std::ios::trunc);
    out << effective_config_json(effective);
    if (!out) throw IoError("cannot write " + files.effective_config().string());
  }

  MetricsWriter metrics(files.metrics());
  orch::RunOptions run;
  run.seed = config.seed;
  run.transport = effective.transport;
  run.timeout_seconds = config.timeout_seconds;
  run.checkpoint_dir = files.checkpoints();
  run.update_log_every = config.update_log_every;
  run.on_row = [&metrics](const orch::MetricsRow& row) { metrics.write(row); };

  orch::Orchestrator orchestrator(build_plan(config), run);
  TrainResult result;
  result.output_dir = files.root;

  orch::RoundHooks hooks;
  if (config.schedule.kind == ScheduleKind::Evolution) {
    result.population.emplace();
    result.population->members = config.schedule.members;
    hooks = schemes::evolution_hooks(*result.population, orchestrator, files.lineage());
  }
  auto after = hooks.after;
  hooks.after = [&](const orch::RoundReport& report) {
    if (after) after(report);
    if (options.on_round) options.on_round(report);
  };

  result.reports = orchestrator.run_rounds(build_schedule(config), hooks);
  metrics.close();
  write_rounds(files.rounds(), result.reports);
  return result;
}

}  // namespace arena::cli
