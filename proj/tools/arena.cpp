#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "arena/cli/config.hpp"
#include "arena/cli/eval.hpp"
#include "arena/cli/metrics.hpp"
#include "arena/cli/plot.hpp"
#include "arena/cli/train.hpp"
#include "arena/common/format.hpp"
#include "arena/routing/plan.hpp"

namespace {

using namespace arena;

int cmd_plan(const std::string& config_path) {
  const auto config = cli::load_config(config_path);
  std::cout << routing::plan_summary(cli::build_plan(config));
  return 0;
}

int cmd_train(const std::string& config_path, bool deterministic, const std::string& output) {
  const auto config = cli::load_config(config_path);
  cli::TrainOptions options;
  options.deterministic = deterministic;
  if (!output.empty()) options.output_dir = output;
  options.on_round = [](const orch::RoundReport& r) {
    std::cout << "round " << r.round << ": " << r.steps << " steps";
    for (const auto& [policy, p] : r.policies)
      std::cout << ", " << policy << " " << format_double(p.mean_score) << " over " << p.episodes << " episodes";
    std::cout << std::endl;
  };
  const auto result = cli::run_training(config, options);
  std::cout << "wrote " << cli::RunFiles{result.output_dir}.metrics().string() << std::endl;
  return 0;
}

int cmd_eval(const std::string& config_path, std::string checkpoints, int episodes, std::uint64_t seed,
             std::size_t match, const std::string& trace, const std::string& targets) {
  const auto config = cli::load_config(config_path);
  cli::EvalOptions options;
  options.checkpoint_dir = checkpoints.empty() ? cli::RunFiles{config.output_dir}.checkpoints()
                                               : std::filesystem::path(checkpoints);
  options.episodes = episodes;
  options.seed = seed;
  options.match = match;
  options.trace_path = trace;
  options.targets_path = targets;
  const auto result = cli::evaluate(config, options);
  for (const auto& [policy, scores] : result.returns) {
    double sum = 0.0;
    for (double s : scores) sum += s;
    std::cout << policy << ": mean score " << format_double(sum / static_cast<double>(scores.size())) << " over "
              << scores.size() << " episodes" << std::endl;
  }
  if (!trace.empty()) std::cout << "wrote " << result.trace_rows << " trace rows to " << trace << std::endl;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-entity reinforcement learning arena"};
  app.require_subcommand(1);

  std::string config_path;
  auto* plan = app.add_subcommand("plan", "Print the process plan of a run configuration");
  plan->add_option("config", config_path, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);

  bool deterministic = false;
  std::string output;
  auto* train = app.add_subcommand("train", "Run every round of a configuration");
  train->add_option("config", config_path, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
  train->add_flag("--deterministic", deterministic, "Single-context transport with reproducible metrics");
  train->add_option("-o,--output", output, "Output directory (overrides the configuration)");

  std::string checkpoints, trace, targets;
  int episodes = 10;
  std::uint64_t seed = 0;
  std::size_t match = 0;
  auto* eval = app.add_subcommand("eval", "Roll out trained checkpoints and record traces");
  eval->add_option("config", config_path, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
  eval->add_option("--checkpoints", checkpoints, "Checkpoint directory (default: <output_dir>/checkpoints)");
  eval->add_option("-n,--episodes", episodes, "Episodes to roll out")->check(CLI::PositiveNumber);
  eval->add_option("--seed", seed, "Episode seed root");
  eval->add_option("--match", match, "Match entry to roll out");
  eval->add_option("--trace", trace, "Trace CSV (episode,t,entity,pos_x,pos_y,reward)");
  eval->add_option("--targets", targets, "Targets CSV (episode,target,pos_x,pos_y)");

  std::string input, plot_out, plot_targets;
  int plot_episode = 0;
  auto* plot = app.add_subcommand("plot", "Render SVG figures from run outputs");
  plot->require_subcommand(1);
  auto* scores = plot->add_subcommand("scores", "Episode score curves from a metrics CSV");
  scores->add_option("metrics", input, "Metrics CSV")->required()->check(CLI::ExistingFile);
  scores->add_option("-o,--output", plot_out, "SVG file")->required();
  auto* traces = plot->add_subcommand("trace", "Agent paths from an eval trace CSV");
  traces->add_option("trace", input, "Trace CSV")->required()->check(CLI::ExistingFile);
  traces->add_option("--targets", plot_targets, "Targets CSV");
  traces->add_option("--episode", plot_episode, "Episode to draw");
  traces->add_option("-o,--output", plot_out, "SVG file")->required();
  auto* lineage = plot->add_subcommand("lineage", "Population scores from a lineage CSV");
  lineage->add_option("lineage", input, "Lineage CSV")->required()->check(CLI::ExistingFile);
  lineage->add_option("-o,--output", plot_out, "SVG file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*plan) return cmd_plan(config_path);
    if (*train) return cmd_train(config_path, deterministic, output);
    if (*eval) return cmd_eval(config_path, checkpoints, episodes, seed, match, trace, targets);
    if (*scores) cli::write_svg(plot_out, cli::score_figure(cli::read_metrics(input)));
    if (*traces) cli::write_svg(plot_out, cli::trace_figure(input, plot_targets, plot_episode));
    if (*lineage) cli::write_svg(plot_out, cli::lineage_figure(schemes::read_lineage(input)));
    std::cout << "wrote " << plot_out << std::endl;
    return 0;
  } catch (const cli::ValidationError& e) {
    std::cerr << "ValidationError: " << e.what() << std::endl;
    return 2;
  } catch (const cli::ParseError& e) {
    std::cerr << "ParseError: " << e.what() << std::endl;
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
}
