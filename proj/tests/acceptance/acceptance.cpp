#include <signal.h>
#include <sys/wait.h>

#include <cerrno>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "arena/cli/config.hpp"
#include "arena/cli/metrics.hpp"
#include "arena/cli/train.hpp"
#include "arena/common/format.hpp"
#include "arena/learners/sac.hpp"
#include "arena/learners/vectors.hpp"
#include "arena/orchestrator/round.hpp"
#include "arena/orchestrator/worker_node.hpp"
#include "arena/routing/plan.hpp"
#include "arena/runtime/multiprocess.hpp"
#include "arena/schemes/population.hpp"
#include "coopnav_oracle.hpp"
#include "gradcheck.hpp"
#include "view_harness.hpp"

namespace {

using namespace arena;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fixed(double v, int digits = 1) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(digits);
  os << v;
  return os.str();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

fs::path config_path(const std::string& name) { return fs::path(ARENA_SOURCE_DIR) / "configs" / name; }

fs::path g_work_dir;

fs::path run_dir(const std::string& name) {
  const fs::path dir = g_work_dir / name;
  fs::remove_all(dir);
  return dir;
}

/// Mean team score of the last `n` finished episodes of a policy. An episode is identified by its
/// env node and that node's step count at the episode end; grouped and independent workers on the
/// same env report the same episode, so their rows are averaged first.
std::optional<double> final_mean(const std::vector<orch::MetricsRow>& rows, const std::string& policy,
                                 std::size_t n = 50) {
  std::map<std::pair<std::uint64_t, std::uint32_t>, std::pair<double, int>> episodes;
  for (const auto& r : rows) {
    if (r.kind != "episode" || r.policy != policy || !r.episode_return || !r.env) continue;
    auto& [sum, count] = episodes[{r.env_steps, *r.env}];
    sum += *r.episode_return;
    ++count;
  }
  if (episodes.size() < n) return std::nullopt;
  double total = 0.0;
  auto it = episodes.end();
  for (std::size_t k = 0; k < n; ++k) {
    --it;
    total += it->second.first / it->second.second;
  }
  return total / static_cast<double>(n);
}

Outcome plan_arithmetic() {
  const auto t0 = Clock::now();
  routing::MatchSpec spec;
  const std::vector<std::string> names{"a", "b", "c", "d"};
  for (const auto& n : names) spec.policies[n] = routing::PolicySpec{learn::PolicyMode::Trainable, "ppo", {}, {}};
  spec.matches = routing::round_robin_pairings(names, 2, "echo", {{"n_entities", 4.0}});
  const auto one = routing::resolve_plan(spec);
  const auto three = routing::replicate(spec, 3);
  const double dt = seconds_since(t0);
  const bool ok = one.envs.size() == 6 && one.workers.size() == 24 && three.envs.size() == 18 &&
                  three.workers.size() == 72 && dt < 1.0;
  return {ok, "N=1 " + std::to_string(one.envs.size()) + "/" + std::to_string(one.workers.size()) + ", N=3 " +
                  std::to_string(three.envs.size()) + "/" + std::to_string(three.workers.size()) + " in " +
                  fixed(dt * 1e3, 2) + " ms"};
}

Outcome routing_topologies() {
  struct Want {
    const char* file;
    std::size_t envs;
    std::size_t workers;
    std::size_t entities_per_worker;
  };
  const std::vector<Want> wants{{"masac_coopnav.json", 8, 8, 3},
                                {"sac_coopnav.json", 6, 18, 1},
                                {"combined_sac_coopnav.json", 8, 8, 3}};
  bool ok = true;
  std::string detail;
  for (const auto& w : wants) {
    const auto plan = cli::build_plan(cli::load_config(config_path(w.file)));
    bool this_ok = plan.envs.size() == w.envs && plan.workers.size() == w.workers;
    for (const auto& worker : plan.workers) this_ok &= worker.assignment.entities.size() == w.entities_per_worker;
    ok &= this_ok;
    detail += std::string(detail.empty() ? "" : ", ") + w.file + " " + std::to_string(plan.envs.size()) + "/" +
              std::to_string(plan.workers.size());
  }
  return {ok, detail};
}

Outcome proxy_equivalence() {
  const auto t0 = Clock::now();
  const testing::ActionFn echo_act = [](std::uint64_t e, std::uint64_t t) {
    return Value{std::int64_t((e * 3 + t) % 10)};
  };
  const testing::ActionFn pole_act = [](std::uint64_t e, std::uint64_t t) {
    return Value{std::int64_t(((t / 4) + e) % 2)};
  };
  const EnvParams echo_params{{"horizon", 7}};
  const auto echo_direct = testing::direct_trajectory("echo", echo_params, 99, 100, echo_act);
  const auto echo_proxy = testing::proxy_trajectory("echo", echo_params, 99, echo_direct, echo_act);
  const auto pole_direct = testing::direct_trajectory("cartpole", {}, 7, 100, pole_act);
  const auto pole_proxy = testing::proxy_trajectory("cartpole", {}, 7, pole_direct, pole_act);
  const double dt = seconds_since(t0);
  const bool echo_ok = echo_proxy.episodes == 100 && echo_proxy.bytes == echo_direct.bytes;
  const bool pole_ok = pole_proxy.episodes == 100 && pole_proxy.bytes == pole_direct.bytes;
  return {echo_ok && pole_ok && dt < 10.0, std::string("echo ") + (echo_ok ? "identical" : "differs") + ", cartpole " +
                                               (pole_ok ? "identical" : "differs") + " (" +
                                               std::to_string(pole_direct.steps) + " steps) in " + fixed(dt, 2) + " s"};
}

Outcome gradient_suite() {
  const auto t0 = Clock::now();
  const double tol = 1e-4;
  std::map<std::string, double> worst;
  for (std::uint64_t s = 0; s < 20; ++s) {
    auto track = [&](const std::string& name, double err) { worst[name] = std::max(worst[name], err); };
    track("ppo_discrete", testing::ppo_error(true, s));
    track("ppo_box", testing::ppo_error(false, s));
    track("sac_critic", testing::sac_critic_error(1, s, false));
    track("sac_actor", testing::sac_actor_error(1, s, false));
    track("masac_critic", testing::sac_critic_error(3, s, true));
    track("masac_actors", testing::sac_actor_error(3, s, true));
  }
  const double dt = seconds_since(t0);
  bool ok = dt < 60.0;
  std::string detail;
  for (const auto& [name, err] : worst) {
    ok &= err <= tol;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2e", err);
    detail += name + " " + buf + ", ";
  }
  return {ok, "max rel err over 20 instances: " + detail + "in " + fixed(dt, 2) + " s"};
}

Outcome masac_degeneracy() {
  learn::SacConfig cfg;
  cfg.batch = 32;
  cfg.warmup = 100;
  cfg.actor_hidden = {16, 16};
  cfg.critic_hidden = {16, 16};
  learn::SacLearner sac(1, 4, 2, {}, cfg, false, 17, 23);
  learn::SacLearner masac(1, 4, 2, {}, cfg, true, 17, 23);
  testing::fill_replay(sac, 5);
  testing::fill_replay(masac, 5);
  bool ok = sac.model().params() == masac.model().params();
  const int updates = 50;
  for (int k = 0; k < updates; ++k) {
    const auto a = learn::sac_update(sac, learn::identity_reduce);
    const auto b = learn::masac_update(masac, learn::identity_reduce);
    ok &= a.critic == b.critic && a.actor == b.actor;
  }
  ok &= sac.model().params() == masac.model().params() && sac.model().target() == masac.model().target();
  return {ok, std::to_string(updates) + " updates, losses/params/targets " + (ok ? "bit-identical" : "differ")};
}

Outcome coopnav_ceiling() {
  envs::CoopNav env{envs::CoopNavConfig{}};
  std::mt19937_64 rng(2024);
  double greedy = 0.0, random = 0.0;
  const int episodes = 100;
  for (int e = 0; e < episodes; ++e) {
    const auto seed = 1000 + static_cast<std::uint64_t>(e);
    greedy += testing::coopnav_episode(env, seed, [](const envs::CoopNav& en) { return testing::greedy_actions(en); });
    random += testing::coopnav_episode(env, seed,
                                       [&](const envs::CoopNav& en) { return testing::random_actions(en, rng); });
  }
  greedy /= episodes;
  random /= episodes;
  return {greedy >= 850.0 && random <= 150.0,
          "greedy " + fixed(greedy) + "/900, random " + fixed(random) + "/900 over 100 episodes"};
}

struct TrainedScore {
  std::optional<double> final50;
  double seconds = 0.0;
};

TrainedScore train_and_score(const std::string& file, const std::string& policy, std::uint64_t seed,
                             const std::string& tag) {
  auto config = cli::load_config(config_path(file));
  config.seed = seed;
  config.output_dir = run_dir(tag).string();
  const auto t0 = Clock::now();
  const auto result = cli::run_training(config);
  TrainedScore s;
  s.seconds = seconds_since(t0);
  s.final50 = final_mean(cli::read_metrics(cli::RunFiles{result.output_dir}.metrics()), policy);
  std::printf("  [coopnav] %s seed %llu: final-50 mean %s in %.0f s\n", tag.c_str(),
              static_cast<unsigned long long>(seed), s.final50 ? fixed(*s.final50).c_str() : "n/a", s.seconds);
  std::fflush(stdout);
  return s;
}

Outcome coopnav_ordering() {
  const std::vector<std::uint64_t> seeds{1, 2, 3};
  const double margin = 50.0, floor = 400.0;
  int passed = 0, decided = 0;
  std::string detail;
  for (std::uint64_t seed : seeds) {
    if (passed >= 2 || decided - passed > static_cast<int>(seeds.size()) - 2) break;
    const std::string s = std::to_string(seed);
    const auto masac = train_and_score("masac_coopnav.json", "masac", seed, "coopnav_masac_s" + s);
    const double m = masac.final50.value_or(-1e9);
    bool ok = m >= floor;
    std::string line = "seed " + s + ": masac " + fixed(m);
    if (ok) {
      const auto sac = train_and_score("sac_coopnav.json", "sac", seed, "coopnav_sac_s" + s);
      const auto combined = train_and_score("combined_sac_coopnav.json", "combined", seed, "coopnav_combined_s" + s);
      const double a = sac.final50.value_or(1e9), c = combined.final50.value_or(1e9);
      ok = m > a + margin && m > c + margin;
      line += ", sac " + fixed(a) + ", combined " + fixed(c);
    } else {
      line += " < " + fixed(floor, 0) + " (baselines not run)";
    }
    ++decided;
    passed += ok ? 1 : 0;
    detail += line + (ok ? " pass; " : " fail; ");
  }
  return {passed >= 2, detail + std::to_string(passed) + " of " + std::to_string(decided) + " seeds pass"};
}

std::optional<double> logged_value(const std::string& env_config, const std::string& key) {
  const auto pos = env_config.find(key + "=");
  if (pos == std::string::npos) return std::nullopt;
  const auto start = pos + key.size() + 1;
  return std::stod(env_config.substr(start, env_config.find(';', start) - start));
}

Outcome curriculum_mechanics() {
  const auto config = cli::load_config(config_path("curriculum_coopnav.json"));
  const auto& schedule = config.schedule.curriculum;
  const fs::path dir = run_dir("curriculum");
  fs::create_directories(dir);
  std::vector<orch::MetricsRow> rows;
  orch::RunOptions options;
  options.seed = config.seed;
  options.transport = config.transport;
  options.timeout_seconds = config.timeout_seconds;
  options.checkpoint_dir = dir / "checkpoints";
  options.update_log_every = config.update_log_every;
  options.on_row = [&](const orch::MetricsRow& r) { rows.push_back(r); };
  orch::Orchestrator orchestrator(cli::build_plan(config), options);

  bool restored = true;
  std::string saved;
  orch::RoundHooks hooks;
  hooks.before = [&](orch::RoundConfig& rc) {
    for (const auto& d : orchestrator.descriptors(rc)) {
      if (d.role != rt::NodeRole::Worker) continue;
      const auto wc = orch::decode_worker_config(d.config);
      if (rc.round_index == 0) {
        restored &= wc.restore_path.empty();
      } else {
        restored &= wc.restore_path == orchestrator.checkpoint_path(wc.policy).string();
        restored &= slurp(wc.restore_path) == saved;
      }
    }
  };
  hooks.after = [&](const orch::RoundReport& r) {
    restored &= r.members_consistent && r.checkpoints.count("masac") == 1;
    saved = slurp(orchestrator.checkpoint_path("masac"));
  };
  const auto reports = orchestrator.run_rounds(cli::build_schedule(config), hooks);

  bool schedule_ok = reports.size() == schedule.values.size();
  std::map<std::uint32_t, std::set<double>> logged;
  std::uint32_t last_round = 0;
  bool monotone = true;
  for (const auto& r : rows) {
    monotone &= r.round >= last_round;
    last_round = r.round;
    if (r.kind != "env") continue;
    const auto v = logged_value(r.env_config, schedule.key);
    schedule_ok &= v.has_value();
    if (v) logged[r.round].insert(*v);
  }
  std::string values;
  for (std::uint32_t k = 0; k < schedule.values.size(); ++k) {
    const auto it = logged.find(k);
    schedule_ok &= it != logged.end() && it->second == std::set<double>{schedule.values[k]};
    values += (k ? "," : "") + (it == logged.end() ? std::string("?") : format_double(*it->second.begin()));
  }
  for (std::size_t k = 0; k < reports.size(); ++k) monotone &= reports[k].round == k;
  return {schedule_ok && monotone && restored,
          std::to_string(reports.size()) + " rounds, logged weights (" + values + "), round counter " +
              (monotone ? "monotone" : "not monotone") + ", checkpoints " + (restored ? "restored" : "not restored")};
}

Outcome population_evolution() {
  const auto base = cli::load_config(config_path("evolution_cartpole.json"));
  int passed = 0;
  bool mechanics = true;
  std::string detail;
  for (std::uint64_t k = 0; k < 3; ++k) {
    auto config = base;
    config.seed = base.seed + k;
    const fs::path dir = run_dir("evolution_s" + std::to_string(config.seed));
    config.output_dir = dir.string();
    const cli::RunFiles files{dir};
    bool identical = true;
    cli::TrainOptions options;
    options.on_round = [&](const orch::RoundReport&) {
      const std::string first = slurp(files.checkpoints() / (config.schedule.members[0] + ".ckpt"));
      identical &= !first.empty();
      for (const auto& m : config.schedule.members) identical &= slurp(files.checkpoints() / (m + ".ckpt")) == first;
    };
    const auto t0 = Clock::now();
    cli::run_training(config, options);
    const double dt = seconds_since(t0);
    const auto lineage = schemes::read_lineage(files.lineage());
    std::map<std::uint32_t, int> winners;
    std::map<std::uint32_t, double> best;
    for (const auto& e : lineage) {
      winners[e.generation];
      if (e.selected) ++winners[e.generation], best[e.generation] = e.score;
    }
    bool one_winner = winners.size() == 6;
    for (const auto& [g, count] : winners) one_winner &= count == 1;
    bool nondecreasing = best.size() == 6;
    std::string scores;
    double prev = -1e300;
    for (const auto& [g, s] : best) {
      nondecreasing &= s >= prev;
      prev = s;
      scores += (scores.empty() ? "" : " ") + fixed(s, 0);
    }
    mechanics &= identical && one_winner && dt <= 1800.0;
    passed += nondecreasing ? 1 : 0;
    detail += "seed " + std::to_string(config.seed) + " best [" + scores + "]" +
              (nondecreasing ? "" : " decreasing") + (identical ? "" : " members differ") +
              (one_winner ? "" : " bad lineage") + " " + fixed(dt, 0) + " s; ";
    std::printf("  [evolution] %s\n", detail.c_str());
    std::fflush(stdout);
  }
  return {mechanics && passed >= 2, detail + std::to_string(passed) + " of 3 seeds non-decreasing"};
}

/// Budgets small enough to run every experiment twice; learning starts in every configuration.
cli::RunConfig reduced(cli::RunConfig c) {
  const auto n_envs = cli::build_plan(c).envs.size();
  switch (c.schedule.kind) {
    case cli::ScheduleKind::Rounds:
      for (auto& r : c.schedule.rounds) r.steps = std::min<std::uint64_t>(r.steps, n_envs * 1300);
      break;
    case cli::ScheduleKind::Curriculum:
      break;
    case cli::ScheduleKind::Evolution:
      c.schedule.total_steps = 6000;
      c.schedule.generation_period = 2000;
      break;
  }
  return c;
}

Outcome determinism() {
  const std::vector<std::string> files{"round_robin_echo.json", "masac_coopnav.json",      "sac_coopnav.json",
                                       "combined_sac_coopnav.json", "curriculum_coopnav.json", "evolution_cartpole.json"};
  bool ok = true;
  std::string detail;
  for (const auto& file : files) {
    const auto config = reduced(cli::load_config(config_path(file)));
    std::string text[2];
    for (int k = 0; k < 2; ++k) {
      auto c = config;
      c.output_dir = run_dir("determinism_" + std::to_string(k)).string();
      cli::TrainOptions options;
      options.deterministic = true;
      cli::run_training(c, options);
      text[k] = slurp(cli::RunFiles{c.output_dir}.metrics());
    }
    const bool same = text[0] == text[1] && text[0].size() > std::string(cli::kMetricsHeader).size() + 1;
    ok &= same;
    detail += fs::path(file).stem().string() + (same ? " identical" : " DIFFERS") + " (" +
              std::to_string(text[0].size()) + " bytes); ";
  }
  return {ok, detail};
}

Outcome clean_teardown() {
  auto config = cli::load_config(config_path("round_robin_echo.json"));
  const fs::path dir = run_dir("teardown");
  orch::RunOptions options;
  options.seed = config.seed;
  options.transport = rt::TransportMode::Multiprocess;
  options.checkpoint_dir = dir / "checkpoints";
  orch::Orchestrator orchestrator(cli::build_plan(config), options);
  auto* mp = dynamic_cast<rt::MultiprocessRuntime*>(&orchestrator.runtime());
  if (!mp) return {false, "orchestrator did not create a multiprocess runtime"};

  int clean = 0;
  std::size_t nodes = 0;
  orch::RoundHooks hooks;
  hooks.after = [&](const orch::RoundReport&) {
    bool ok = orchestrator.runtime().live_nodes() == 0;
    nodes = mp->last_pids().size();
    ok &= nodes == orchestrator.plan().node_count();
    for (pid_t pid : mp->last_pids()) {
      errno = 0;
      ok &= ::kill(pid, 0) == -1 && errno == ESRCH;
    }
    errno = 0;
    ok &= ::waitpid(-1, nullptr, WNOHANG) == -1 && errno == ECHILD;
    clean += ok ? 1 : 0;
  };
  std::vector<orch::RoundConfig> schedule(20);
  for (std::uint32_t r = 0; r < schedule.size(); ++r) schedule[r] = {600, r, {}};
  orchestrator.run_rounds(schedule, hooks);
  return {clean == 20, std::to_string(clean) + " of 20 rounds left an empty registry and no processes (" +
                           std::to_string(nodes) + " nodes per round)"};
}

struct Criterion {
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {"plan_arithmetic", plan_arithmetic},
      {"routing_topologies", routing_topologies},
      {"proxy_equivalence", proxy_equivalence},
      {"gradient_suite", gradient_suite},
      {"masac_degeneracy", masac_degeneracy},
      {"coopnav_ceiling", coopnav_ceiling},
      {"coopnav_ordering", coopnav_ordering},
      {"curriculum_mechanics", curriculum_mechanics},
      {"population_evolution", population_evolution},
      {"determinism", determinism},
      {"clean_teardown", clean_teardown},
  };

  std::set<std::string> only;
  g_work_dir = fs::temp_directory_path() / "arena_acceptance";
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--list") {
      for (const auto& c : criteria) std::printf("%s\n", c.name);
      return 0;
    }
    if (arg == "--work-dir" && i + 1 < argc) {
      g_work_dir = argv[++i];
    } else if (arg == "--only" && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      for (std::string name; std::getline(ss, name, ',');) only.insert(name);
    } else {
      std::fprintf(stderr, "usage: %s [--list] [--only name,...] [--work-dir dir]\n", argv[0]);
      return 2;
    }
  }
  fs::create_directories(g_work_dir);

  int failures = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.count(c.name)) continue;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("%s %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
