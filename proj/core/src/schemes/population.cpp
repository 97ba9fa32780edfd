#include "arena/schemes/population.hpp"

#include <fstream>
#include <numeric>
#include <sstream>

#include "arena/common/format.hpp"

namespace arena::schemes {

Selection evolve_generation(PopulationState& population, const std::map<std::string, double>& scores) {
  if (population.members.empty()) throw Error("population has no members");
  std::vector<double> s;
  for (const auto& m : population.members) {
    auto it = scores.find(m);
    if (it == scores.end()) throw MissingScore(m);
    s.push_back(it->second);
  }
  Selection sel;
  for (std::size_t i = 1; i < s.size(); ++i) {
    if (s[i] > s[sel.winner]) sel.winner = i;
  }
  for (std::size_t i = 0; i < s.size(); ++i) {
    population.lineage.push_back({population.generation, population.members[i], s[i], i == sel.winner});
    if (i != sel.winner) sel.copies.push_back({population.members[sel.winner], population.members[i]});
  }
  ++population.generation;
  return sel;
}

std::optional<double> selection_score(const std::vector<double>& episode_returns) {
  if (episode_returns.empty()) return std::nullopt;
  const std::size_t n = (episode_returns.size() + 3) / 4;
  const auto first = episode_returns.end() - static_cast<std::ptrdiff_t>(n);
  return std::accumulate(first, episode_returns.end(), 0.0) / static_cast<double>(n);
}

std::vector<orch::RoundConfig> generation_schedule(std::uint64_t total_steps, std::uint64_t generation_period) {
  if (generation_period < 1) throw Error("generation period must be >= 1");
  std::vector<orch::RoundConfig> out;
  std::uint64_t left = total_steps;
  for (std::uint32_t r = 0; left > 0; ++r) {
    orch::RoundConfig cfg;
    cfg.step_budget = std::min(left, generation_period);
    cfg.round_index = r;
    left -= cfg.step_budget;
    out.push_back(std::move(cfg));
  }
  return out;
}

void apply_copies(const std::vector<CopyInstruction>& copies,
                  const std::function<std::filesystem::path(const std::string&)>& checkpoint_path) {
  for (const auto& c : copies) {
    const auto from = checkpoint_path(c.from);
    if (!std::filesystem::exists(from)) throw Error("no checkpoint for population member '" + c.from + "'");
    const auto to = checkpoint_path(c.to);
    const auto tmp = std::filesystem::path(to).concat(".tmp");
    std::filesystem::copy_file(from, tmp, std::filesystem::copy_options::overwrite_existing);
    std::filesystem::rename(tmp, to);
  }
}

void write_lineage(const std::filesystem::path& path, const std::vector<LineageEntry>& lineage) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  out << "generation,member,score,selected\n";
  for (const auto& e : lineage)
    out << e.generation << ',' << e.member << ',' << format_double(e.score) << ',' << (e.selected ? 1 : 0) << '\n';
  if (!out) throw Error("cannot write " + path.string());
}

std::vector<LineageEntry> read_lineage(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != "generation,member,score,selected") throw Error(path.string() + ": unexpected lineage header");
  std::vector<LineageEntry> out;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    LineageEntry e;
    if (cells.size() != 4 || !parse_double(cells[2], e.score) || (cells[3] != "0" && cells[3] != "1"))
      throw Error(path.string() + ": malformed lineage row '" + line + "'");
    e.generation = static_cast<std::uint32_t>(std::stoul(cells[0]));
    e.member = cells[1];
    e.selected = cells[3] == "1";
    out.push_back(std::move(e));
  }
  return out;
}

orch::RoundHooks evolution_hooks(PopulationState& population, const orch::Orchestrator& orchestrator,
                                 std::filesystem::path lineage_path, std::function<void(const Selection&)> on_selection) {
  orch::RoundHooks hooks;
  hooks.after = [&population, &orchestrator, lineage_path = std::move(lineage_path),
                 on_selection = std::move(on_selection)](const orch::RoundReport& report) {
    std::map<std::string, double> scores;
    for (const auto& m : population.members) {
      auto it = report.policies.find(m);
      if (it == report.policies.end()) continue;
      if (auto s = selection_score(it->second.episode_returns)) scores[m] = *s;
    }
    const Selection sel = evolve_generation(population, scores);
    apply_copies(sel.copies, [&](const std::string& p) { return orchestrator.checkpoint_path(p); });
    if (!lineage_path.empty()) write_lineage(lineage_path, population.lineage);
    if (on_selection) on_selection(sel);
  };
  return hooks;
}

}  // namespace arena::schemes
