#include "arena/schemes/curriculum.hpp"

#include <cmath>

#include "arena/common/params.hpp"

namespace arena::schemes {

void CurriculumSchedule::validate() const {
  if (key.empty()) throw InvalidParams("curriculum: parameter key is empty");
  if (values.empty()) throw InvalidParams("curriculum: schedule has no rounds");
  for (double v : values) {
    if (!std::isfinite(v)) throw InvalidParams("curriculum: values must be finite");
  }
}

CurriculumSchedule default_penalty_schedule() {
  return {"collision_penalty_weight", {0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3}};
}

double curriculum_weight(const CurriculumSchedule& schedule, std::size_t round_index) {
  if (round_index >= schedule.values.size()) throw IndexOutOfRange(round_index, schedule.values.size());
  return schedule.values[round_index];
}

std::vector<orch::RoundConfig> curriculum_rounds(const CurriculumSchedule& schedule, std::uint64_t steps_per_round) {
  schedule.validate();
  if (steps_per_round < 1) throw InvalidParams("curriculum: steps per round must be >= 1");
  std::vector<orch::RoundConfig> out;
  for (std::size_t r = 0; r < schedule.rounds(); ++r) {
    orch::RoundConfig cfg;
    cfg.step_budget = steps_per_round;
    cfg.round_index = static_cast<std::uint32_t>(r);
    cfg.env_overrides[schedule.key] = curriculum_weight(schedule, r);
    out.push_back(std::move(cfg));
  }
  return out;
}

}  // namespace arena::schemes
