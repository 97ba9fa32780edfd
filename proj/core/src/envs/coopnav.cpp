#include "arena/envs/coopnav.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace arena::envs {

namespace {

double dist(const Vec2& a, const Vec2& b) { return std::hypot(a[0] - b[0], a[1] - b[1]); }

}  // namespace

CoopNavConfig CoopNavConfig::from_params(const EnvParams& params, EnvParams* resolved) {
  ParamReader r(params);
  CoopNavConfig c;
  c.n_agents = static_cast<int>(r.get("n_agents", c.n_agents));
  c.n_targets = static_cast<int>(r.get("n_targets", c.n_targets));
  c.episode_len = static_cast<int>(r.get("episode_len", c.episode_len));
  c.occupancy_radius = r.get("occupancy_radius", c.occupancy_radius);
  c.agent_radius = r.get("agent_radius", c.agent_radius);
  c.collision_penalty_weight = r.get("collision_penalty_weight", c.collision_penalty_weight);
  c.world_half_extent = r.get("world_half_extent", c.world_half_extent);
  c.spawn_half_extent = r.get("spawn_half_extent", c.spawn_half_extent);
  c.velocity_damping = r.get("velocity_damping", c.velocity_damping);
  c.accel_gain = r.get("accel_gain", c.accel_gain);
  c.max_speed = r.get("max_speed", c.max_speed);
  c.min_target_separation = r.get("min_target_separation", c.min_target_separation);
  r.reject_unknown("coopnav");
  if (resolved) *resolved = r.resolved();
  c.validate();
  return c;
}

void CoopNavConfig::validate() const {
  if (n_agents < 1 || n_targets < 1) throw InvalidEnvConfig("coopnav: need at least one agent and target");
  if (episode_len < 1) throw InvalidEnvConfig("coopnav: episode_len must be >= 1");
  if (!(occupancy_radius > 0.0)) throw InvalidEnvConfig("coopnav: occupancy_radius must be > 0");
  if (!(collision_penalty_weight >= 0.0)) throw InvalidEnvConfig("coopnav: collision_penalty_weight must be >= 0");
  if (!(spawn_half_extent > 0.0 && spawn_half_extent <= world_half_extent))
    throw InvalidEnvConfig("coopnav: spawn extent must lie inside the world");
  if (!(max_speed > 0.0)) throw InvalidEnvConfig("coopnav: max_speed must be > 0");
}

int occupancy_count(const std::vector<Vec2>& agent_pos, const std::vector<Vec2>& target_pos, double radius) {
  int count = 0;
  for (const auto& target : target_pos) {
    const bool covered = std::any_of(agent_pos.begin(), agent_pos.end(),
                                     [&](const Vec2& a) { return dist(a, target) <= radius; });
    count += covered ? 1 : 0;
  }
  return count;
}

std::vector<int> collision_count(const std::vector<Vec2>& agent_pos, double agent_radius) {
  std::vector<int> out(agent_pos.size(), 0);
  for (std::size_t i = 0; i < agent_pos.size(); ++i) {
    for (std::size_t j = 0; j < agent_pos.size(); ++j) {
      if (i != j && dist(agent_pos[i], agent_pos[j]) <= 2.0 * agent_radius) ++out[i];
    }
  }
  return out;
}

CoopNav::CoopNav(CoopNavConfig config) : config_(config) {
  config_.validate();
  const auto obs_dim = static_cast<std::uint32_t>(config_.obs_dim());
  const double reach = 2.0 * config_.world_half_extent;
  for (int i = 0; i < config_.n_agents; ++i) {
    specs_.push_back(EntitySpec{static_cast<std::uint32_t>(i), SpaceSpec::box({obs_dim}, -reach, reach),
                                SpaceSpec::box({2}, -1.0, 1.0)});
  }
  state_.agent_pos.assign(static_cast<std::size_t>(config_.n_agents), Vec2{0.0, 0.0});
  state_.agent_vel = state_.agent_pos;
  state_.target_pos.assign(static_cast<std::size_t>(config_.n_targets), Vec2{0.0, 0.0});
}

std::vector<Value> CoopNav::reset(std::uint64_t episode_seed) {
  std::mt19937_64 rng(episode_seed);
  std::uniform_real_distribution<double> coord(-config_.spawn_half_extent, config_.spawn_half_extent);
  CoopNavState s;
  for (int k = 0; k < config_.n_targets; ++k) {
    bool placed = false;
    for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
      Vec2 cand{coord(rng), coord(rng)};
      placed = std::all_of(s.target_pos.begin(), s.target_pos.end(),
                           [&](const Vec2& t) { return dist(t, cand) >= config_.min_target_separation; });
      if (placed) s.target_pos.push_back(cand);
    }
    if (!placed) throw SamplingFailure();
  }
  for (int i = 0; i < config_.n_agents; ++i) {
    s.agent_pos.push_back(Vec2{coord(rng), coord(rng)});
    s.agent_vel.push_back(Vec2{0.0, 0.0});
  }
  s.t = 0;
  state_ = std::move(s);
  return observe();
}

std::vector<Value> CoopNav::observe() const {
  std::vector<Value> out;
  out.reserve(state_.agent_pos.size());
  for (std::size_t i = 0; i < state_.agent_pos.size(); ++i) {
    const Vec2& p = state_.agent_pos[i];
    std::vector<double> o;
    o.reserve(static_cast<std::size_t>(config_.obs_dim()));
    o.insert(o.end(), {p[0], p[1], state_.agent_vel[i][0], state_.agent_vel[i][1]});
    for (const auto& t : state_.target_pos) o.insert(o.end(), {t[0] - p[0], t[1] - p[1]});
    for (std::size_t j = 0; j < state_.agent_pos.size(); ++j) {
      if (j == i) continue;
      o.insert(o.end(), {state_.agent_pos[j][0] - p[0], state_.agent_pos[j][1] - p[1]});
    }
    out.emplace_back(Tensor::vector(std::move(o)));
  }
  return out;
}

StepBatch CoopNav::step(std::span<const Value> actions) {
  if (state_.t >= config_.episode_len) throw StepAfterDone();
  if (actions.size() != state_.agent_pos.size()) throw Error("coopnav: action count mismatch");
  const double lim = config_.world_half_extent;
  for (std::size_t i = 0; i < state_.agent_pos.size(); ++i) {
    const auto& a = std::get<Tensor>(actions[i]).data;
    Vec2& v = state_.agent_vel[i];
    Vec2& p = state_.agent_pos[i];
    for (int d = 0; d < 2; ++d) v[d] = config_.velocity_damping * v[d] + config_.accel_gain * a[d];
    const double speed = std::hypot(v[0], v[1]);
    if (speed > config_.max_speed) {
      const double scale = config_.max_speed / speed;
      v[0] *= scale;
      v[1] *= scale;
    }
    for (int d = 0; d < 2; ++d) p[d] = std::clamp(p[d] + v[d], -lim, lim);
  }
  ++state_.t;

  const double occupied = occupancy_count(state_.agent_pos, state_.target_pos, config_.occupancy_radius);
  StepBatch batch;
  batch.observations = observe();
  batch.infos.resize(state_.agent_pos.size());
  if (config_.collision_penalty_weight > 0.0) {
    const auto hits = collision_count(state_.agent_pos, config_.agent_radius);
    for (std::size_t i = 0; i < hits.size(); ++i)
      batch.rewards.push_back(occupied - config_.collision_penalty_weight * hits[i]);
  } else {
    batch.rewards.assign(state_.agent_pos.size(), occupied);
  }
  batch.done = state_.t >= config_.episode_len;
  if (batch.done)
    for (auto& info : batch.infos) info[kTimeLimitKey] = "true";
  return batch;
}

}  // namespace arena::envs
