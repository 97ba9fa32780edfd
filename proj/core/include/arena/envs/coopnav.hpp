#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "arena/envs/params.hpp"
#include "arena/interface/env.hpp"

namespace arena::envs {

using Vec2 = std::array<double, 2>;

struct CoopNavConfig {
  int n_agents = 3;
  int n_targets = 3;
  int episode_len = 300;
  double occupancy_radius = 0.1;
  double agent_radius = 0.05;
  double collision_penalty_weight = 0.0;
  double world_half_extent = 1.0;
  double spawn_half_extent = 0.9;
  double velocity_damping = 0.5;
  double accel_gain = 0.1;
  double max_speed = 0.1;
  double min_target_separation = 0.3;

  /// `resolved` receives every parameter with its effective value.
  static CoopNavConfig from_params(const EnvParams& params, EnvParams* resolved = nullptr);
  void validate() const;
  int obs_dim() const { return 4 + 2 * n_targets + 2 * (n_agents - 1); }
};

struct CoopNavState {
  std::vector<Vec2> agent_pos;
  std::vector<Vec2> agent_vel;
  std::vector<Vec2> target_pos;
  int t = 0;
};

class SamplingFailure : public Error {
 public:
  SamplingFailure() : Error("target placement failed after 1000 rejection attempts") {}
};

/// Number of targets with at least one agent inside the closed occupancy ball.
int occupancy_count(const std::vector<Vec2>& agent_pos, const std::vector<Vec2>& target_pos, double radius);

/// Per agent, how many other agents lie within twice the agent radius.
std::vector<int> collision_count(const std::vector<Vec2>& agent_pos, double agent_radius);

/// Particle-world cooperative navigation: agents are rewarded collectively for covering targets.
class CoopNav final : public MultiEntityEnv {
 public:
  explicit CoopNav(CoopNavConfig config);

  const std::vector<EntitySpec>& entities() const override { return specs_; }
  std::vector<Value> reset(std::uint64_t episode_seed) override;
  StepBatch step(std::span<const Value> actions) override;

  const CoopNavState& state() const { return state_; }
  /// Replaces the simulator state (tests and trace tooling construct layouts directly).
  void set_state(CoopNavState s) { state_ = std::move(s); }
  const CoopNavConfig& config() const { return config_; }

  std::vector<Value> observe() const;

 private:
  CoopNavConfig config_;
  std::vector<EntitySpec> specs_;
  CoopNavState state_;
};

}  // namespace arena::envs
