#pragma once

#include "arena/envs/params.hpp"
#include "arena/interface/env.hpp"

namespace arena::envs {

struct CartPoleState {
  double x = 0.0;
  double x_dot = 0.0;
  double theta = 0.0;
  double theta_dot = 0.0;
  int t = 0;
};

/// Classic single-entity pole balancing with explicit Euler integration.
class CartPole final : public MultiEntityEnv {
 public:
  static constexpr double kGravity = 9.8;
  static constexpr double kCartMass = 1.0;
  static constexpr double kPoleMass = 0.1;
  static constexpr double kHalfLength = 0.5;
  static constexpr double kForce = 10.0;
  static constexpr double kDt = 0.02;
  static constexpr double kXLimit = 2.4;
  static constexpr double kThetaLimit = 12.0 * 3.14159265358979323846 / 180.0;
  static constexpr int kMaxSteps = 500;

  explicit CartPole(const EnvParams& params = {});

  const std::vector<EntitySpec>& entities() const override { return specs_; }
  std::vector<Value> reset(std::uint64_t episode_seed) override;
  StepBatch step(std::span<const Value> actions) override;

  const CartPoleState& state() const { return state_; }
  void set_state(const CartPoleState& s) {
    state_ = s;
    done_ = false;
  }

 private:
  Value observation() const;

  std::vector<EntitySpec> specs_;
  CartPoleState state_;
  bool done_ = false;
};

}  // namespace arena::envs
