#include "arena/envs/cartpole.hpp"

#include <cmath>
#include <limits>
#include <random>

namespace arena::envs {

CartPole::CartPole(const EnvParams& params) {
  ParamReader(params).reject_unknown("cartpole");
  const double inf = std::numeric_limits<double>::infinity();
  specs_.push_back(EntitySpec{0, SpaceSpec::box({4}, -inf, inf), SpaceSpec::discrete(2)});
}

Value CartPole::observation() const {
  return Tensor::vector({state_.x, state_.x_dot, state_.theta, state_.theta_dot});
}

std::vector<Value> CartPole::reset(std::uint64_t episode_seed) {
  std::mt19937_64 rng(episode_seed);
  std::uniform_real_distribution<double> u(-0.05, 0.05);
  state_.x = u(rng);
  state_.x_dot = u(rng);
  state_.theta = u(rng);
  state_.theta_dot = u(rng);
  state_.t = 0;
  done_ = false;
  return {observation()};
}

StepBatch CartPole::step(std::span<const Value> actions) {
  if (done_) throw StepAfterDone();
  if (actions.size() != 1) throw Error("cartpole: expects exactly one action");
  const double force = std::get<std::int64_t>(actions[0]) == 1 ? kForce : -kForce;

  constexpr double total_mass = kCartMass + kPoleMass;
  constexpr double polemass_length = kPoleMass * kHalfLength;
  const double cos_t = std::cos(state_.theta);
  const double sin_t = std::sin(state_.theta);
  const double temp = (force + polemass_length * state_.theta_dot * state_.theta_dot * sin_t) / total_mass;
  const double theta_acc =
      (kGravity * sin_t - cos_t * temp) / (kHalfLength * (4.0 / 3.0 - kPoleMass * cos_t * cos_t / total_mass));
  const double x_acc = temp - polemass_length * theta_acc * cos_t / total_mass;

  state_.x += kDt * state_.x_dot;
  state_.x_dot += kDt * x_acc;
  state_.theta += kDt * state_.theta_dot;
  state_.theta_dot += kDt * theta_acc;
  ++state_.t;

  const bool failed = std::abs(state_.x) > kXLimit || std::abs(state_.theta) > kThetaLimit;
  done_ = failed || state_.t >= kMaxSteps;
  StepBatch b;
  b.observations.push_back(observation());
  b.rewards.push_back(1.0);
  b.infos.emplace_back();
  if (done_ && !failed) b.infos.back()[kTimeLimitKey] = "true";
  b.done = done_;
  return b;
}

}  // namespace arena::envs
