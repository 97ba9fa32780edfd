#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "arena/learners/mlp.hpp"
#include "arena/learners/replay.hpp"
#include "arena/learners/squashed_gaussian.hpp"
#include "arena/learners/vectors.hpp"

namespace arena::learn {

struct SacConfig {
  double gamma = 0.99;
  double tau = 0.005;
  double alpha = 0.05;
  double lr = 3e-4;
  int batch = 256;
  std::vector<int> actor_hidden{64, 64};
  std::vector<int> critic_hidden{128, 128};
  std::size_t replay_capacity = 100000;
  std::size_t warmup = 1000;
  /// Environment steps between updates.
  int update_every = 1;
  /// Gradient steps per update.
  int gradient_steps = 1;
  LogStdRange log_std{};
};

/// Actors and twin critics of soft actor-critic. With `agents` = M > 1 the critics are the
/// common critic over joint observations and actions [o_1..o_M, a_1..a_M]; every agent has
/// its own actor of identical shape.
class SacModel {
 public:
  SacModel(int agents, int obs_dim, int act_dim, SquashBounds bounds, const SacConfig& config, std::uint64_t seed);

  int agents() const { return agents_; }
  int obs_dim() const { return obs_dim_; }
  int act_dim() const { return act_dim_; }
  SquashBounds bounds() const { return bounds_; }
  const Mlp& actor() const { return actor_; }
  const Mlp& critic() const { return critic_; }

  /// Trainable parameters: [actor_0 .. actor_{M-1}, q1, q2].
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }
  /// Target critics: [q1', q2'].
  std::vector<double>& target() { return target_; }
  const std::vector<double>& target() const { return target_; }

  std::size_t actor_offset(int i) const { return static_cast<std::size_t>(i) * actor_.param_count(); }
  std::size_t q1_offset() const { return actor_offset(agents_); }
  std::size_t q2_offset() const { return q1_offset() + critic_.param_count(); }
  std::size_t actors_size() const { return q1_offset(); }
  std::size_t critics_size() const { return 2 * critic_.param_count(); }

  /// Layer sizes of every sub-network, each prefixed by its layer count.
  std::vector<std::uint32_t> layer_descriptor() const;

 private:
  int agents_;
  int obs_dim_;
  int act_dim_;
  SquashBounds bounds_;
  Mlp actor_;
  Mlp critic_;
  std::vector<double> params_;
  std::vector<double> target_;
};

/// Reparameterization noise for one update; (M*A) x B with agent-major row blocks.
struct SacNoise {
  Matrix next;
  Matrix current;
};

/// Draws next-action noise for agents 0..M-1, then current-action noise for agents 0..M-1.
SacNoise draw_sac_noise(int agents, int act_dim, int batch, std::mt19937_64& rng);

struct SacLosses {
  double critic = 0.0;
  double actor = 0.0;
  double mean_logp = 0.0;
};

// Single-agent losses. `params` has the SacModel::params() layout; gradients are accumulated into
// the matching blocks of `grad` (same layout) when it is non-empty.
double sac_critic_loss(const SacModel& m, std::span<const double> params, const TransitionBatch& batch,
                       const SacNoise& noise, const SacConfig& cfg, std::span<double> grad);
double sac_actor_loss(const SacModel& m, std::span<const double> params, const TransitionBatch& batch,
                      const SacNoise& noise, const SacConfig& cfg, std::span<double> grad, double* mean_logp = nullptr);

// Common-critic losses for M agents. The critic target uses the mean of the per-entity rewards
// and the sum of the agents' log probabilities; the actor loss is taken on freshly sampled
// joint actions with each actor differentiated through its own action only.
double masac_critic_loss(const SacModel& m, std::span<const double> params, const TransitionBatch& batch,
                         const SacNoise& noise, const SacConfig& cfg, std::span<double> grad);
double masac_actor_loss(const SacModel& m, std::span<const double> params, const TransitionBatch& batch,
                        const SacNoise& noise, const SacConfig& cfg, std::span<double> grad,
                        double* mean_logp = nullptr);

class NotGrouped : public Error {
 public:
  using Error::Error;
};

/// Soft actor-critic learner state owned by one worker: model, replay, optimizer, rng.
/// `common_critic` selects the multi-agent update path.
class SacLearner {
 public:
  SacLearner(int agents, int obs_dim, int act_dim, SquashBounds bounds, SacConfig config, bool common_critic,
             std::uint64_t init_seed, std::uint64_t worker_seed, std::string policy = {});

  SacModel& model() { return model_; }
  const SacModel& model() const { return model_; }
  ReplayBuffer& replay() { return replay_; }
  const SacConfig& config() const { return config_; }
  bool common_critic() const { return common_critic_; }
  std::uint64_t version() const { return version_; }
  void set_version(std::uint64_t v) { version_ = v; }
  std::mt19937_64& rng() { return rng_; }

  /// Joint actions (M*A) for joint observations (M*O).
  std::vector<double> act(std::span<const double> joint_obs, bool deterministic);
  /// Uniform draw from the action box, used before the first update.
  std::vector<double> random_action();

  bool ready() const;
  /// Samples a batch and computes the gradient of critic and actor losses at the current version.
  GradVector compute_gradient();
  /// Applies an (already reduced) gradient: Adam step, version bump, polyak target update.
  void apply_gradient(const GradVector& g);

  const SacLosses& last_losses() const { return losses_; }

 private:
  SacConfig config_;
  bool common_critic_;
  std::string policy_;
  SacModel model_;
  ReplayBuffer replay_;
  Adam adam_;
  std::mt19937_64 rng_;
  std::uint64_t version_ = 0;
  SacLosses losses_;
};

/// One full update: gradient, reduction across the policy group, application.
SacLosses sac_update(SacLearner& learner, const Reducer& reduce);
/// Same as sac_update but requires the common-critic learner.
SacLosses masac_update(SacLearner& learner, const Reducer& reduce);

}  // namespace arena::learn
