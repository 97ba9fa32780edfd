#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "arena/interface/space.hpp"
#include "arena/learners/mlp.hpp"
#include "arena/learners/vectors.hpp"

namespace arena::learn {

struct PpoConfig {
  double gamma = 0.99;
  double lambda = 0.95;
  double clip = 0.2;
  double lr = 3e-4;
  int epochs = 10;
  int minibatch = 64;
  int horizon = 2048;
  double vf_coef = 0.5;
  double ent_coef = 0.0;
  double max_grad_norm = 0.5;
  std::vector<int> hidden{64, 64};
  double init_log_std = 0.0;
};

/// Policy and value networks. Discrete action spaces use a categorical head over logits; box
/// spaces use a Gaussian with state-independent log standard deviations.
class PpoModel {
 public:
  PpoModel(int obs_dim, const SpaceSpec& act_space, const PpoConfig& config, std::uint64_t seed);

  bool discrete() const { return discrete_; }
  int obs_dim() const { return obs_dim_; }
  /// Logit count (discrete) or action dimension (box).
  int head_dim() const { return policy_.output_dim(); }
  const SpaceSpec& act_space() const { return act_space_; }
  const Mlp& policy() const { return policy_; }
  const Mlp& value() const { return value_; }

  /// [policy, log_std (box only), value]
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }
  std::size_t log_std_offset() const { return policy_.param_count(); }
  std::size_t log_std_size() const { return discrete_ ? 0 : static_cast<std::size_t>(head_dim()); }
  std::size_t value_offset() const { return log_std_offset() + log_std_size(); }

  std::vector<std::uint32_t> layer_descriptor() const;

 private:
  int obs_dim_;
  SpaceSpec act_space_;
  bool discrete_;
  Mlp policy_;
  Mlp value_;
  std::vector<double> params_;
};

/// Minibatch of on-policy samples, one per column.
struct PpoBatch {
  Matrix obs;            // O x B
  Matrix act;            // 1 x B (discrete index) or A x B
  RowVector logp_old;
  RowVector advantage;
  RowVector ret;
};

struct PpoLossParts {
  double policy = 0.0;
  double value = 0.0;
  double entropy = 0.0;
  double total = 0.0;
  double clip_fraction = 0.0;
};

/// Clipped surrogate + vf_coef * value MSE - ent_coef * entropy; gradient accumulated into `grad`.
double ppo_loss(const PpoModel& m, std::span<const double> params, const PpoBatch& batch, const PpoConfig& cfg,
                std::span<double> grad, PpoLossParts* parts = nullptr);

/// Log probabilities of `act` under the model (used to build logp_old and in tests).
RowVector ppo_log_prob(const PpoModel& m, std::span<const double> params, const Matrix& obs, const Matrix& act);

class EmptyBuffer : public Error {
 public:
  EmptyBuffer() : Error("ppo update called with an empty trajectory buffer") {}
};

/// On-policy rollout storage up to the horizon; cleared after each update.
struct TrajectoryBuffer {
  std::vector<double> obs;  // row-major, obs_dim per step
  std::vector<double> act;  // act width per step
  std::vector<double> logp;
  std::vector<double> reward;
  std::vector<double> value;
  std::vector<double> done;
  /// Value of the final observation when an episode was cut by its step limit, else 0.
  std::vector<double> bootstrap;
  std::vector<double> last_next_obs;

  std::size_t size() const { return logp.size(); }
  void clear();
};

/// GAE(gamma, lambda) advantages and returns; `last_value` bootstraps the final transition.
/// At episode ends the advantage recursion is cut and `bootstrap` replaces the next value.
void compute_gae(const TrajectoryBuffer& buf, double last_value, double gamma, double lambda,
                 std::vector<double>& advantages, std::vector<double>& returns);

struct PpoActResult {
  std::vector<double> action;  // raw (unclipped) action or the index as a double
  double logp = 0.0;
  double value = 0.0;
};

class PpoLearner {
 public:
  PpoLearner(int obs_dim, const SpaceSpec& act_space, PpoConfig config, std::uint64_t init_seed,
             std::uint64_t worker_seed, std::string policy = {});

  PpoModel& model() { return model_; }
  const PpoModel& model() const { return model_; }
  const PpoConfig& config() const { return config_; }
  TrajectoryBuffer& buffer() { return buffer_; }
  std::uint64_t version() const { return version_; }
  void set_version(std::uint64_t v) { version_ = v; }
  std::mt19937_64& rng() { return rng_; }

  PpoActResult act(std::span<const double> obs, bool deterministic);
  /// Converts a raw action to an in-space environment value (box actions are clipped).
  Value to_env_action(const std::vector<double>& raw) const;

  /// `truncated` marks an episode end caused by a step limit; its next value is bootstrapped.
  void observe(std::span<const double> obs, const PpoActResult& step, double reward, bool done, bool truncated,
               std::span<const double> next_obs);

  bool horizon_reached() const { return buffer_.size() >= static_cast<std::size_t>(config_.horizon); }
  /// Freezes the buffer into advantages and a shuffled minibatch schedule.
  void begin_update();
  bool update_in_progress() const { return next_step_ < schedule_.size(); }
  GradVector compute_gradient();
  void apply_gradient(const GradVector& g);

  const PpoLossParts& last_parts() const { return parts_; }

 private:
  PpoBatch make_batch(std::span<const std::size_t> idx) const;

  PpoConfig config_;
  std::string policy_;
  PpoModel model_;
  Adam adam_;
  std::mt19937_64 rng_;
  std::uint64_t version_ = 0;
  TrajectoryBuffer buffer_;
  std::vector<double> adv_;
  std::vector<double> ret_;
  std::vector<std::vector<std::size_t>> schedule_;
  std::size_t next_step_ = 0;
  PpoLossParts parts_;
};

/// Runs a full update (all epochs and minibatches) on a filled buffer through `reduce`.
PpoLossParts ppo_update(PpoLearner& learner, const Reducer& reduce);

}  // namespace arena::learn
