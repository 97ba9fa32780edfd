#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "arena/learners/mlp.hpp"

namespace arena::learn {

/// A sampled minibatch; one transition per column.
struct TransitionBatch {
  Matrix obs;        // obs_dim x B
  Matrix act;        // act_dim x B
  Matrix reward;     // reward_dim x B (one row per controlled entity)
  Matrix next_obs;   // obs_dim x B
  RowVector done;    // 1 x B (1.0 when terminal)
};

class InsufficientData : public Error {
 public:
  using Error::Error;
};

/// FIFO ring of joint transitions with uniform sampling.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, int obs_dim, int act_dim, int reward_dim);

  void add(std::span<const double> obs, std::span<const double> act, std::span<const double> reward,
           std::span<const double> next_obs, bool done);

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  int obs_dim() const { return obs_dim_; }
  int act_dim() const { return act_dim_; }
  int reward_dim() const { return reward_dim_; }

  /// Uniform indices with replacement.
  std::vector<std::size_t> sample_indices(std::size_t batch, std::mt19937_64& rng) const;
  TransitionBatch gather(std::span<const std::size_t> indices) const;

  /// Slot index holding the i-th oldest stored transition.
  std::size_t slot_of(std::size_t age_rank) const;

 private:
  std::size_t capacity_;
  int obs_dim_;
  int act_dim_;
  int reward_dim_;
  std::size_t next_ = 0;
  std::size_t size_ = 0;
  std::vector<double> obs_, act_, reward_, next_obs_, done_;
};

}  // namespace arena::learn
