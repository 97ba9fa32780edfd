#include "arena/learners/replay.hpp"

#include <algorithm>

namespace arena::learn {

ReplayBuffer::ReplayBuffer(std::size_t capacity, int obs_dim, int act_dim, int reward_dim)
    : capacity_(capacity), obs_dim_(obs_dim), act_dim_(act_dim), reward_dim_(reward_dim) {
  if (capacity == 0) throw Error("replay capacity must be positive");
  obs_.resize(capacity * static_cast<std::size_t>(obs_dim));
  next_obs_.resize(obs_.size());
  act_.resize(capacity * static_cast<std::size_t>(act_dim));
  reward_.resize(capacity * static_cast<std::size_t>(reward_dim));
  done_.resize(capacity);
}

void ReplayBuffer::add(std::span<const double> obs, std::span<const double> act, std::span<const double> reward,
                       std::span<const double> next_obs, bool done) {
  if (obs.size() != static_cast<std::size_t>(obs_dim_) || next_obs.size() != obs.size() ||
      act.size() != static_cast<std::size_t>(act_dim_) || reward.size() != static_cast<std::size_t>(reward_dim_))
    throw ShapeMismatch("replay: transition has wrong dimensions");
  const std::size_t k = next_;
  std::copy(obs.begin(), obs.end(), obs_.begin() + static_cast<std::ptrdiff_t>(k * obs_dim_));
  std::copy(next_obs.begin(), next_obs.end(), next_obs_.begin() + static_cast<std::ptrdiff_t>(k * obs_dim_));
  std::copy(act.begin(), act.end(), act_.begin() + static_cast<std::ptrdiff_t>(k * act_dim_));
  std::copy(reward.begin(), reward.end(), reward_.begin() + static_cast<std::ptrdiff_t>(k * reward_dim_));
  done_[k] = done ? 1.0 : 0.0;
  next_ = (next_ + 1) % capacity_;
  size_ = std::min(size_ + 1, capacity_);
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t batch, std::mt19937_64& rng) const {
  if (size_ == 0) throw InsufficientData("replay buffer is empty");
  std::uniform_int_distribution<std::size_t> pick(0, size_ - 1);
  std::vector<std::size_t> idx(batch);
  for (auto& i : idx) i = pick(rng);
  return idx;
}

TransitionBatch ReplayBuffer::gather(std::span<const std::size_t> indices) const {
  const auto b = static_cast<Eigen::Index>(indices.size());
  TransitionBatch out;
  out.obs.resize(obs_dim_, b);
  out.next_obs.resize(obs_dim_, b);
  out.act.resize(act_dim_, b);
  out.reward.resize(reward_dim_, b);
  out.done.resize(b);
  for (Eigen::Index c = 0; c < b; ++c) {
    const std::size_t k = indices[static_cast<std::size_t>(c)];
    if (k >= size_) throw InsufficientData("replay index out of range");
    std::copy_n(obs_.data() + k * obs_dim_, obs_dim_, out.obs.col(c).data());
    std::copy_n(next_obs_.data() + k * obs_dim_, obs_dim_, out.next_obs.col(c).data());
    std::copy_n(act_.data() + k * act_dim_, act_dim_, out.act.col(c).data());
    std::copy_n(reward_.data() + k * reward_dim_, reward_dim_, out.reward.col(c).data());
    out.done(c) = done_[k];
  }
  return out;
}

std::size_t ReplayBuffer::slot_of(std::size_t age_rank) const {
  if (age_rank >= size_) throw InsufficientData("replay rank out of range");
  const std::size_t oldest = size_ < capacity_ ? 0 : next_;
  return (oldest + age_rank) % capacity_;
}

}  // namespace arena::learn
