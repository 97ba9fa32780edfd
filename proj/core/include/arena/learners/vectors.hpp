#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "arena/common/error.hpp"

namespace arena::learn {

/// Flat, versioned parameter vector of one policy. The version counts applied updates.
struct ParamVector {
  std::string policy;
  std::uint64_t version = 0;
  std::vector<double> values;

  bool operator==(const ParamVector&) const = default;
};

/// Gradient with respect to a ParamVector; `version` is the parameter version it was taken at.
struct GradVector {
  std::string policy;
  std::uint64_t version = 0;
  std::vector<double> values;

  bool operator==(const GradVector&) const = default;
};

class VersionMismatch : public Error {
 public:
  using Error::Error;
};

class LengthMismatchError : public Error {
 public:
  using Error::Error;
};

/// Element-wise arithmetic mean of the contributions of a policy group. Contributions are summed
/// in a canonical order (bitwise lexicographic), so the result does not depend on member order,
/// and an element on which all members agree is returned unchanged.
GradVector allreduce_mean(std::span<const GradVector> contributions);

/// Synchronous reduction hook handed to update routines; a lone worker uses the identity.
using Reducer = std::function<GradVector(GradVector)>;

inline GradVector identity_reduce(GradVector g) { return g; }

struct AdamConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  Adam() = default;
  Adam(std::size_t size, AdamConfig config) : config_(config), m_(size, 0.0), v_(size, 0.0) {}

  void step(std::span<double> params, std::span<const double> grad);
  std::uint64_t steps() const { return t_; }
  const AdamConfig& config() const { return config_; }

 private:
  AdamConfig config_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::uint64_t t_ = 0;
};

/// Scales `grad` in place so its Euclidean norm is at most `max_norm`; returns the prior norm.
double clip_grad_norm(std::span<double> grad, double max_norm);

/// target <- (1 - tau) * target + tau * online
void polyak_update(std::span<double> target, std::span<const double> online, double tau);

}  // namespace arena::learn
