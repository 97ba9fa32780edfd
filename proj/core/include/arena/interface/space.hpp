#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "arena/common/error.hpp"

namespace arena {

/// Dense real tensor; `shape` is row-major and `data.size()` equals the product of `shape`.
struct Tensor {
  std::vector<std::uint32_t> shape;
  std::vector<double> data;

  static Tensor vector(std::vector<double> v) {
    Tensor t;
    t.shape = {static_cast<std::uint32_t>(v.size())};
    t.data = std::move(v);
    return t;
  }

  bool operator==(const Tensor&) const = default;
};

/// An observation or action: a discrete index or a real tensor.
using Value = std::variant<std::int64_t, Tensor>;

struct DiscreteSpace {
  std::int64_t n = 1;
  bool operator==(const DiscreteSpace&) const = default;
};

struct BoxSpace {
  std::vector<std::uint32_t> shape;
  double low = -1.0;
  double high = 1.0;

  std::size_t size() const;
  bool operator==(const BoxSpace&) const = default;
};

class InvalidSpace : public Error {
 public:
  using Error::Error;
};

/// Observation or action space of one entity. Construction validates the invariants.
class SpaceSpec {
 public:
  static SpaceSpec discrete(std::int64_t n);
  static SpaceSpec box(std::vector<std::uint32_t> shape, double low, double high);

  bool is_discrete() const { return std::holds_alternative<DiscreteSpace>(kind_); }
  bool is_box() const { return std::holds_alternative<BoxSpace>(kind_); }
  const DiscreteSpace& as_discrete() const { return std::get<DiscreteSpace>(kind_); }
  const BoxSpace& as_box() const { return std::get<BoxSpace>(kind_); }

  /// Number of reals a learner needs to represent one value (1 for discrete).
  std::size_t flat_size() const;

  std::string describe() const;
  bool operator==(const SpaceSpec&) const = default;

 private:
  explicit SpaceSpec(std::variant<DiscreteSpace, BoxSpace> k) : kind_(std::move(k)) {}
  std::variant<DiscreteSpace, BoxSpace> kind_;
};

struct EntitySpec {
  std::uint32_t entity_id = 0;
  SpaceSpec obs_space;
  SpaceSpec act_space;
};

bool space_contains(const SpaceSpec& space, const Value& value);

/// Canonical null action: index 0 for discrete spaces; for boxes, 0 clamped into the
/// bounds, falling back to the interval midpoint when 0 lies outside them.
Value null_action(const SpaceSpec& space);

/// All-zeros value of the space's shape (index 0 for discrete spaces).
Value null_observation(const SpaceSpec& space);

/// Flattens a value into reals (discrete -> single element).
std::vector<double> flatten(const Value& v);

}  // namespace arena
