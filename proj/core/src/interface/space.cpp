#include "arena/interface/space.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace arena {

std::size_t BoxSpace::size() const {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         [](std::size_t a, std::uint32_t b) { return a * b; });
}

SpaceSpec SpaceSpec::discrete(std::int64_t n) {
  if (n < 1) throw InvalidSpace("discrete space needs n >= 1");
  return SpaceSpec(DiscreteSpace{n});
}

SpaceSpec SpaceSpec::box(std::vector<std::uint32_t> shape, double low, double high) {
  if (shape.empty()) throw InvalidSpace("box space needs a nonempty shape");
  if (std::any_of(shape.begin(), shape.end(), [](std::uint32_t d) { return d < 1; }))
    throw InvalidSpace("box dimensions must be >= 1");
  if (std::isnan(low) || std::isnan(high) || !(low < high))
    throw InvalidSpace("box space needs low < high");
  return SpaceSpec(BoxSpace{std::move(shape), low, high});
}

std::size_t SpaceSpec::flat_size() const { return is_discrete() ? 1 : as_box().size(); }

std::string SpaceSpec::describe() const {
  std::ostringstream os;
  if (is_discrete()) {
    os << "discrete(" << as_discrete().n << ")";
  } else {
    const auto& b = as_box();
    os << "box([";
    for (std::size_t i = 0; i < b.shape.size(); ++i) os << (i ? "," : "") << b.shape[i];
    os << "]," << b.low << "," << b.high << ")";
  }
  return os.str();
}

bool space_contains(const SpaceSpec& space, const Value& value) {
  if (space.is_discrete()) {
    const auto* idx = std::get_if<std::int64_t>(&value);
    return idx != nullptr && *idx >= 0 && *idx < space.as_discrete().n;
  }
  const auto* t = std::get_if<Tensor>(&value);
  if (t == nullptr) return false;
  const auto& box = space.as_box();
  if (t->shape != box.shape || t->data.size() != box.size()) return false;
  return std::all_of(t->data.begin(), t->data.end(),
                     [&](double x) { return x >= box.low && x <= box.high; });
}

Value null_action(const SpaceSpec& space) {
  if (space.is_discrete()) return std::int64_t{0};
  const auto& box = space.as_box();
  double v = 0.0;
  if (0.0 < box.low || 0.0 > box.high) {
    const double mid = 0.5 * (box.low + box.high);
    v = std::isfinite(mid) ? mid : std::clamp(0.0, box.low, box.high);
  }
  Tensor t;
  t.shape = box.shape;
  t.data.assign(box.size(), v);
  return t;
}

Value null_observation(const SpaceSpec& space) {
  if (space.is_discrete()) return std::int64_t{0};
  Tensor t;
  t.shape = space.as_box().shape;
  t.data.assign(space.as_box().size(), 0.0);
  return t;
}

std::vector<double> flatten(const Value& v) {
  if (const auto* idx = std::get_if<std::int64_t>(&v)) return {static_cast<double>(*idx)};
  return std::get<Tensor>(v).data;
}

}  // namespace arena
