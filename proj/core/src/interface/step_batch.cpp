#include "arena/interface/step_batch.hpp"

#include <sstream>

namespace arena {

namespace {

constexpr std::uint8_t kTagDiscrete = 0;
constexpr std::uint8_t kTagBox = 1;

bool exited(const Info& info) {
  auto it = info.find(kExitedKey);
  return it != info.end() && it->second == "true";
}

}  // namespace

std::optional<BatchError> validate_batch(std::span<const EntitySpec> specs, const StepBatch& batch) {
  const std::size_t e = specs.size();
  for (std::size_t got : {batch.observations.size(), batch.rewards.size(), batch.infos.size()}) {
    if (got != e) return LengthMismatch{e, got};
  }
  for (std::size_t i = 0; i < e; ++i) {
    const auto& obs = batch.observations[i];
    if (exited(batch.infos[i]) && obs == null_observation(specs[i].obs_space)) continue;
    if (!space_contains(specs[i].obs_space, obs)) return SpaceViolation{specs[i].entity_id};
  }
  return std::nullopt;
}

std::string describe(const BatchError& err) {
  std::ostringstream os;
  if (const auto* lm = std::get_if<LengthMismatch>(&err)) {
    os << "LengthMismatch(" << lm->expected << "," << lm->got << ")";
  } else {
    os << "SpaceViolation(" << std::get<SpaceViolation>(err).entity_id << ")";
  }
  return os.str();
}

void write_value(ByteWriter& w, const Value& v) {
  if (const auto* idx = std::get_if<std::int64_t>(&v)) {
    w.u8(kTagDiscrete);
    w.u32(0);
    w.f64(static_cast<double>(*idx));
    return;
  }
  const auto& t = std::get<Tensor>(v);
  w.u8(kTagBox);
  w.u32(static_cast<std::uint32_t>(t.shape.size()));
  for (auto d : t.shape) w.u32(d);
  w.f64s(t.data);
}

Value read_value(ByteReader& r) {
  const std::uint8_t tag = r.u8();
  const std::uint32_t ndim = r.u32();
  if (tag == kTagDiscrete) {
    if (ndim != 0) throw DecodeError("discrete value with nonzero rank");
    return static_cast<std::int64_t>(r.f64());
  }
  if (tag != kTagBox) throw DecodeError("unknown value tag");
  Tensor t;
  std::size_t n = 1;
  t.shape.resize(ndim);
  for (auto& d : t.shape) {
    d = r.u32();
    n *= d;
  }
  if (n * 8 > r.remaining()) throw DecodeError("tensor payload exceeds frame");
  t.data = r.f64s(n);
  return t;
}

Bytes encode_batch(const StepBatch& batch) {
  ByteWriter w;
  const auto e = static_cast<std::uint32_t>(batch.observations.size());
  w.u32(e);
  for (std::uint32_t i = 0; i < e; ++i) {
    write_value(w, batch.observations[i]);
    w.f64(i < batch.rewards.size() ? batch.rewards[i] : 0.0);
  }
  w.u8(batch.done ? 1 : 0);
  for (std::uint32_t i = 0; i < e; ++i) {
    const Info empty;
    const Info& info = i < batch.infos.size() ? batch.infos[i] : empty;
    w.u32(static_cast<std::uint32_t>(info.size()));
    for (const auto& [k, v] : info) {
      w.str(k);
      w.str(v);
    }
  }
  return std::move(w).take();
}

StepBatch decode_batch(std::span<const std::uint8_t> frame) {
  ByteReader r(frame);
  StepBatch b;
  const std::uint32_t e = r.u32();
  if (e > r.remaining()) throw DecodeError("entity count exceeds frame");
  b.observations.reserve(e);
  b.rewards.reserve(e);
  for (std::uint32_t i = 0; i < e; ++i) {
    b.observations.push_back(read_value(r));
    b.rewards.push_back(r.f64());
  }
  const std::uint8_t done = r.u8();
  if (done > 1) throw DecodeError("done byte must be 0 or 1");
  b.done = done == 1;
  b.infos.resize(e);
  for (std::uint32_t i = 0; i < e; ++i) {
    const std::uint32_t pairs = r.u32();
    for (std::uint32_t p = 0; p < pairs; ++p) {
      std::string k = r.str();
      b.infos[i][std::move(k)] = r.str();
    }
  }
  r.expect_end();
  return b;
}

}  // namespace arena
