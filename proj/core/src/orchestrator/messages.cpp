#include "arena/orchestrator/messages.hpp"

namespace arena::orch {

Bytes encode_actions(const ActionMessage& m) {
  ByteWriter w;
  w.u32(static_cast<std::uint32_t>(m.actions.size()));
  for (const auto& a : m.actions) {
    w.u8(a ? 0 : 1);
    if (a) write_value(w, *a);
  }
  return std::move(w).take();
}

ActionMessage decode_actions(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  ActionMessage m;
  const auto n = r.u32();
  if (n > r.remaining()) throw DecodeError("action message: entity count exceeds frame");
  for (std::uint32_t i = 0; i < n; ++i) {
    const auto is_null = r.u8();
    if (is_null > 1) throw DecodeError("action message: bad null flag");
    if (is_null) m.actions.emplace_back(std::nullopt);
    else m.actions.emplace_back(read_value(r));
  }
  r.expect_end();
  return m;
}

Bytes encode_reply(const EnvReply& rep) {
  ByteWriter w;
  w.u8(rep.is_reset ? 1 : 0);
  w.u8(rep.round_over ? 1 : 0);
  w.blob(encode_batch(rep.batch));
  w.u8(rep.next_reset ? 1 : 0);
  if (rep.next_reset) w.blob(encode_batch(*rep.next_reset));
  return std::move(w).take();
}

EnvReply decode_reply(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  EnvReply rep;
  rep.is_reset = r.u8() != 0;
  rep.round_over = r.u8() != 0;
  rep.batch = decode_batch(r.blob());
  if (r.u8() != 0) rep.next_reset = decode_batch(r.blob());
  r.expect_end();
  return rep;
}

}  // namespace arena::orch
