#include "arena/runtime/comm.hpp"

#include "arena/runtime/deterministic.hpp"
#include "arena/runtime/multiprocess.hpp"

namespace arena::rt {

Bytes encode_descriptor(const NodeDescriptor& d) {
  ByteWriter w;
  w.u32(d.id);
  w.u8(static_cast<std::uint8_t>(d.role));
  w.u32(static_cast<std::uint32_t>(d.groups.size()));
  for (const auto& g : d.groups) {
    w.str(g.name);
    w.u8(static_cast<std::uint8_t>(g.kind));
  }
  w.blob(d.config);
  return std::move(w).take();
}

NodeDescriptor decode_descriptor(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  NodeDescriptor d;
  d.id = r.u32();
  const auto role = r.u8();
  if (role > 1) throw DecodeError("node descriptor: bad role");
  d.role = static_cast<NodeRole>(role);
  const auto n = r.u32();
  for (std::uint32_t i = 0; i < n; ++i) {
    GroupRef g;
    g.name = r.str();
    const auto kind = r.u8();
    if (kind > 1) throw DecodeError("node descriptor: bad group kind");
    g.kind = static_cast<GroupKind>(kind);
    d.groups.push_back(std::move(g));
  }
  d.config = r.blob();
  r.expect_end();
  return d;
}

TransportMode parse_transport(const std::string& name) {
  if (name == "deterministic") return TransportMode::Deterministic;
  if (name == "multiprocess") return TransportMode::Multiprocess;
  throw Error("unknown transport '" + name + "' (expected deterministic or multiprocess)");
}

std::string transport_name(TransportMode mode) {
  return mode == TransportMode::Deterministic ? "deterministic" : "multiprocess";
}

std::unique_ptr<Runtime> make_runtime(TransportMode mode, double timeout_seconds) {
  if (mode == TransportMode::Deterministic) return std::make_unique<DeterministicRuntime>();
  return std::make_unique<MultiprocessRuntime>(timeout_seconds);
}

}  // namespace arena::rt
