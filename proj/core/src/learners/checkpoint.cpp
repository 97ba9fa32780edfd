#include "arena/learners/checkpoint.hpp"

#include <fstream>
#include <iterator>

namespace arena::learn {

namespace {
constexpr std::uint8_t kMagic[4] = {'A', 'R', 'N', 'A'};
}

Bytes encode_checkpoint(const Checkpoint& ckpt) {
  ByteWriter w;
  w.raw(std::as_bytes(std::span(kMagic)));
  w.u32(kCheckpointVersion);
  w.str(ckpt.policy);
  w.str(ckpt.algorithm);
  w.u64(ckpt.step_count);
  w.u32(static_cast<std::uint32_t>(ckpt.layers.size()));
  for (std::uint32_t l : ckpt.layers) w.u32(l);
  w.u64(ckpt.payload.size());
  w.f64s(ckpt.payload);
  return std::move(w).take();
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes, std::string_view expected_algorithm) {
  Checkpoint c;
  try {
    ByteReader r(bytes);
    for (std::uint8_t m : kMagic)
      if (r.u8() != m) throw CorruptCheckpoint("checkpoint: bad magic");
    if (const auto v = r.u32(); v != kCheckpointVersion)
      throw CorruptCheckpoint("checkpoint: unsupported format version " + std::to_string(v));
    c.policy = r.str();
    c.algorithm = r.str();
    c.step_count = r.u64();
    const auto n_layers = r.u32();
    if (n_layers > r.remaining() / 4) throw CorruptCheckpoint("checkpoint: layer list exceeds file length");
    c.layers.resize(n_layers);
    for (auto& l : c.layers) l = r.u32();
    const auto n = r.u64();
    if (n != r.remaining() / 8 || r.remaining() % 8 != 0)
      throw CorruptCheckpoint("checkpoint: payload length " + std::to_string(n) + " does not match file length");
    c.payload = r.f64s(static_cast<std::size_t>(n));
    r.expect_end();
  } catch (const DecodeError& e) {
    throw CorruptCheckpoint(std::string("checkpoint: truncated (") + e.what() + ")");
  }
  if (!expected_algorithm.empty() && c.algorithm != expected_algorithm)
    throw CorruptCheckpoint("checkpoint: algorithm tag '" + c.algorithm + "' does not match '" +
                            std::string(expected_algorithm) + "'");
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const Bytes bytes = encode_checkpoint(ckpt);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path).concat(".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write checkpoint " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("cannot write checkpoint " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path, std::string_view expected_algorithm) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorruptCheckpoint("checkpoint: cannot open " + path.string());
  const Bytes bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes, expected_algorithm);
}

}  // namespace arena::learn
