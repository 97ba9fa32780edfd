#include "arena/orchestrator/events.hpp"

namespace arena::orch {

namespace {

void opt_u32(ByteWriter& w, const std::optional<std::uint32_t>& v) {
  w.u8(v ? 1 : 0);
  if (v) w.u32(*v);
}

void opt_f64(ByteWriter& w, const std::optional<double>& v) {
  w.u8(v ? 1 : 0);
  if (v) w.f64(*v);
}

std::optional<std::uint32_t> read_opt_u32(ByteReader& r) {
  if (r.u8() == 0) return std::nullopt;
  return r.u32();
}

std::optional<double> read_opt_f64(ByteReader& r) {
  if (r.u8() == 0) return std::nullopt;
  return r.f64();
}

}  // namespace

rt::NodeEvent make_event(const MetricsRow& row) {
  ByteWriter w;
  w.f64(row.wall_time);
  w.u32(row.round);
  w.str(row.kind);
  w.str(row.policy);
  opt_u32(w, row.worker);
  opt_u32(w, row.env);
  w.u64(row.env_steps);
  w.u64(row.grad_steps);
  opt_f64(w, row.episode_return);
  opt_f64(w, row.loss_policy);
  opt_f64(w, row.loss_value);
  opt_f64(w, row.entropy);
  w.str(row.env_config);
  return {kMetricsEvent, std::move(w).take()};
}

rt::NodeEvent make_event(const CheckpointEvent& c) {
  ByteWriter w;
  w.str(c.policy);
  w.u32(c.worker);
  w.blob(c.checkpoint);
  return {kCheckpointEvent, std::move(w).take()};
}

MetricsRow decode_metrics(const rt::NodeEvent& e) {
  if (e.kind != kMetricsEvent) throw DecodeError("not a metrics event");
  ByteReader r(e.payload);
  MetricsRow row;
  row.wall_time = r.f64();
  row.round = r.u32();
  row.kind = r.str();
  row.policy = r.str();
  row.worker = read_opt_u32(r);
  row.env = read_opt_u32(r);
  row.env_steps = r.u64();
  row.grad_steps = r.u64();
  row.episode_return = read_opt_f64(r);
  row.loss_policy = read_opt_f64(r);
  row.loss_value = read_opt_f64(r);
  row.entropy = read_opt_f64(r);
  row.env_config = r.str();
  r.expect_end();
  return row;
}

CheckpointEvent decode_checkpoint_event(const rt::NodeEvent& e) {
  if (e.kind != kCheckpointEvent) throw DecodeError("not a checkpoint event");
  ByteReader r(e.payload);
  CheckpointEvent c;
  c.policy = r.str();
  c.worker = r.u32();
  c.checkpoint = r.blob();
  r.expect_end();
  return c;
}

}  // namespace arena::orch
