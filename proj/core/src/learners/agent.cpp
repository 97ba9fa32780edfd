#include "arena/learners/agent.hpp"

#include <algorithm>

namespace arena::learn {

namespace {

std::vector<double> joint(const std::vector<Value>& values) {
  std::vector<double> out;
  for (const auto& v : values) {
    const auto f = flatten(v);
    out.insert(out.end(), f.begin(), f.end());
  }
  return out;
}

std::vector<int> hidden(double width, double layers) {
  return std::vector<int>(static_cast<std::size_t>(layers), static_cast<int>(width));
}

void check_payload(const Checkpoint& c, const std::vector<std::uint32_t>& layers, std::size_t size) {
  if (c.layers != layers) throw CorruptCheckpoint("checkpoint: network layout does not match policy '" + c.policy + "'");
  if (c.payload.size() != size) throw CorruptCheckpoint("checkpoint: payload size does not match network");
}

}  // namespace

GradVector Agent::compute_gradient() { throw Error("agent is not trainable"); }
void Agent::apply_gradient(const GradVector&) { throw Error("agent is not trainable"); }

SacConfig sac_config_from(const Params& hyper, Params* resolved) {
  ParamReader r(hyper);
  SacConfig c;
  c.gamma = r.get("gamma", c.gamma);
  c.tau = r.get("tau", c.tau);
  c.alpha = r.get("alpha", c.alpha);
  c.lr = r.get("lr", c.lr);
  c.batch = static_cast<int>(r.get("batch", c.batch));
  c.actor_hidden = hidden(r.get("actor_hidden", 64), r.get("actor_layers", 2));
  c.critic_hidden = hidden(r.get("critic_hidden", 128), r.get("critic_layers", 2));
  c.replay_capacity = static_cast<std::size_t>(r.get("replay_capacity", static_cast<double>(c.replay_capacity)));
  c.warmup = static_cast<std::size_t>(r.get("warmup", static_cast<double>(c.warmup)));
  c.update_every = static_cast<int>(r.get("update_every", c.update_every));
  c.gradient_steps = static_cast<int>(r.get("gradient_steps", c.gradient_steps));
  r.reject_unknown("sac hyperparameters");
  if (resolved) *resolved = r.resolved();
  if (c.batch < 1 || c.update_every < 1 || c.gradient_steps < 1 || c.replay_capacity < 1)
    throw InvalidParams("sac hyperparameters: batch, update_every, gradient_steps and replay_capacity must be >= 1");
  return c;
}

PpoConfig ppo_config_from(const Params& hyper, Params* resolved) {
  ParamReader r(hyper);
  PpoConfig c;
  c.gamma = r.get("gamma", c.gamma);
  c.lambda = r.get("lambda", c.lambda);
  c.clip = r.get("clip", c.clip);
  c.lr = r.get("lr", c.lr);
  c.epochs = static_cast<int>(r.get("epochs", c.epochs));
  c.minibatch = static_cast<int>(r.get("minibatch", c.minibatch));
  c.horizon = static_cast<int>(r.get("horizon", c.horizon));
  c.vf_coef = r.get("vf_coef", c.vf_coef);
  c.ent_coef = r.get("ent_coef", c.ent_coef);
  c.max_grad_norm = r.get("max_grad_norm", c.max_grad_norm);
  c.hidden = hidden(r.get("hidden", 64), r.get("layers", 2));
  c.init_log_std = r.get("init_log_std", c.init_log_std);
  r.reject_unknown("ppo hyperparameters");
  if (resolved) *resolved = r.resolved();
  if (c.epochs < 1 || c.minibatch < 1 || c.horizon < 1)
    throw InvalidParams("ppo hyperparameters: epochs, minibatch and horizon must be >= 1");
  return c;
}

std::unique_ptr<Agent> make_agent(const AgentOptions& o, const std::vector<EntitySpec>& specs) {
  if (specs.empty()) throw Error("policy '" + o.policy + "': worker controls no entities");
  if (o.mode == PolicyMode::Scripted) {
    std::vector<SpaceSpec> spaces;
    for (const auto& s : specs) spaces.push_back(s.act_space);
    return std::make_unique<ScriptedAgent>(parse_script_kind(o.algorithm), std::move(spaces), o.worker_seed);
  }
  const bool frozen = o.mode == PolicyMode::Frozen;
  std::unique_ptr<Agent> agent;
  if (o.algorithm == "sac" || o.algorithm == "masac") {
    const bool common = o.algorithm == "masac";
    if (!common && specs.size() != 1)
      throw Error("policy '" + o.policy + "': sac controls one entity; group entities through the combined adapter");
    agent = std::make_unique<SacAgent>(specs, sac_config_from(o.hyper), common, o.policy, o.init_seed, o.worker_seed,
                                       frozen);
  } else if (o.algorithm == "ppo") {
    if (specs.size() != 1)
      throw Error("policy '" + o.policy + "': ppo controls one entity; group entities through the combined adapter");
    agent = std::make_unique<PpoAgent>(specs[0], ppo_config_from(o.hyper), o.policy, o.init_seed, o.worker_seed,
                                       frozen);
  } else {
    throw Error("policy '" + o.policy + "': unknown algorithm '" + o.algorithm + "'");
  }
  if (frozen) {
    if (o.checkpoint_path.empty()) throw Error("frozen policy '" + o.policy + "' needs a checkpoint");
    agent->restore(load_checkpoint(o.checkpoint_path, o.algorithm));
    agent->set_deterministic(true);
  }
  return agent;
}

ScriptedAgent::ScriptedAgent(ScriptKind kind, std::vector<SpaceSpec> act_spaces, std::uint64_t seed)
    : kind_(kind), spaces_(std::move(act_spaces)), rng_(seed) {}

std::vector<Value> ScriptedAgent::act(const std::vector<Value>&) {
  std::vector<Value> out;
  out.reserve(spaces_.size());
  for (const auto& s : spaces_) out.push_back(scripted_act(kind_, s, rng_));
  return out;
}

namespace {

const BoxSpace& uniform_box(const std::vector<EntitySpec>& specs) {
  const auto& first = specs.at(0).act_space;
  if (!first.is_box()) throw Error("soft actor-critic needs box action spaces");
  for (const auto& s : specs) {
    if (!(s.act_space == first)) throw Error("soft actor-critic needs identical action spaces across entities");
    if (s.obs_space.flat_size() != specs[0].obs_space.flat_size())
      throw Error("soft actor-critic needs identical observation sizes across entities");
  }
  return first.as_box();
}

}  // namespace

SacAgent::SacAgent(const std::vector<EntitySpec>& specs, SacConfig config, bool common_critic, std::string policy,
                   std::uint64_t init_seed, std::uint64_t worker_seed, bool frozen)
    : policy_(std::move(policy)),
      frozen_(frozen),
      act_shape_(uniform_box(specs).shape),
      learner_(static_cast<int>(specs.size()), static_cast<int>(specs[0].obs_space.flat_size()),
               static_cast<int>(uniform_box(specs).size()), SquashBounds{uniform_box(specs).low, uniform_box(specs).high},
               std::move(config), common_critic, init_seed, worker_seed, policy_) {}

std::vector<Value> SacAgent::act(const std::vector<Value>& obs) {
  const bool warmup = !frozen_ && !deterministic_ && learner_.version() == 0 &&
                      learner_.replay().size() < learner_.config().warmup;
  const auto a = warmup ? learner_.random_action() : learner_.act(joint(obs), deterministic_);
  const std::size_t width = a.size() / obs.size();
  std::vector<Value> out;
  for (std::size_t i = 0; i < obs.size(); ++i) {
    Tensor t;
    t.shape = act_shape_;
    t.data.assign(a.begin() + static_cast<std::ptrdiff_t>(i * width), a.begin() + static_cast<std::ptrdiff_t>((i + 1) * width));
    out.emplace_back(std::move(t));
  }
  return out;
}

void SacAgent::observe(const Transition& t) {
  if (frozen_) return;
  const bool terminal = t.done && !t.truncated;
  learner_.replay().add(joint(t.obs), joint(t.actions), t.rewards, joint(t.next_obs), terminal);
  ++steps_;
  if (learner_.ready() && steps_ % static_cast<std::uint64_t>(learner_.config().update_every) == 0)
    pending_ += learner_.config().gradient_steps;
}

GradVector SacAgent::compute_gradient() { return learner_.compute_gradient(); }

void SacAgent::apply_gradient(const GradVector& g) {
  learner_.apply_gradient(g);
  if (pending_ > 0) --pending_;
}

UpdateStats SacAgent::stats() const {
  const auto& l = learner_.last_losses();
  return {l.actor, l.critic, -l.mean_logp};
}

std::optional<Checkpoint> SacAgent::checkpoint() const {
  Checkpoint c;
  c.policy = policy_;
  c.algorithm = tag();
  c.step_count = learner_.version();
  c.layers = learner_.model().layer_descriptor();
  c.payload = learner_.model().params();
  c.payload.insert(c.payload.end(), learner_.model().target().begin(), learner_.model().target().end());
  return c;
}

void SacAgent::restore(const Checkpoint& c) {
  if (c.algorithm != tag()) throw CorruptCheckpoint("checkpoint: algorithm tag '" + c.algorithm + "' is not " + tag());
  auto& m = learner_.model();
  check_payload(c, m.layer_descriptor(), m.params().size() + m.target().size());
  std::copy_n(c.payload.begin(), m.params().size(), m.params().begin());
  std::copy(c.payload.begin() + static_cast<std::ptrdiff_t>(m.params().size()), c.payload.end(), m.target().begin());
  learner_.set_version(c.step_count);
}

PpoAgent::PpoAgent(const EntitySpec& spec, PpoConfig config, std::string policy, std::uint64_t init_seed,
                   std::uint64_t worker_seed, bool frozen)
    : policy_(std::move(policy)),
      frozen_(frozen),
      learner_(static_cast<int>(spec.obs_space.flat_size()), spec.act_space, std::move(config), init_seed,
               worker_seed, policy_) {}

std::vector<Value> PpoAgent::act(const std::vector<Value>& obs) {
  last_ = learner_.act(flatten(obs.at(0)), deterministic_);
  return {learner_.to_env_action(last_.action)};
}

void PpoAgent::observe(const Transition& t) {
  if (frozen_) return;
  learner_.observe(flatten(t.obs.at(0)), last_, t.rewards.at(0), t.done, t.truncated, flatten(t.next_obs.at(0)));
  if (learner_.horizon_reached()) learner_.begin_update();
}

UpdateStats PpoAgent::stats() const {
  const auto& p = learner_.last_parts();
  return {p.policy, p.value, p.entropy};
}

std::optional<Checkpoint> PpoAgent::checkpoint() const {
  Checkpoint c;
  c.policy = policy_;
  c.algorithm = "ppo";
  c.step_count = learner_.version();
  c.layers = learner_.model().layer_descriptor();
  c.payload = learner_.model().params();
  return c;
}

void PpoAgent::restore(const Checkpoint& c) {
  if (c.algorithm != "ppo") throw CorruptCheckpoint("checkpoint: algorithm tag '" + c.algorithm + "' is not ppo");
  auto& m = learner_.model();
  check_payload(c, m.layer_descriptor(), m.params().size());
  m.params() = c.payload;
  learner_.set_version(c.step_count);
}

}  // namespace arena::learn
