#include "arena/learners/sac.hpp"

#include <algorithm>

namespace arena::learn {

namespace {

std::vector<int> with_io(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> sizes{in};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(out);
  return sizes;
}

std::span<const double> block(std::span<const double> v, std::size_t off, std::size_t n) { return v.subspan(off, n); }

std::span<double> grad_block(std::span<double> g, std::size_t off, std::size_t n) {
  return g.empty() ? std::span<double>{} : g.subspan(off, n);
}

Matrix stack(const Matrix& top, const Matrix& bottom) {
  Matrix out(top.rows() + bottom.rows(), top.cols());
  out.topRows(top.rows()) = top;
  out.bottomRows(bottom.rows()) = bottom;
  return out;
}

/// Clipped double-Q soft target y = r + gamma (1 - d) (min(Q1', Q2') - alpha * logp').
RowVector soft_target(const SacModel& m, const Matrix& next_input, const RowVector& reward, const RowVector& done,
                      const RowVector& next_logp, const SacConfig& cfg) {
  std::span<const double> tgt(m.target());
  const std::size_t n = m.critic().param_count();
  const Matrix q1t = m.critic().forward(block(tgt, 0, n), next_input);
  const Matrix q2t = m.critic().forward(block(tgt, n, n), next_input);
  const RowVector v = q1t.row(0).cwiseMin(q2t.row(0)) - cfg.alpha * next_logp;
  return reward + (cfg.gamma * (1.0 - done.array()) * v.array()).matrix();
}

double twin_critic_loss(const SacModel& m, std::span<const double> params, const Matrix& input, const RowVector& y,
                        std::span<double> grad) {
  const std::size_t n = m.critic().param_count();
  const double b = static_cast<double>(input.cols());
  double loss = 0.0;
  for (std::size_t off : {m.q1_offset(), m.q2_offset()}) {
    Mlp::Cache cache;
    const Matrix q = m.critic().forward(block(params, off, n), input, &cache);
    const RowVector err = q.row(0) - y;
    loss += err.squaredNorm() / b;
    if (!grad.empty()) {
      const Matrix up = (2.0 / b) * err;
      m.critic().backward(block(params, off, n), cache, up, grad_block(grad, off, n), nullptr);
    }
  }
  return loss;
}

/// -mean(min(Q1, Q2)) on the given critic input and its gradient with respect to that input.
double neg_min_q(const SacModel& m, std::span<const double> params, const Matrix& input, Matrix* d_input) {
  const std::size_t n = m.critic().param_count();
  Mlp::Cache c1;
  Mlp::Cache c2;
  const Matrix q1 = m.critic().forward(block(params, m.q1_offset(), n), input, &c1);
  const Matrix q2 = m.critic().forward(block(params, m.q2_offset(), n), input, &c2);
  const Eigen::Index b = input.cols();
  Matrix up1 = Matrix::Zero(1, b);
  Matrix up2 = Matrix::Zero(1, b);
  double sum = 0.0;
  for (Eigen::Index c = 0; c < b; ++c) {
    if (q1(0, c) <= q2(0, c)) {
      sum += q1(0, c);
      up1(0, c) = -1.0 / static_cast<double>(b);
    } else {
      sum += q2(0, c);
      up2(0, c) = -1.0 / static_cast<double>(b);
    }
  }
  Matrix g1;
  Matrix g2;
  m.critic().backward(block(params, m.q1_offset(), n), c1, up1, {}, &g1);
  m.critic().backward(block(params, m.q2_offset(), n), c2, up2, {}, &g2);
  *d_input = g1 + g2;
  return -sum / static_cast<double>(b);
}

}  // namespace

SacModel::SacModel(int agents, int obs_dim, int act_dim, SquashBounds bounds, const SacConfig& config,
                   std::uint64_t seed)
    : agents_(agents),
      obs_dim_(obs_dim),
      act_dim_(act_dim),
      bounds_(bounds),
      actor_(with_io(obs_dim, config.actor_hidden, 2 * act_dim)),
      critic_(with_io(agents * (obs_dim + act_dim), config.critic_hidden, 1)) {
  if (agents < 1 || obs_dim < 1 || act_dim < 1) throw ShapeMismatch("sac model needs positive dimensions");
  params_.assign(actors_size() + critics_size(), 0.0);
  std::mt19937_64 rng(seed);
  for (int i = 0; i < agents_; ++i)
    actor_.init(std::span(params_).subspan(actor_offset(i), actor_.param_count()), rng, 0.1);
  critic_.init(std::span(params_).subspan(q1_offset(), critic_.param_count()), rng);
  critic_.init(std::span(params_).subspan(q2_offset(), critic_.param_count()), rng);
  target_.assign(params_.begin() + static_cast<std::ptrdiff_t>(q1_offset()), params_.end());
}

std::vector<std::uint32_t> SacModel::layer_descriptor() const {
  std::vector<std::uint32_t> out;
  auto add = [&](const Mlp& net) {
    out.push_back(static_cast<std::uint32_t>(net.layer_sizes().size()));
    for (int s : net.layer_sizes()) out.push_back(static_cast<std::uint32_t>(s));
  };
  for (int i = 0; i < agents_; ++i) add(actor_);
  for (int k = 0; k < 4; ++k) add(critic_);
  return out;
}

SacNoise draw_sac_noise(int agents, int act_dim, int batch, std::mt19937_64& rng) {
  SacNoise n;
  n.next.resize(static_cast<Eigen::Index>(agents) * act_dim, batch);
  n.current.resize(n.next.rows(), batch);
  for (Matrix* target : {&n.next, &n.current}) {
    for (int i = 0; i < agents; ++i) {
      Matrix part(act_dim, batch);
      fill_normal(part, rng);
      target->middleRows(static_cast<Eigen::Index>(i) * act_dim, act_dim) = part;
    }
  }
  return n;
}

double sac_critic_loss(const SacModel& m, std::span<const double> params, const TransitionBatch& batch,
                       const SacNoise& noise, const SacConfig& cfg, std::span<double> grad) {
  if (m.agents() != 1) throw NotGrouped("sac_critic_loss: single-agent model expected");
  const std::size_t na = m.actor().param_count();
  const Matrix next_head = m.actor().forward(block(params, m.actor_offset(0), na), batch.next_obs);
  const SquashedSample next = squashed_sample(next_head, noise.next, m.bounds(), cfg.log_std);
  const Matrix next_input = stack(batch.next_obs, next.action);
  const RowVector y = soft_target(m, next_input, batch.reward.row(0), batch.done, next.logp, cfg);
  return twin_critic_loss(m, params, stack(batch.obs, batch.act), y, grad);
}

double sac_actor_loss(const SacModel& m, std::span<const double> params, const TransitionBatch& batch,
                      const SacNoise& noise, const SacConfig& cfg, std::span<double> grad, double* mean_logp) {
  if (m.agents() != 1) throw NotGrouped("sac_actor_loss: single-agent model expected");
  const std::size_t na = m.actor().param_count();
  const double b = static_cast<double>(batch.obs.cols());
  Mlp::Cache cache;
  const Matrix head = m.actor().forward(block(params, m.actor_offset(0), na), batch.obs, &cache);
  const SquashedSample s = squashed_sample(head, noise.current, m.bounds(), cfg.log_std);
  Matrix d_input;
  const double q_term = neg_min_q(m, params, stack(batch.obs, s.action), &d_input);
  const double logp_mean = s.logp.sum() / b;
  if (mean_logp) *mean_logp = logp_mean;
  if (!grad.empty()) {
    const Matrix d_action = d_input.bottomRows(m.act_dim());
    const RowVector d_logp = RowVector::Constant(batch.obs.cols(), cfg.alpha / b);
    const Matrix d_head = squashed_backward(s, d_action, d_logp, m.bounds());
    m.actor().backward(block(params, m.actor_offset(0), na), cache, d_head, grad_block(grad, m.actor_offset(0), na),
                       nullptr);
  }
  return cfg.alpha * logp_mean + q_term;
}

double masac_critic_loss(const SacModel& m, std::span<const double> params, const TransitionBatch& batch,
                         const SacNoise& noise, const SacConfig& cfg, std::span<double> grad) {
  const int agents = m.agents();
  const int o = m.obs_dim();
  const int a = m.act_dim();
  const std::size_t na = m.actor().param_count();
  const Eigen::Index b = batch.obs.cols();
  if (batch.obs.rows() != static_cast<Eigen::Index>(agents) * o || batch.reward.rows() != agents)
    throw ShapeMismatch("masac: batch does not hold joint transitions for every agent");

  Matrix next_input(static_cast<Eigen::Index>(agents) * (o + a), b);
  next_input.topRows(batch.next_obs.rows()) = batch.next_obs;
  RowVector logp_sum = RowVector::Zero(b);
  for (int i = 0; i < agents; ++i) {
    const Matrix head = m.actor().forward(block(params, m.actor_offset(i), na), batch.next_obs.middleRows(i * o, o));
    const SquashedSample s = squashed_sample(head, noise.next.middleRows(i * a, a), m.bounds(), cfg.log_std);
    next_input.middleRows(static_cast<Eigen::Index>(agents) * o + i * a, a) = s.action;
    logp_sum += s.logp;
  }
  const RowVector shared_reward = batch.reward.colwise().sum() / static_cast<double>(agents);
  const RowVector y = soft_target(m, next_input, shared_reward, batch.done, logp_sum, cfg);
  return twin_critic_loss(m, params, stack(batch.obs, batch.act), y, grad);
}

double masac_actor_loss(const SacModel& m, std::span<const double> params, const TransitionBatch& batch,
                        const SacNoise& noise, const SacConfig& cfg, std::span<double> grad, double* mean_logp) {
  const int agents = m.agents();
  const int o = m.obs_dim();
  const int a = m.act_dim();
  const std::size_t na = m.actor().param_count();
  const Eigen::Index b = batch.obs.cols();
  const double bd = static_cast<double>(b);

  std::vector<Mlp::Cache> caches(static_cast<std::size_t>(agents));
  std::vector<SquashedSample> samples;
  samples.reserve(static_cast<std::size_t>(agents));
  Matrix input(static_cast<Eigen::Index>(agents) * (o + a), b);
  input.topRows(batch.obs.rows()) = batch.obs;
  RowVector logp_sum = RowVector::Zero(b);
  for (int i = 0; i < agents; ++i) {
    const Matrix head = m.actor().forward(block(params, m.actor_offset(i), na), batch.obs.middleRows(i * o, o),
                                          &caches[static_cast<std::size_t>(i)]);
    samples.push_back(squashed_sample(head, noise.current.middleRows(i * a, a), m.bounds(), cfg.log_std));
    input.middleRows(static_cast<Eigen::Index>(agents) * o + i * a, a) = samples.back().action;
    logp_sum += samples.back().logp;
  }
  Matrix d_input;
  const double q_term = neg_min_q(m, params, input, &d_input);
  const double logp_mean = logp_sum.sum() / bd;
  if (mean_logp) *mean_logp = logp_mean / agents;
  if (!grad.empty()) {
    const RowVector d_logp = RowVector::Constant(b, cfg.alpha / bd);
    for (int i = 0; i < agents; ++i) {
      const Matrix d_action = d_input.middleRows(static_cast<Eigen::Index>(agents) * o + i * a, a);
      const Matrix d_head = squashed_backward(samples[static_cast<std::size_t>(i)], d_action, d_logp, m.bounds());
      m.actor().backward(block(params, m.actor_offset(i), na), caches[static_cast<std::size_t>(i)], d_head,
                         grad_block(grad, m.actor_offset(i), na), nullptr);
    }
  }
  return cfg.alpha * logp_mean + q_term;
}

SacLearner::SacLearner(int agents, int obs_dim, int act_dim, SquashBounds bounds, SacConfig config,
                       bool common_critic, std::uint64_t init_seed, std::uint64_t worker_seed, std::string policy)
    : config_(std::move(config)),
      common_critic_(common_critic),
      policy_(std::move(policy)),
      model_(agents, obs_dim, act_dim, bounds, config_, init_seed),
      replay_(config_.replay_capacity, agents * obs_dim, agents * act_dim, agents),
      adam_(model_.params().size(), AdamConfig{config_.lr}),
      rng_(worker_seed) {
  if (!common_critic_ && agents != 1) throw NotGrouped("single-agent soft actor-critic controls exactly one agent");
}

std::vector<double> SacLearner::act(std::span<const double> joint_obs, bool deterministic) {
  const int o = model_.obs_dim();
  const int a = model_.act_dim();
  const std::size_t na = model_.actor().param_count();
  std::span<const double> params(model_.params());
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(model_.agents() * a));
  for (int i = 0; i < model_.agents(); ++i) {
    Matrix x = Eigen::Map<const Matrix>(joint_obs.data() + static_cast<std::size_t>(i * o), o, 1);
    const Matrix head = model_.actor().forward(params.subspan(model_.actor_offset(i), na), x);
    Matrix action;
    if (deterministic) {
      action = squashed_mode(head, model_.bounds());
    } else {
      Matrix noise(a, 1);
      fill_normal(noise, rng_);
      action = squashed_sample(head, noise, model_.bounds(), config_.log_std).action;
    }
    out.insert(out.end(), action.data(), action.data() + a);
  }
  return out;
}

std::vector<double> SacLearner::random_action() {
  std::uniform_real_distribution<double> u(model_.bounds().low, model_.bounds().high);
  std::vector<double> out(static_cast<std::size_t>(model_.agents() * model_.act_dim()));
  for (auto& v : out) v = u(rng_);
  return out;
}

bool SacLearner::ready() const {
  return replay_.size() >= std::max<std::size_t>(config_.warmup, static_cast<std::size_t>(config_.batch));
}

GradVector SacLearner::compute_gradient() {
  if (!ready()) throw InsufficientData("soft actor-critic update needs a warm replay buffer");
  const auto idx = replay_.sample_indices(static_cast<std::size_t>(config_.batch), rng_);
  const TransitionBatch batch = replay_.gather(idx);
  const SacNoise noise = draw_sac_noise(model_.agents(), model_.act_dim(), config_.batch, rng_);
  GradVector g{policy_, version_, std::vector<double>(model_.params().size(), 0.0)};
  std::span<const double> p(model_.params());
  if (common_critic_) {
    losses_.critic = masac_critic_loss(model_, p, batch, noise, config_, g.values);
    losses_.actor = masac_actor_loss(model_, p, batch, noise, config_, g.values, &losses_.mean_logp);
  } else {
    losses_.critic = sac_critic_loss(model_, p, batch, noise, config_, g.values);
    losses_.actor = sac_actor_loss(model_, p, batch, noise, config_, g.values, &losses_.mean_logp);
  }
  return g;
}

void SacLearner::apply_gradient(const GradVector& g) {
  if (g.version != version_) throw VersionMismatch("gradient was computed at a different parameter version");
  adam_.step(model_.params(), g.values);
  ++version_;
  polyak_update(model_.target(), std::span<const double>(model_.params()).subspan(model_.q1_offset()), config_.tau);
}

SacLosses sac_update(SacLearner& learner, const Reducer& reduce) {
  learner.apply_gradient(reduce(learner.compute_gradient()));
  return learner.last_losses();
}

SacLosses masac_update(SacLearner& learner, const Reducer& reduce) {
  if (!learner.common_critic()) throw NotGrouped("masac_update requires a grouped common-critic learner");
  return sac_update(learner, reduce);
}

}  // namespace arena::learn
