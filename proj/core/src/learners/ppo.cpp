#include "arena/learners/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace arena::learn {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;

std::vector<int> with_io(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> sizes{in};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(out);
  return sizes;
}

int head_size(const SpaceSpec& s) {
  return s.is_discrete() ? static_cast<int>(s.as_discrete().n) : static_cast<int>(s.as_box().size());
}

}  // namespace

PpoModel::PpoModel(int obs_dim, const SpaceSpec& act_space, const PpoConfig& config, std::uint64_t seed)
    : obs_dim_(obs_dim),
      act_space_(act_space),
      discrete_(act_space.is_discrete()),
      policy_(with_io(obs_dim, config.hidden, head_size(act_space))),
      value_(with_io(obs_dim, config.hidden, 1)) {
  params_.assign(value_offset() + value_.param_count(), 0.0);
  std::mt19937_64 rng(seed);
  policy_.init(std::span(params_).subspan(0, policy_.param_count()), rng, 0.01);
  for (std::size_t j = 0; j < log_std_size(); ++j) params_[log_std_offset() + j] = config.init_log_std;
  value_.init(std::span(params_).subspan(value_offset(), value_.param_count()), rng);
}

std::vector<std::uint32_t> PpoModel::layer_descriptor() const {
  std::vector<std::uint32_t> out;
  for (const Mlp* net : {&policy_, &value_}) {
    out.push_back(static_cast<std::uint32_t>(net->layer_sizes().size()));
    for (int s : net->layer_sizes()) out.push_back(static_cast<std::uint32_t>(s));
  }
  return out;
}

RowVector ppo_log_prob(const PpoModel& m, std::span<const double> params, const Matrix& obs, const Matrix& act) {
  const Matrix head = m.policy().forward(params.subspan(0, m.policy().param_count()), obs);
  const Eigen::Index b = obs.cols();
  RowVector out(b);
  if (m.discrete()) {
    for (Eigen::Index c = 0; c < b; ++c) {
      const double mx = head.col(c).maxCoeff();
      const double lse = mx + std::log((head.col(c).array() - mx).exp().sum());
      out(c) = head(static_cast<Eigen::Index>(act(0, c)), c) - lse;
    }
    return out;
  }
  const auto ls = params.subspan(m.log_std_offset(), m.log_std_size());
  for (Eigen::Index c = 0; c < b; ++c) {
    double lp = 0.0;
    for (Eigen::Index j = 0; j < head.rows(); ++j) {
      const double z = (act(j, c) - head(j, c)) / std::exp(ls[static_cast<std::size_t>(j)]);
      lp += -0.5 * z * z - ls[static_cast<std::size_t>(j)] - kHalfLog2Pi;
    }
    out(c) = lp;
  }
  return out;
}

double ppo_loss(const PpoModel& m, std::span<const double> params, const PpoBatch& batch, const PpoConfig& cfg,
                std::span<double> grad, PpoLossParts* parts) {
  const Eigen::Index b = batch.obs.cols();
  const double bd = static_cast<double>(b);
  const std::size_t np = m.policy().param_count();
  const std::size_t nv = m.value().param_count();
  const bool want_grad = !grad.empty();

  Mlp::Cache pcache;
  const Matrix head = m.policy().forward(params.subspan(0, np), batch.obs, &pcache);
  Matrix d_head = Matrix::Zero(head.rows(), b);
  double surrogate = 0.0;
  double entropy = 0.0;
  double clipped = 0.0;

  for (Eigen::Index c = 0; c < b; ++c) {
    const double adv = batch.advantage(c);
    double logp = 0.0;
    Eigen::VectorXd dlogp_dhead;   // d logpi / d head column
    Eigen::VectorXd dent_dhead;    // d entropy / d head column
    double sample_entropy = 0.0;
    if (m.discrete()) {
      const auto col = head.col(c);
      const double mx = col.maxCoeff();
      const Eigen::VectorXd shifted = (col.array() - mx).matrix();
      const double lse = std::log(shifted.array().exp().sum());
      const Eigen::VectorXd logp_all = (shifted.array() - lse).matrix();
      const Eigen::VectorXd prob = logp_all.array().exp().matrix();
      const auto a = static_cast<Eigen::Index>(batch.act(0, c));
      logp = logp_all(a);
      sample_entropy = -(prob.array() * logp_all.array()).sum();
      if (want_grad) {
        dlogp_dhead = -prob;
        dlogp_dhead(a) += 1.0;
        dent_dhead = (-prob.array() * (logp_all.array() + sample_entropy)).matrix();
      }
    } else {
      const auto ls = params.subspan(m.log_std_offset(), m.log_std_size());
      dlogp_dhead.resize(head.rows());
      for (Eigen::Index j = 0; j < head.rows(); ++j) {
        const double sigma = std::exp(ls[static_cast<std::size_t>(j)]);
        const double diff = batch.act(j, c) - head(j, c);
        logp += -0.5 * (diff / sigma) * (diff / sigma) - ls[static_cast<std::size_t>(j)] - kHalfLog2Pi;
        dlogp_dhead(j) = diff / (sigma * sigma);
        sample_entropy += ls[static_cast<std::size_t>(j)] + kHalfLog2Pi + 0.5;
      }
    }
    const double ratio = std::exp(logp - batch.logp_old(c));
    const double clipped_ratio = std::clamp(ratio, 1.0 - cfg.clip, 1.0 + cfg.clip);
    const bool clip_active = (adv > 0.0 && ratio > 1.0 + cfg.clip) || (adv < 0.0 && ratio < 1.0 - cfg.clip);
    surrogate += std::min(ratio * adv, clipped_ratio * adv);
    entropy += sample_entropy;
    clipped += clip_active ? 1.0 : 0.0;

    if (!want_grad) continue;
    // d(-surrogate/B)/dlogp = -adv * ratio / B while the unclipped branch is selected.
    const double d_logp = clip_active ? 0.0 : -adv * ratio / bd;
    Eigen::VectorXd g = d_logp * dlogp_dhead;
    if (m.discrete() && cfg.ent_coef != 0.0) g += (-cfg.ent_coef / bd) * dent_dhead;
    d_head.col(c) = g;
    if (!m.discrete()) {
      for (Eigen::Index j = 0; j < head.rows(); ++j) {
        const double sigma = std::exp(params[m.log_std_offset() + static_cast<std::size_t>(j)]);
        const double z = (batch.act(j, c) - head(j, c)) / sigma;
        // d logp / d log_std_j = z^2 - 1 ; d entropy / d log_std_j = 1
        grad[m.log_std_offset() + static_cast<std::size_t>(j)] += d_logp * (z * z - 1.0) - cfg.ent_coef / bd;
      }
    }
  }

  Mlp::Cache vcache;
  const auto vparams = params.subspan(m.value_offset(), nv);
  const Matrix v = m.value().forward(vparams, batch.obs, &vcache);
  const RowVector err = v.row(0) - batch.ret;
  const double value_loss = err.squaredNorm() / bd;

  if (want_grad) {
    m.policy().backward(params.subspan(0, np), pcache, d_head, grad.subspan(0, np), nullptr);
    const Matrix up = (cfg.vf_coef * 2.0 / bd) * err;
    m.value().backward(vparams, vcache, up, grad.subspan(m.value_offset(), nv), nullptr);
  }

  const double policy_loss = -surrogate / bd;
  const double mean_entropy = entropy / bd;
  const double total = policy_loss + cfg.vf_coef * value_loss - cfg.ent_coef * mean_entropy;
  if (parts) {
    parts->policy = policy_loss;
    parts->value = value_loss;
    parts->entropy = mean_entropy;
    parts->total = total;
    parts->clip_fraction = clipped / bd;
  }
  return total;
}

void TrajectoryBuffer::clear() {
  obs.clear();
  act.clear();
  logp.clear();
  reward.clear();
  value.clear();
  done.clear();
  bootstrap.clear();
  last_next_obs.clear();
}

void compute_gae(const TrajectoryBuffer& buf, double last_value, double gamma, double lambda,
                 std::vector<double>& advantages, std::vector<double>& returns) {
  const std::size_t n = buf.size();
  advantages.assign(n, 0.0);
  returns.assign(n, 0.0);
  double running = 0.0;
  for (std::size_t k = n; k-- > 0;) {
    const double nonterminal = 1.0 - buf.done[k];
    const double next_value =
        buf.done[k] != 0.0 ? buf.bootstrap[k] : (k + 1 < n ? buf.value[k + 1] : last_value);
    const double delta = buf.reward[k] + gamma * next_value - buf.value[k];
    running = delta + gamma * lambda * nonterminal * running;
    advantages[k] = running;
    returns[k] = running + buf.value[k];
  }
}

PpoLearner::PpoLearner(int obs_dim, const SpaceSpec& act_space, PpoConfig config, std::uint64_t init_seed,
                       std::uint64_t worker_seed, std::string policy)
    : config_(std::move(config)),
      policy_(std::move(policy)),
      model_(obs_dim, act_space, config_, init_seed),
      adam_(model_.params().size(), AdamConfig{config_.lr}),
      rng_(worker_seed) {}

PpoActResult PpoLearner::act(std::span<const double> obs, bool deterministic) {
  const auto& p = model_.params();
  Matrix x = Eigen::Map<const Matrix>(obs.data(), model_.obs_dim(), 1);
  const Matrix head = model_.policy().forward(std::span(p).subspan(0, model_.policy().param_count()), x);
  PpoActResult r;
  if (model_.discrete()) {
    Eigen::Index a = 0;
    if (deterministic) {
      head.col(0).maxCoeff(&a);
    } else {
      const double mx = head.col(0).maxCoeff();
      const Eigen::VectorXd w = (head.col(0).array() - mx).exp().matrix();
      std::uniform_real_distribution<double> u(0.0, w.sum());
      double draw = u(rng_);
      for (a = 0; a + 1 < w.size(); ++a) {
        draw -= w(a);
        if (draw < 0.0) break;
      }
    }
    r.action = {static_cast<double>(a)};
  } else {
    r.action.resize(static_cast<std::size_t>(head.rows()));
    std::normal_distribution<double> n(0.0, 1.0);
    for (Eigen::Index j = 0; j < head.rows(); ++j) {
      const double sigma = std::exp(p[model_.log_std_offset() + static_cast<std::size_t>(j)]);
      r.action[static_cast<std::size_t>(j)] = deterministic ? head(j, 0) : head(j, 0) + sigma * n(rng_);
    }
  }
  Matrix act = Eigen::Map<const Matrix>(r.action.data(), static_cast<Eigen::Index>(r.action.size()), 1);
  r.logp = ppo_log_prob(model_, p, x, act)(0);
  r.value = model_.value().forward(std::span(p).subspan(model_.value_offset(), model_.value().param_count()), x)(0, 0);
  return r;
}

Value PpoLearner::to_env_action(const std::vector<double>& raw) const {
  if (model_.discrete()) return static_cast<std::int64_t>(raw.at(0));
  const auto& box = model_.act_space().as_box();
  Tensor t;
  t.shape = box.shape;
  for (double v : raw) t.data.push_back(std::clamp(v, box.low, box.high));
  return t;
}

void PpoLearner::observe(std::span<const double> obs, const PpoActResult& step, double reward, bool done,
                         bool truncated, std::span<const double> next_obs) {
  buffer_.obs.insert(buffer_.obs.end(), obs.begin(), obs.end());
  buffer_.act.insert(buffer_.act.end(), step.action.begin(), step.action.end());
  buffer_.logp.push_back(step.logp);
  buffer_.value.push_back(step.value);
  buffer_.reward.push_back(reward);
  buffer_.done.push_back(done ? 1.0 : 0.0);
  double boot = 0.0;
  if (done && truncated) {
    const auto& p = model_.params();
    Matrix x = Eigen::Map<const Matrix>(next_obs.data(), model_.obs_dim(), 1);
    boot = model_.value().forward(std::span(p).subspan(model_.value_offset(), model_.value().param_count()), x)(0, 0);
  }
  buffer_.bootstrap.push_back(boot);
  buffer_.last_next_obs.assign(next_obs.begin(), next_obs.end());
}

void PpoLearner::begin_update() {
  const std::size_t n = buffer_.size();
  if (n == 0) throw EmptyBuffer();
  const auto& p = model_.params();
  Matrix last = Eigen::Map<const Matrix>(buffer_.last_next_obs.data(), model_.obs_dim(), 1);
  const double last_value =
      model_.value().forward(std::span(p).subspan(model_.value_offset(), model_.value().param_count()), last)(0, 0);
  compute_gae(buffer_, last_value, config_.gamma, config_.lambda, adv_, ret_);
  if (n > 1) {
    const double mean = std::accumulate(adv_.begin(), adv_.end(), 0.0) / static_cast<double>(n);
    double var = 0.0;
    for (double a : adv_) var += (a - mean) * (a - mean);
    const double sd = std::sqrt(var / static_cast<double>(n));
    for (double& a : adv_) a = (a - mean) / (sd + 1e-8);
  }
  schedule_.clear();
  next_step_ = 0;
  const auto mb = static_cast<std::size_t>(std::max(1, config_.minibatch));
  std::vector<std::size_t> order(n);
  for (int e = 0; e < config_.epochs; ++e) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng_);
    for (std::size_t s = 0; s < n; s += mb)
      schedule_.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(s),
                             order.begin() + static_cast<std::ptrdiff_t>(std::min(n, s + mb)));
  }
}

PpoBatch PpoLearner::make_batch(std::span<const std::size_t> idx) const {
  const int o = model_.obs_dim();
  const int aw = model_.discrete() ? 1 : model_.head_dim();
  const auto b = static_cast<Eigen::Index>(idx.size());
  PpoBatch batch;
  batch.obs.resize(o, b);
  batch.act.resize(aw, b);
  batch.logp_old.resize(b);
  batch.advantage.resize(b);
  batch.ret.resize(b);
  for (Eigen::Index c = 0; c < b; ++c) {
    const std::size_t k = idx[static_cast<std::size_t>(c)];
    for (int j = 0; j < o; ++j) batch.obs(j, c) = buffer_.obs[k * static_cast<std::size_t>(o) + static_cast<std::size_t>(j)];
    for (int j = 0; j < aw; ++j) batch.act(j, c) = buffer_.act[k * static_cast<std::size_t>(aw) + static_cast<std::size_t>(j)];
    batch.logp_old(c) = buffer_.logp[k];
    batch.advantage(c) = adv_[k];
    batch.ret(c) = ret_[k];
  }
  return batch;
}

GradVector PpoLearner::compute_gradient() {
  if (!update_in_progress()) throw EmptyBuffer();
  const PpoBatch batch = make_batch(schedule_[next_step_]);
  GradVector g{policy_, version_, std::vector<double>(model_.params().size(), 0.0)};
  ppo_loss(model_, model_.params(), batch, config_, g.values, &parts_);
  return g;
}

void PpoLearner::apply_gradient(const GradVector& g) {
  if (g.version != version_) throw VersionMismatch("gradient was computed at a different parameter version");
  std::vector<double> clipped = g.values;
  if (config_.max_grad_norm > 0.0) clip_grad_norm(clipped, config_.max_grad_norm);
  adam_.step(model_.params(), clipped);
  ++version_;
  ++next_step_;
  if (!update_in_progress()) buffer_.clear();
}

PpoLossParts ppo_update(PpoLearner& learner, const Reducer& reduce) {
  learner.begin_update();
  while (learner.update_in_progress()) learner.apply_gradient(reduce(learner.compute_gradient()));
  return learner.last_parts();
}

}  // namespace arena::learn
