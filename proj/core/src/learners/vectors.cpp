#include "arena/learners/vectors.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

namespace arena::learn {

GradVector allreduce_mean(std::span<const GradVector> contributions) {
  if (contributions.empty()) throw Error("allreduce_mean: no contributions");
  const GradVector& first = contributions.front();
  for (const auto& g : contributions) {
    if (g.values.size() != first.values.size())
      throw LengthMismatchError("allreduce_mean: members contributed vectors of different length");
    if (g.version != first.version)
      throw VersionMismatch("allreduce_mean: members are at different parameter versions");
  }
  GradVector out{first.policy, first.version, std::vector<double>(first.values.size())};
  const std::size_t n = contributions.size();
  if (n == 1) {
    out.values = first.values;
    return out;
  }
  std::vector<const double*> order;
  for (const auto& g : contributions) order.push_back(g.values.data());
  const std::size_t len = first.values.size();
  std::sort(order.begin(), order.end(), [len](const double* a, const double* b) {
    for (std::size_t k = 0; k < len; ++k) {
      const auto x = std::bit_cast<std::uint64_t>(a[k]);
      const auto y = std::bit_cast<std::uint64_t>(b[k]);
      if (x != y) return x < y;
    }
    return false;
  });
  for (std::size_t k = 0; k < len; ++k) {
    const double v0 = order[0][k];
    double sum = v0;
    bool same = true;
    for (std::size_t m = 1; m < n; ++m) {
      const double v = order[m][k];
      same &= v == v0;
      sum += v;
    }
    out.values[k] = same ? v0 : sum / static_cast<double>(n);
  }
  return out;
}

void Adam::step(std::span<double> params, std::span<const double> grad) {
  if (params.size() != m_.size() || grad.size() != m_.size()) throw LengthMismatchError("adam: size mismatch");
  ++t_;
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  const double step = config_.lr * std::sqrt(bc2) / bc1;
  const double eps = config_.eps * std::sqrt(bc2);
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = config_.beta1 * m_[i] + (1.0 - config_.beta1) * grad[i];
    v_[i] = config_.beta2 * v_[i] + (1.0 - config_.beta2) * grad[i] * grad[i];
    params[i] -= step * m_[i] / (std::sqrt(v_[i]) + eps);
  }
}

double clip_grad_norm(std::span<double> grad, double max_norm) {
  double sq = 0.0;
  for (double g : grad) sq += g * g;
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double s = max_norm / norm;
    for (double& g : grad) g *= s;
  }
  return norm;
}

void polyak_update(std::span<double> target, std::span<const double> online, double tau) {
  if (target.size() != online.size()) throw LengthMismatchError("polyak_update: size mismatch");
  for (std::size_t i = 0; i < target.size(); ++i) target[i] = (1.0 - tau) * target[i] + tau * online[i];
}

}  // namespace arena::learn
