#include "arena/learners/squashed_gaussian.hpp"

#include <cmath>

namespace arena::learn {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;
constexpr double kLog2 = 0.69314718055994530942;

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

/// log(1 - tanh(u)^2), stable for large |u|.
double log_one_minus_tanh_sq(double u) { return 2.0 * (kLog2 - u - softplus(-2.0 * u)); }

}  // namespace

void fill_normal(Matrix& m, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  double* p = m.data();
  for (Eigen::Index i = 0; i < m.size(); ++i) p[i] = n(rng);
}

SquashedSample squashed_sample(const Matrix& head, const Matrix& noise, SquashBounds bounds, LogStdRange range) {
  const Eigen::Index a = head.rows() / 2;
  const Eigen::Index b = head.cols();
  if (head.rows() != 2 * a || noise.rows() != a || noise.cols() != b)
    throw ShapeMismatch("squashed_sample: head/noise shape mismatch");
  SquashedSample s;
  s.noise = noise;
  s.action.resize(a, b);
  s.tanh_u.resize(a, b);
  s.sigma.resize(a, b);
  s.ls_inside.resize(a, b);
  s.logp.resize(b);
  const double log_half = std::log(bounds.half());
  for (Eigen::Index col = 0; col < b; ++col) {
    double lp = 0.0;
    for (Eigen::Index j = 0; j < a; ++j) {
      const double raw = head(a + j, col);
      const bool inside = raw >= range.min && raw <= range.max;
      const double ls = inside ? raw : (raw < range.min ? range.min : range.max);
      const double sigma = std::exp(ls);
      const double eps = noise(j, col);
      const double u = head(j, col) + sigma * eps;
      const double t = std::tanh(u);
      s.sigma(j, col) = sigma;
      s.ls_inside(j, col) = inside ? 1.0 : 0.0;
      s.tanh_u(j, col) = t;
      s.action(j, col) = bounds.center() + bounds.half() * t;
      lp += -0.5 * eps * eps - ls - kHalfLog2Pi - log_half - log_one_minus_tanh_sq(u);
    }
    s.logp(col) = lp;
  }
  return s;
}

Matrix squashed_backward(const SquashedSample& s, const Matrix& d_action, const RowVector& d_logp,
                         SquashBounds bounds) {
  const Eigen::Index a = s.action.rows();
  const Eigen::Index b = s.action.cols();
  Matrix d_head(2 * a, b);
  for (Eigen::Index col = 0; col < b; ++col) {
    const double dl = d_logp(col);
    for (Eigen::Index j = 0; j < a; ++j) {
      const double t = s.tanh_u(j, col);
      // d logp / du = 2 tanh(u); d action / du = half * (1 - tanh^2)
      const double d_u = d_action(j, col) * bounds.half() * (1.0 - t * t) + dl * 2.0 * t;
      d_head(j, col) = d_u;
      d_head(a + j, col) = s.ls_inside(j, col) * (d_u * s.sigma(j, col) * s.noise(j, col) - dl);
    }
  }
  return d_head;
}

Matrix squashed_mode(const Matrix& head, SquashBounds bounds) {
  const Eigen::Index a = head.rows() / 2;
  Matrix out = head.topRows(a).array().tanh().matrix();
  out = (out.array() * bounds.half() + bounds.center()).matrix();
  return out;
}

double squashed_log_prob(const std::vector<double>& mean, const std::vector<double>& log_std,
                         const std::vector<double>& action, SquashBounds bounds) {
  double lp = 0.0;
  for (std::size_t j = 0; j < mean.size(); ++j) {
    const double t = (action[j] - bounds.center()) / bounds.half();
    const double u = std::atanh(t);
    const double z = (u - mean[j]) / std::exp(log_std[j]);
    lp += -0.5 * z * z - log_std[j] - kHalfLog2Pi - std::log(bounds.half()) - log_one_minus_tanh_sq(u);
  }
  return lp;
}

std::pair<std::vector<double>, double> gaussian_policy_sample(const std::vector<double>& head, SquashBounds bounds,
                                                              std::mt19937_64& rng, LogStdRange range) {
  const auto a = static_cast<Eigen::Index>(head.size() / 2);
  Matrix h = Eigen::Map<const Matrix>(head.data(), 2 * a, 1);
  Matrix noise(a, 1);
  fill_normal(noise, rng);
  auto s = squashed_sample(h, noise, bounds, range);
  return {std::vector<double>(s.action.data(), s.action.data() + a), s.logp(0)};
}

}  // namespace arena::learn
