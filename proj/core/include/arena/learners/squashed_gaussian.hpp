#pragma once

#include <random>
#include <utility>
#include <vector>

#include "arena/learners/mlp.hpp"

namespace arena::learn {

/// Affine map from (-1, 1) onto a box interval: action = center + half * tanh(u).
struct SquashBounds {
  double low = -1.0;
  double high = 1.0;
  double center() const { return 0.5 * (low + high); }
  double half() const { return 0.5 * (high - low); }
};

struct LogStdRange {
  double min = -20.0;
  double max = 2.0;
};

/// Reparameterized draw for a batch. `head` stacks means (top A rows) over raw log std devs.
struct SquashedSample {
  Matrix action;     // A x B
  RowVector logp;    // 1 x B
  Matrix tanh_u;     // A x B
  Matrix sigma;      // A x B
  Matrix noise;      // A x B
  Matrix ls_inside;  // A x B, 1 where the raw log std was inside the clamp range
};

SquashedSample squashed_sample(const Matrix& head, const Matrix& noise, SquashBounds bounds, LogStdRange range);

/// Gradient with respect to `head` of sum_b (dL/daction_b . action_b + dL/dlogp_b * logp_b).
Matrix squashed_backward(const SquashedSample& s, const Matrix& d_action, const RowVector& d_logp,
                         SquashBounds bounds);

/// Deterministic action tanh(mean) mapped to the bounds.
Matrix squashed_mode(const Matrix& head, SquashBounds bounds);

/// log density of `action` (strictly inside the bounds) under the squashed Gaussian with the
/// given per-dimension mean and log std.
double squashed_log_prob(const std::vector<double>& mean, const std::vector<double>& log_std,
                         const std::vector<double>& action, SquashBounds bounds);

/// Single-sample draw from a network head (mean, log std); returns (action, log probability).
std::pair<std::vector<double>, double> gaussian_policy_sample(const std::vector<double>& head, SquashBounds bounds,
                                                              std::mt19937_64& rng, LogStdRange range = {});

/// Fills a matrix with standard normal draws in storage (column-major) order.
void fill_normal(Matrix& m, std::mt19937_64& rng);

}  // namespace arena::learn
