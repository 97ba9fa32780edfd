#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "arena/common/error.hpp"

namespace arena::learn {

/// Column-major batches: one sample per column.
using Matrix = Eigen::MatrixXd;
using RowVector = Eigen::RowVectorXd;

class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

/// Multilayer perceptron with tanh hidden layers and a linear output layer.
///
/// The network object only describes the architecture; parameters live in a flat span so that
/// they can be shared, averaged and checkpointed as one vector. Layer l stores its weight
/// matrix (out x in, column-major) followed by its bias (out).
class Mlp {
 public:
  /// Activations kept by forward() for use by backward().
  struct Cache {
    std::vector<Matrix> activations;  // [0] = input, [l] = post-activation of layer l
  };

  Mlp() = default;
  explicit Mlp(std::vector<int> layer_sizes);

  const std::vector<int>& layer_sizes() const { return sizes_; }
  int input_dim() const { return sizes_.front(); }
  int output_dim() const { return sizes_.back(); }
  int num_layers() const { return static_cast<int>(sizes_.size()) - 1; }
  std::size_t param_count() const { return param_count_; }

  Matrix forward(std::span<const double> params, const Matrix& input, Cache* cache = nullptr) const;

  /// Backpropagates `upstream` (dL/doutput, out x batch). Parameter gradients are accumulated
  /// into `grad` unless it is empty; dL/dinput is written to `input_grad` when non-null.
  void backward(std::span<const double> params, const Cache& cache, const Matrix& upstream,
                std::span<double> grad, Matrix* input_grad) const;

  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for every weight and bias; the last layer is
  /// additionally multiplied by `output_scale`.
  void init(std::span<double> params, std::mt19937_64& rng, double output_scale = 1.0) const;

 private:
  void check_params(std::span<const double> params) const;

  std::vector<int> sizes_;
  std::vector<std::size_t> offsets_;  // start of each layer's weights
  std::size_t param_count_ = 0;
};

/// Single-sample convenience wrappers.
std::vector<double> mlp_forward(const Mlp& net, std::span<const double> params, std::span<const double> input);
std::vector<double> mlp_gradient(const Mlp& net, std::span<const double> params, std::span<const double> input,
                                 std::span<const double> upstream);

}  // namespace arena::learn
