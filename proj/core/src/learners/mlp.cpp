#include "arena/learners/mlp.hpp"

#include <cmath>
#include <string>

namespace arena::learn {

namespace {

using ConstMap = Eigen::Map<const Matrix>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;

// Eigen vectorizes exp but not tanh for doubles; this form is within a few ulp of std::tanh.
void tanh_inplace(Matrix& z) {
  z = (1.0 - 2.0 / ((2.0 * z.array()).exp() + 1.0)).matrix();
}

}  // namespace

Mlp::Mlp(std::vector<int> layer_sizes) : sizes_(std::move(layer_sizes)) {
  if (sizes_.size() < 2) throw ShapeMismatch("mlp needs at least an input and an output size");
  for (int s : sizes_) {
    if (s < 1) throw ShapeMismatch("mlp layer sizes must be positive");
  }
  for (int l = 0; l < num_layers(); ++l) {
    offsets_.push_back(param_count_);
    param_count_ += static_cast<std::size_t>(sizes_[l] + 1) * static_cast<std::size_t>(sizes_[l + 1]);
  }
}

void Mlp::check_params(std::span<const double> params) const {
  if (params.size() != param_count_) {
    throw ShapeMismatch("mlp expects " + std::to_string(param_count_) + " parameters, got " +
                        std::to_string(params.size()));
  }
}

Matrix Mlp::forward(std::span<const double> params, const Matrix& input, Cache* cache) const {
  check_params(params);
  if (input.rows() != input_dim()) {
    throw ShapeMismatch("mlp input has " + std::to_string(input.rows()) + " rows, expected " +
                        std::to_string(input_dim()));
  }
  if (cache) {
    cache->activations.resize(static_cast<std::size_t>(num_layers()) + 1);
    cache->activations[0] = input;
  }
  Matrix a = input;
  for (int l = 0; l < num_layers(); ++l) {
    const int in = sizes_[l];
    const int out = sizes_[l + 1];
    const double* base = params.data() + offsets_[l];
    ConstMap w(base, out, in);
    ConstVecMap b(base + static_cast<std::size_t>(out) * in, out);
    Matrix z(out, a.cols());
    z.noalias() = w * a;
    z.colwise() += b;
    if (l + 1 < num_layers()) tanh_inplace(z);
    a = std::move(z);
    if (cache) cache->activations[static_cast<std::size_t>(l) + 1] = a;
  }
  return a;
}

void Mlp::backward(std::span<const double> params, const Cache& cache, const Matrix& upstream,
                   std::span<double> grad, Matrix* input_grad) const {
  check_params(params);
  if (!grad.empty() && grad.size() != param_count_) throw ShapeMismatch("mlp gradient buffer has wrong size");
  if (cache.activations.size() != static_cast<std::size_t>(num_layers()) + 1)
    throw ShapeMismatch("mlp cache does not match the network");
  if (upstream.rows() != output_dim() || upstream.cols() != cache.activations[0].cols())
    throw ShapeMismatch("mlp upstream gradient has wrong shape");

  Matrix delta = upstream;  // dL/dz for the current layer
  for (int l = num_layers() - 1; l >= 0; --l) {
    const int in = sizes_[l];
    const int out = sizes_[l + 1];
    const double* base = params.data() + offsets_[l];
    ConstMap w(base, out, in);
    const Matrix& a_prev = cache.activations[static_cast<std::size_t>(l)];
    if (!grad.empty()) {
      double* gbase = grad.data() + offsets_[l];
      Eigen::Map<Matrix> gw(gbase, out, in);
      Eigen::Map<Eigen::VectorXd> gb(gbase + static_cast<std::size_t>(out) * in, out);
      // Products are formed in aligned temporaries: Eigen's summation order can depend on the
      // destination's alignment, and `grad` is caller-owned memory.
      const Matrix dw = delta * a_prev.transpose();
      const Eigen::VectorXd db = delta.rowwise().sum();
      gw += dw;
      gb += db;
    }
    if (l == 0 && input_grad == nullptr) break;
    Matrix prev(in, delta.cols());
    prev.noalias() = w.transpose() * delta;
    if (l > 0) prev.array() *= (1.0 - a_prev.array().square());
    delta = std::move(prev);
  }
  if (input_grad) *input_grad = std::move(delta);
}

void Mlp::init(std::span<double> params, std::mt19937_64& rng, double output_scale) const {
  if (params.size() != param_count_) throw ShapeMismatch("mlp init buffer has wrong size");
  for (int l = 0; l < num_layers(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(sizes_[l]));
    std::uniform_real_distribution<double> u(-bound, bound);
    const double scale = l + 1 == num_layers() ? output_scale : 1.0;
    const std::size_t n = static_cast<std::size_t>(sizes_[l] + 1) * static_cast<std::size_t>(sizes_[l + 1]);
    for (std::size_t k = 0; k < n; ++k) params[offsets_[l] + k] = scale * u(rng);
  }
}

std::vector<double> mlp_forward(const Mlp& net, std::span<const double> params, std::span<const double> input) {
  if (static_cast<int>(input.size()) != net.input_dim()) throw ShapeMismatch("mlp_forward: input length mismatch");
  Matrix x = Eigen::Map<const Matrix>(input.data(), net.input_dim(), 1);
  Matrix y = net.forward(params, x);
  return std::vector<double>(y.data(), y.data() + y.size());
}

std::vector<double> mlp_gradient(const Mlp& net, std::span<const double> params, std::span<const double> input,
                                 std::span<const double> upstream) {
  if (static_cast<int>(input.size()) != net.input_dim()) throw ShapeMismatch("mlp_gradient: input length mismatch");
  if (static_cast<int>(upstream.size()) != net.output_dim())
    throw ShapeMismatch("mlp_gradient: upstream length mismatch");
  Mlp::Cache cache;
  Matrix x = Eigen::Map<const Matrix>(input.data(), net.input_dim(), 1);
  net.forward(params, x, &cache);
  Matrix up = Eigen::Map<const Matrix>(upstream.data(), net.output_dim(), 1);
  std::vector<double> grad(net.param_count(), 0.0);
  net.backward(params, cache, up, grad, nullptr);
  return grad;
}

}  // namespace arena::learn
