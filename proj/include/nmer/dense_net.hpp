#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "nmer/rng.hpp"

namespace nmer {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class OutputActivation { kIdentity, kTanh };

struct DenseLayer {
  Matrix w;  // out x in
  Vector b;  // out
};

/// Per-layer parameter gradients, shaped like the network's layers.
struct Gradients {
  std::vector<DenseLayer> layers;
};

/// Fully connected network: ReLU hidden layers and an identity or tanh
/// output. Tanh outputs are mapped to center + half_range * tanh(z).
/// Batches are column-major: one column per sample.
class DenseNet {
 public:
  struct Cache {
    std::vector<Matrix> pre;   // pre-activations per layer
    std::vector<Matrix> post;  // post[0] is the input, post[i+1] the output of layer i
  };

  /// Zero-initialized network.
  DenseNet(std::vector<std::size_t> sizes, OutputActivation out);
  /// Weights and biases uniform in +-1/sqrt(fan_in).
  DenseNet(std::vector<std::size_t> sizes, OutputActivation out, Rng& rng);

  std::size_t input_dim() const { return sizes_.front(); }
  std::size_t output_dim() const { return sizes_.back(); }
  const std::vector<std::size_t>& sizes() const { return sizes_; }
  OutputActivation output_activation() const { return out_; }

  std::vector<DenseLayer>& layers() { return layers_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }

  void set_output_range(const Vector& center, const Vector& half_range);

  Matrix forward(const Matrix& x) const;
  Matrix forward(const Matrix& x, Cache& cache) const;

  /// Reverse-mode gradients of a scalar loss given dL/d(output). When
  /// d_input is non-null it receives dL/d(input).
  Gradients backward(const Cache& cache, const Matrix& d_output, Matrix* d_input = nullptr) const;

  std::size_t parameter_count() const;
  std::vector<double> parameters() const;
  void set_parameters(std::span<const double> values);

 private:
  void check_input(const Matrix& x) const;

  std::vector<std::size_t> sizes_;
  OutputActivation out_;
  std::vector<DenseLayer> layers_;
  Vector center_;
  Vector half_range_;
};

std::vector<double> flatten(const Gradients& g);

/// Loss (1/B) * sum_i w_i * ||net(x_i) - y_i||^2 and its parameter gradients.
/// Empty weights mean all ones.
struct LossAndGradients {
  double loss = 0.0;
  Gradients grads;
};
LossAndGradients squared_loss_gradients(const DenseNet& net, const Matrix& x, const Matrix& y,
                                        std::span<const double> weights = {});

/// target <- tau * online + (1 - tau) * target, layer by layer.
void polyak(DenseNet& target, const DenseNet& online, double tau);

enum class OptimizerKind { kSgd, kAdam };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kSgd;
  double lr = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Optimizer {
 public:
  Optimizer(const DenseNet& net, OptimizerConfig cfg);
  void step(DenseNet& net, const Gradients& g);
  const OptimizerConfig& config() const { return cfg_; }

 private:
  OptimizerConfig cfg_;
  std::vector<DenseLayer> m_, v_;
  long t_ = 0;
};

}  // namespace nmer
