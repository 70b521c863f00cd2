#include "nmer/dense_net.hpp"

#include <cmath>
#include <random>
#include <string>

#include "nmer/error.hpp"

namespace nmer {

namespace {

std::vector<DenseLayer> zero_layers(const std::vector<std::size_t>& sizes) {
  std::vector<DenseLayer> layers;
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
    const auto in = static_cast<Eigen::Index>(sizes[i]);
    const auto out = static_cast<Eigen::Index>(sizes[i + 1]);
    layers.push_back({Matrix::Zero(out, in), Vector::Zero(out)});
  }
  return layers;
}

void check_shapes(const std::vector<DenseLayer>& a, const std::vector<DenseLayer>& b) {
  if (a.size() != b.size()) throw InvalidInput("networks have different depths");
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].w.rows() != b[i].w.rows() || a[i].w.cols() != b[i].w.cols()) {
      throw InvalidInput("networks have different layer shapes");
    }
  }
}

}  // namespace

DenseNet::DenseNet(std::vector<std::size_t> sizes, OutputActivation out)
    : sizes_(std::move(sizes)), out_(out) {
  if (sizes_.size() < 2) throw InvalidParameter("a network needs at least input and output sizes");
  for (auto s : sizes_) {
    if (s == 0) throw InvalidParameter("layer sizes must be positive");
  }
  layers_ = zero_layers(sizes_);
  center_ = Vector::Zero(static_cast<Eigen::Index>(output_dim()));
  half_range_ = Vector::Ones(static_cast<Eigen::Index>(output_dim()));
}

DenseNet::DenseNet(std::vector<std::size_t> sizes, OutputActivation out, Rng& rng)
    : DenseNet(std::move(sizes), out) {
  for (auto& layer : layers_) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer.w.cols()));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (Eigen::Index c = 0; c < layer.w.cols(); ++c) {
      for (Eigen::Index r = 0; r < layer.w.rows(); ++r) layer.w(r, c) = u(rng);
    }
    for (Eigen::Index r = 0; r < layer.b.size(); ++r) layer.b(r) = u(rng);
  }
}

void DenseNet::set_output_range(const Vector& center, const Vector& half_range) {
  if (center.size() != static_cast<Eigen::Index>(output_dim()) ||
      half_range.size() != center.size()) {
    throw InvalidInput("output range has wrong dimension");
  }
  center_ = center;
  half_range_ = half_range;
}

void DenseNet::check_input(const Matrix& x) const {
  if (x.rows() != static_cast<Eigen::Index>(input_dim())) {
    throw InvalidInput("network input has " + std::to_string(x.rows()) + " rows, expected " +
                       std::to_string(input_dim()));
  }
}

Matrix DenseNet::forward(const Matrix& x) const {
  Cache cache;
  return forward(x, cache);
}

Matrix DenseNet::forward(const Matrix& x, Cache& cache) const {
  check_input(x);
  cache.pre.resize(layers_.size());
  cache.post.resize(layers_.size() + 1);
  cache.post[0] = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    cache.pre[i].noalias() = layers_[i].w * cache.post[i];
    cache.pre[i].colwise() += layers_[i].b;
    if (i + 1 < layers_.size()) {
      cache.post[i + 1] = cache.pre[i].cwiseMax(0.0);
    } else if (out_ == OutputActivation::kTanh) {
      cache.post[i + 1] =
          (cache.pre[i].array().tanh().colwise() * half_range_.array()).colwise() +
          center_.array();
    } else {
      cache.post[i + 1] = cache.pre[i];
    }
  }
  return cache.post.back();
}

Gradients DenseNet::backward(const Cache& cache, const Matrix& d_output, Matrix* d_input) const {
  if (cache.post.size() != layers_.size() + 1) throw InvalidInput("stale forward cache");
  if (d_output.rows() != static_cast<Eigen::Index>(output_dim()) ||
      d_output.cols() != cache.post[0].cols()) {
    throw InvalidInput("output gradient has wrong shape");
  }
  Gradients g;
  g.layers.resize(layers_.size());
  Matrix delta;
  const std::size_t last = layers_.size() - 1;
  if (out_ == OutputActivation::kTanh) {
    const Matrix t = cache.pre[last].array().tanh().matrix();
    delta = (d_output.array().colwise() * half_range_.array()) * (1.0 - t.array().square());
  } else {
    delta = d_output;
  }
  for (std::size_t i = layers_.size(); i-- > 0;) {
    g.layers[i].w.noalias() = delta * cache.post[i].transpose();
    g.layers[i].b = delta.rowwise().sum();
    if (i == 0 && d_input == nullptr) break;
    Matrix upstream = layers_[i].w.transpose() * delta;
    if (i == 0) {
      *d_input = std::move(upstream);
      break;
    }
    delta = upstream.array() * (cache.pre[i - 1].array() > 0.0).cast<double>();
  }
  return g;
}

std::size_t DenseNet::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += static_cast<std::size_t>(l.w.size() + l.b.size());
  return n;
}

std::vector<double> DenseNet::parameters() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  for (const auto& l : layers_) {
    out.insert(out.end(), l.w.data(), l.w.data() + l.w.size());
    out.insert(out.end(), l.b.data(), l.b.data() + l.b.size());
  }
  return out;
}

void DenseNet::set_parameters(std::span<const double> values) {
  if (values.size() != parameter_count()) throw InvalidInput("parameter vector has wrong length");
  std::size_t pos = 0;
  for (auto& l : layers_) {
    std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(pos), l.w.size(), l.w.data());
    pos += static_cast<std::size_t>(l.w.size());
    std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(pos), l.b.size(), l.b.data());
    pos += static_cast<std::size_t>(l.b.size());
  }
}

std::vector<double> flatten(const Gradients& g) {
  std::vector<double> out;
  for (const auto& l : g.layers) {
    out.insert(out.end(), l.w.data(), l.w.data() + l.w.size());
    out.insert(out.end(), l.b.data(), l.b.data() + l.b.size());
  }
  return out;
}

LossAndGradients squared_loss_gradients(const DenseNet& net, const Matrix& x, const Matrix& y,
                                        std::span<const double> weights) {
  DenseNet::Cache cache;
  const Matrix out = net.forward(x, cache);
  if (y.rows() != out.rows() || y.cols() != out.cols()) {
    throw InvalidInput("targets have wrong shape");
  }
  const auto batch = out.cols();
  if (!weights.empty() && weights.size() != static_cast<std::size_t>(batch)) {
    throw InvalidInput("one weight per sample required");
  }
  Matrix diff = out - y;
  if (!weights.empty()) {
    for (Eigen::Index c = 0; c < batch; ++c) diff.col(c) *= std::sqrt(weights[c]);
  }
  LossAndGradients r;
  r.loss = diff.squaredNorm() / static_cast<double>(batch);
  Matrix d = out - y;
  if (!weights.empty()) {
    for (Eigen::Index c = 0; c < batch; ++c) d.col(c) *= weights[c];
  }
  d *= 2.0 / static_cast<double>(batch);
  r.grads = net.backward(cache, d);
  return r;
}

void polyak(DenseNet& target, const DenseNet& online, double tau) {
  check_shapes(target.layers(), online.layers());
  if (!(tau >= 0.0 && tau <= 1.0)) throw InvalidParameter("tau must lie in [0, 1]");
  if (tau == 1.0) {
    target.layers() = online.layers();
    return;
  }
  if (tau == 0.0) return;
  for (std::size_t i = 0; i < target.layers().size(); ++i) {
    auto& t = target.layers()[i];
    const auto& o = online.layers()[i];
    t.w = tau * o.w + (1.0 - tau) * t.w;
    t.b = tau * o.b + (1.0 - tau) * t.b;
  }
}

Optimizer::Optimizer(const DenseNet& net, OptimizerConfig cfg) : cfg_(cfg) {
  if (!(cfg_.lr >= 0.0)) throw InvalidParameter("learning rate must be >= 0");
  if (cfg_.kind == OptimizerKind::kAdam) {
    m_ = zero_layers(net.sizes());
    v_ = zero_layers(net.sizes());
  }
}

void Optimizer::step(DenseNet& net, const Gradients& g) {
  check_shapes(net.layers(), g.layers);
  if (cfg_.kind == OptimizerKind::kSgd) {
    for (std::size_t i = 0; i < g.layers.size(); ++i) {
      net.layers()[i].w -= cfg_.lr * g.layers[i].w;
      net.layers()[i].b -= cfg_.lr * g.layers[i].b;
    }
    return;
  }
  ++t_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  const double step = cfg_.lr * std::sqrt(c2) / c1;
  auto apply = [&](auto& param, auto& m, auto& v, const auto& grad) {
    m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * grad;
    v = cfg_.beta2 * v + (1.0 - cfg_.beta2) * grad.cwiseProduct(grad);
    param.array() -= step * m.array() / (v.array().sqrt() + cfg_.eps);
  };
  for (std::size_t i = 0; i < g.layers.size(); ++i) {
    apply(net.layers()[i].w, m_[i].w, v_[i].w, g.layers[i].w);
    apply(net.layers()[i].b, m_[i].b, v_[i].b, g.layers[i].b);
  }
}

}  // namespace nmer
