#include "lmht/stbp.hpp"

#include <string>

namespace lmht {

namespace {

void check_shapes(const Matrix& grad_spikes, const LayerCache& cache,
                  const LayerSpec& layer) {
  if (grad_spikes.rows() != cache.membrane.rows() ||
      grad_spikes.cols() != cache.membrane.cols()) {
    throw DimensionError("backward: grad is " + std::to_string(grad_spikes.rows()) + "x" +
                         std::to_string(grad_spikes.cols()) + ", cache is " +
                         std::to_string(cache.membrane.rows()) + "x" +
                         std::to_string(cache.membrane.cols()));
  }
  if (cache.input.cols() != layer.in_width() || cache.raw.cols() != layer.out_width()) {
    throw DimensionError("backward: cache does not match layer widths");
  }
}

// Shared tail: given dL/dm(t), push through the mixing matrix and the
// affine map. The W gradient collects every step j that step t mixed in:
// dI(t)/dW = sum_j omega(t, j) input(j)^T.
GradBundle finish(const Matrix& grad_membrane, const LayerCache& cache,
                  const LayerSpec& layer) {
  const auto steps = cache.membrane.rows();
  GradBundle g;

  double grad_leak = 0.0;
  for (Eigen::Index t = 0; t < steps; ++t) {
    if (t % cache.neuron.leak_period != 0) continue;
    grad_leak += grad_membrane.row(t).dot(cache.prev_potential.row(t));
  }
  const Matrix grad_omega = grad_membrane * cache.raw.transpose();  // (i, j)
  const Matrix grad_raw = cache.omega.transpose() * grad_membrane;

  g.weight = grad_raw.transpose() * cache.input;
  g.bias = cache.bias_scale * grad_raw.colwise().sum().transpose();
  g.raw_omega = grad_omega.cwiseProduct(omega_slope(layer.tgim));
  g.raw_leak = grad_leak * leak_slope(layer.tgim);
  g.input_spikes = cache.input_gain * (grad_raw * layer.weight);
  return g;
}

}  // namespace

GradBundle GradBundle::zeros_like(const LayerSpec& layer, int horizon) {
  GradBundle g;
  g.weight = Matrix::Zero(layer.weight.rows(), layer.weight.cols());
  g.bias = Vector::Zero(layer.bias.size());
  g.raw_omega = Matrix::Zero(layer.tgim.raw_omega.rows(), layer.tgim.raw_omega.cols());
  g.raw_leak = 0.0;
  g.input_spikes = Matrix::Zero(horizon, layer.in_width());
  return g;
}

GradBundle& GradBundle::operator+=(const GradBundle& other) {
  weight += other.weight;
  bias += other.bias;
  raw_omega += other.raw_omega;
  raw_leak += other.raw_leak;
  if (input_spikes.size() == other.input_spikes.size()) input_spikes += other.input_spikes;
  return *this;
}

GradBundle& GradBundle::operator*=(double factor) {
  weight *= factor;
  bias *= factor;
  raw_omega *= factor;
  raw_leak *= factor;
  input_spikes *= factor;
  return *this;
}

GradBundle backward_layer(const Matrix& grad_spikes, const LayerCache& cache,
                          const LayerSpec& layer) {
  check_shapes(grad_spikes, cache, layer);
  const Matrix h = surrogate_grad(cache.membrane, cache.neuron.threshold, cache.neuron.levels);
  return finish(grad_spikes.cwiseProduct(h), cache, layer);
}

GradBundle vanilla_bptt_backward(const Matrix& grad_spikes, const LayerCache& cache,
                                 const LayerSpec& layer) {
  if (cache.neuron.levels != 1) {
    throw ConfigError("vanilla_bptt_backward: requires levels == 1, got " +
                      std::to_string(cache.neuron.levels));
  }
  check_shapes(grad_spikes, cache, layer);
  const double theta = cache.neuron.threshold;
  const Matrix h = rect_surrogate_grad(cache.membrane, theta);
  const auto steps = cache.membrane.rows();
  Matrix grad_membrane(steps, cache.membrane.cols());
  for (Eigen::Index t = steps - 1; t >= 0; --t) {
    grad_membrane.row(t) = grad_spikes.row(t).cwiseProduct(h.row(t));
    if (t + 1 < steps) {
      // m(t+1) = leak * v(t) + I(t+1), v(t) = m(t) - s(t) * theta.
      const double leak = cache.neuron.leak_at(static_cast<int>(t + 1));
      const auto dv_dm = (1.0 - theta * h.row(t).array()).matrix();
      grad_membrane.row(t) += (leak * grad_membrane.row(t + 1)).cwiseProduct(dv_dm);
    }
  }
  return finish(grad_membrane, cache, layer);
}

void Sgd::step(std::vector<LayerSpec>& layers, const std::vector<GradBundle>& grads) {
  if (grads.size() != layers.size()) throw DimensionError("sgd: gradient count mismatch");
  const double lr = cfg_.learning_rate;
  const double wd = cfg_.weight_decay;
  const double mu = cfg_.momentum;
  if (velocity_.size() != layers.size()) {
    velocity_.clear();
    for (const auto& layer : layers) velocity_.push_back(GradBundle::zeros_like(layer, 1));
  }
  for (std::size_t l = 0; l < layers.size(); ++l) {
    LayerSpec& layer = layers[l];
    const GradBundle& g = grads[l];
    GradBundle& v = velocity_[l];
    if (mu == 0.0) {
      sgd_step(layer.weight, g.weight, lr, wd);
      sgd_step(layer.bias, g.bias, lr, wd);
      if (!layer.tgim.bypass) {
        sgd_step(layer.tgim.raw_omega, g.raw_omega, lr, 0.0);
        sgd_step(layer.tgim.raw_leak, g.raw_leak, lr, 0.0);
      }
      continue;
    }
    v.weight = mu * v.weight + g.weight + wd * layer.weight;
    v.bias = mu * v.bias + g.bias + wd * layer.bias;
    layer.weight -= lr * v.weight;
    layer.bias -= lr * v.bias;
    if (!layer.tgim.bypass) {
      v.raw_omega = mu * v.raw_omega + g.raw_omega;
      v.raw_leak = mu * v.raw_leak + g.raw_leak;
      layer.tgim.raw_omega -= lr * v.raw_omega;
      layer.tgim.raw_leak -= lr * v.raw_leak;
    }
  }
}

}  // namespace lmht
