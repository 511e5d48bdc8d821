// stbp.hpp
// Surrogate-gradient backpropagation through one spiking layer.
//
// Two chains are provided. backward_layer is the LM-HT rule: the
// membrane recurrence v(t-1) -> m(t) is cut, so gradients only move
// between time-steps through the mixing matrix and the leak parameter.
// vanilla_bptt_backward keeps the recurrence and serves as the classic
// single-threshold baseline.
#ifndef LMHT_STBP_HPP
#define LMHT_STBP_HPP

#include "lmht/layer.hpp"

namespace lmht {

// 1 where theta/2 <= m <= (levels + 1/2) * theta, else 0.
template <typename Derived>
Matrix surrogate_grad(const Eigen::MatrixBase<Derived>& m, double threshold,
                      int levels) {
  const double lo = 0.5 * threshold;
  const double hi = (levels + 0.5) * threshold;
  return m.derived().unaryExpr([lo, hi](double x) { return (lo <= x && x <= hi) ? 1.0 : 0.0; });
}

// Rectangular window 1 where |m - theta| <= theta/2.
template <typename Derived>
Matrix rect_surrogate_grad(const Eigen::MatrixBase<Derived>& m, double threshold) {
  const double half = 0.5 * threshold;
  return m.derived().unaryExpr(
      [threshold, half](double x) { return std::abs(x - threshold) <= half ? 1.0 : 0.0; });
}

/// Everything the backward pass needs from one forward pass of a layer.
struct LayerCache {
  Matrix input;           // T x in, presynaptic spikes times their gain
  double input_gain = 1;  // d input / d presynaptic spike
  Matrix raw;             // T x out, W input(t) + bias before mixing
  Matrix membrane;        // m(t)
  Matrix prev_potential;  // v(t-1)
  SpikeMatrix spikes;
  Matrix omega;           // constrained view used in the forward pass
  NeuronConfig neuron;    // includes the constrained leak
  double bias_scale = 1;
};

struct GradBundle {
  Matrix weight;
  Vector bias;
  Matrix raw_omega;
  double raw_leak = 0.0;
  Matrix input_spikes;  // T x in

  static GradBundle zeros_like(const LayerSpec& layer, int horizon);
  GradBundle& operator+=(const GradBundle& other);
  GradBundle& operator*=(double factor);
};

GradBundle backward_layer(const Matrix& grad_spikes, const LayerCache& cache,
                          const LayerSpec& layer);

// Full BPTT through the soft reset, with d v / d m = 1 - theta * h(m).
// Throws ConfigError for multi-level layers.
GradBundle vanilla_bptt_backward(const Matrix& grad_spikes, const LayerCache& cache,
                                 const LayerSpec& layer);

struct SgdConfig {
  double learning_rate = 0.05;
  double weight_decay = 0.0;
  double momentum = 0.0;
};

// p <- p - lr * (g + wd * p)
template <typename Derived, typename GradDerived>
void sgd_step(Eigen::MatrixBase<Derived>& param, const Eigen::MatrixBase<GradDerived>& grad,
              double learning_rate, double weight_decay) {
  param -= learning_rate * (grad + weight_decay * param);
}

inline void sgd_step(double& param, double grad, double learning_rate, double weight_decay) {
  param -= learning_rate * (grad + weight_decay * param);
}

/// SGD over a layer stack. Mixing and leak parameters never receive
/// weight decay, and frozen (bypass) ones are not updated at all.
class Sgd {
 public:
  explicit Sgd(SgdConfig cfg) : cfg_(cfg) {}
  void step(std::vector<LayerSpec>& layers, const std::vector<GradBundle>& grads);

 private:
  SgdConfig cfg_;
  std::vector<GradBundle> velocity_;
};

}  // namespace lmht

#endif  // LMHT_STBP_HPP
