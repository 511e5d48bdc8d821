// neuron.hpp
// Multi-level threshold neuron dynamics with soft reset. L = 1 gives the
// vanilla LIF neuron, and L = 1 with leak 1 gives IF.
#ifndef LMHT_NEURON_HPP
#define LMHT_NEURON_HPP

#include <utility>

#include "lmht/numerics.hpp"

namespace lmht {

struct NeuronConfig {
  double threshold = 1.0;
  int levels = 1;
  double leak = 1.0;
  double v0 = 0.0;
  // The leak multiplies v(t-1) only on steps t with t % leak_period == 0
  // (0-based); other steps integrate without leakage. 1 means every step.
  int leak_period = 1;

  void validate() const;
  double leak_at(int step) const { return step % leak_period == 0 ? leak : 1.0; }
};

struct NeuronLayerState {
  Vector v;
  int t = 0;
};

// Number of thresholds k*theta (k = 1..levels) that m reaches.
// Equal to clip(floor(m / theta), 0, levels), but decided by the same
// comparisons m >= k*theta that define the firing rule, so rounding in
// m / theta can never disagree with the reset that follows.
inline int fire_count(double m, double threshold, int levels) {
  if (!(m >= threshold)) return 0;
  const double q = std::floor(m / threshold);
  int s = q >= levels ? levels : static_cast<int>(q);
  if (s < 1) s = 1;
  while (s > 1 && m < s * threshold) --s;
  while (s < levels && m >= (s + 1) * threshold) ++s;
  return s;
}

template <typename Derived>
MatrixX<int> mht_fire(const Eigen::MatrixBase<Derived>& m, double threshold,
                      int levels) {
  MatrixX<int> s(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      s(i, j) = fire_count(static_cast<double>(m(i, j)), threshold, levels);
  return s;
}

struct StepResult {
  VectorX<int> spikes;
  Vector membrane;  // m(t), before reset
  NeuronLayerState state;
};

// m = leak * v + I; s = fire(m); v' = m - s * theta.
StepResult mht_step(const NeuronLayerState& state, const Vector& current,
                    const NeuronConfig& cfg);
// As mht_step; throws ConfigError unless cfg.levels == 1.
StepResult lif_step(const NeuronLayerState& state, const Vector& current,
                    const NeuronConfig& cfg);

NeuronLayerState initial_state(const NeuronConfig& cfg, Eigen::Index width);

struct SequenceResult {
  SpikeMatrix spikes;  // T x width
  Matrix membrane;     // m(t), T x width
  Matrix potential;    // v(t) after reset, T x width
};

// Runs T = currents.rows() steps from v(0) = cfg.v0.
SequenceResult run_sequence(const NeuronConfig& cfg, const Matrix& currents);

}  // namespace lmht

#endif  // LMHT_NEURON_HPP
