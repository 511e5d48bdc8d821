#include "lmht/neuron.hpp"

#include <string>

namespace lmht {

void NeuronConfig::validate() const {
  if (!(threshold > 0.0)) throw ConfigError("neuron: threshold must be positive");
  if (levels < 1) throw ConfigError("neuron: levels must be >= 1");
  if (leak_period < 1) throw ConfigError("neuron: leak_period must be >= 1");
}

NeuronLayerState initial_state(const NeuronConfig& cfg, Eigen::Index width) {
  return {Vector::Constant(width, cfg.v0), 0};
}

StepResult mht_step(const NeuronLayerState& state, const Vector& current,
                    const NeuronConfig& cfg) {
  if (state.v.size() != current.size()) {
    throw DimensionError("mht_step: state width " + std::to_string(state.v.size()) +
                         " vs current width " + std::to_string(current.size()));
  }
  const double leak = cfg.leak_at(state.t);
  StepResult out;
  out.membrane.resize(current.size());
  out.spikes.resize(current.size());
  out.state.v.resize(current.size());
  out.state.t = state.t + 1;
  for (Eigen::Index i = 0; i < current.size(); ++i) {
    const double m = leak * state.v[i] + current[i];
    const int s = fire_count(m, cfg.threshold, cfg.levels);
    out.membrane[i] = m;
    out.spikes[i] = s;
    out.state.v[i] = m - s * cfg.threshold;
  }
  return out;
}

StepResult lif_step(const NeuronLayerState& state, const Vector& current,
                    const NeuronConfig& cfg) {
  if (cfg.levels != 1) throw ConfigError("lif_step: requires levels == 1");
  return mht_step(state, current, cfg);
}

SequenceResult run_sequence(const NeuronConfig& cfg, const Matrix& currents) {
  cfg.validate();
  const Eigen::Index steps = currents.rows();
  const Eigen::Index width = currents.cols();
  SequenceResult out{SpikeMatrix(steps, width), Matrix(steps, width),
                     Matrix(steps, width)};
  NeuronLayerState state = initial_state(cfg, width);
  for (Eigen::Index t = 0; t < steps; ++t) {
    StepResult step = mht_step(state, currents.row(t).transpose(), cfg);
    out.spikes.row(t) = step.spikes.transpose();
    out.membrane.row(t) = step.membrane.transpose();
    out.potential.row(t) = step.state.v.transpose();
    state = std::move(step.state);
  }
  return out;
}

}  // namespace lmht
