#include "lmht/network.hpp"

#include <cmath>
#include <string>

namespace lmht {

NeuronConfig LayerSpec::neuron() const {
  NeuronConfig cfg;
  cfg.threshold = threshold;
  cfg.levels = levels;
  cfg.leak = constrained_view(tgim).leak;
  cfg.v0 = v0;
  cfg.leak_period = leak_period;
  return cfg;
}

void NetworkSpec::validate() const {
  if (layers.empty()) throw ConfigError("network: no layers");
  if (horizon < 1) throw ConfigError("network: horizon must be >= 1");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const LayerSpec& layer = layers[l];
    const std::string where = "network: layer " + std::to_string(l);
    if (layer.bias.size() != layer.out_width()) throw DimensionError(where + " bias width");
    if (l > 0 && layer.in_width() != layers[l - 1].out_width())
      throw DimensionError(where + " input width does not match previous layer");
    if (layer.tgim.horizon() != horizon || layer.tgim.raw_omega.cols() != horizon)
      throw DimensionError(where + " mixing matrix is not horizon x horizon");
    layer.neuron().validate();
  }
}

NetworkSpec build_network(const std::vector<int>& arch, int horizon, int levels,
                          std::uint64_t seed, TGimInit mixing) {
  if (arch.size() < 2) throw ConfigError("build_network: need at least two widths");
  for (int w : arch)
    if (w < 1) throw ConfigError("build_network: widths must be positive");
  if (levels < 1) throw ConfigError("build_network: levels must be >= 1");
  NetworkSpec net;
  net.horizon = horizon;
  net.input_scale = levels;
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < arch.size(); ++l) {
    LayerSpec layer;
    const double a = std::sqrt(3.0 * kInitGain / arch[l]);
    layer.weight = rng_uniform(rng, -a, a, arch[l + 1], arch[l]);
    layer.threshold = 1.0;
    // Start every unit at the lower edge of the surrogate window.
    layer.bias = Vector::Constant(arch[l + 1], 0.5 * layer.threshold);
    layer.levels = levels;
    layer.v0 = 0.0;
    layer.tgim = init_params(mixing, horizon);
    net.layers.push_back(std::move(layer));
  }
  return net;
}

SampleTrace simulate(const NetworkSpec& net, const Eigen::Ref<const Vector>& x, bool record) {
  if (x.size() != net.input_width())
    throw DimensionError("forward: input width " + std::to_string(x.size()) + ", expected " +
                         std::to_string(net.input_width()));
  const int steps = net.horizon;
  SampleTrace trace;
  Matrix input(steps, x.size());
  for (int t = 0; t < steps; ++t) input.row(t) = net.input_scale * x.transpose();
  double gain = net.input_scale;

  for (const LayerSpec& layer : net.layers) {
    const Vector bias = layer.bias_scale * layer.bias;
    Matrix raw(steps, layer.out_width());
    for (int t = 0; t < steps; ++t)
      raw.row(t) = affine<double>(layer.weight, input.row(t).transpose(), bias).transpose();
    const TGimView view = constrained_view(layer.tgim);
    Matrix current = mix_currents(view.omega, raw);
    NeuronConfig cfg = layer.neuron();
    SequenceResult seq = run_sequence(cfg, current);

    Matrix next_input = seq.spikes.cast<double>() * layer.threshold;
    if (record) {
      LayerCache cache;
      cache.input = std::move(input);
      cache.input_gain = gain;
      cache.raw = std::move(raw);
      cache.membrane = seq.membrane;
      cache.prev_potential.resize(steps, layer.out_width());
      cache.prev_potential.row(0).setConstant(cfg.v0);
      if (steps > 1) cache.prev_potential.bottomRows(steps - 1) = seq.potential.topRows(steps - 1);
      cache.spikes = seq.spikes;
      cache.omega = view.omega;
      cache.neuron = cfg;
      cache.bias_scale = layer.bias_scale;
      trace.caches.push_back(std::move(cache));
    }
    trace.currents.push_back(std::move(current));
    trace.spikes.push_back(std::move(seq.spikes));
    input = std::move(next_input);
    gain = layer.threshold;
  }

  const LayerSpec& out = net.layers.back();
  const double norm = out.threshold / (static_cast<double>(out.levels) * steps);
  trace.logits = trace.spikes.back().cast<double>().colwise().sum().transpose() * norm;
  return trace;
}

ForwardResult forward(const NetworkSpec& net, const Matrix& batch, bool record) {
  net.validate();
  ForwardResult out;
  out.logits.resize(batch.rows(), net.output_width());
  SpikeStats stats;
  if (record) {
    for (const auto& layer : net.layers)
      stats.counts.push_back(Matrix::Zero(net.horizon, layer.out_width()));
  }
  for (Eigen::Index i = 0; i < batch.rows(); ++i) {
    SampleTrace trace = simulate(net, batch.row(i).transpose(), record);
    out.logits.row(i) = trace.logits.transpose();
    if (record) {
      for (std::size_t l = 0; l < trace.spikes.size(); ++l)
        stats.counts[l] += trace.spikes[l].cast<double>();
      ++stats.samples;
      out.caches.push_back(std::move(trace.caches));
    }
  }
  if (record) out.stats = std::move(stats);
  return out;
}

std::vector<GradBundle> network_backward(const NetworkSpec& net,
                                         const std::vector<LayerCache>& caches,
                                         const Eigen::Ref<const Vector>& grad_logits,
                                         BackwardMode mode) {
  if (caches.size() != net.layers.size())
    throw DimensionError("network_backward: cache count does not match layer count");
  const int steps = net.horizon;
  const LayerSpec& out = net.layers.back();
  const double norm = out.threshold / (static_cast<double>(out.levels) * steps);
  // Every step contributes equally to the rate readout.
  Matrix grad_spikes = Matrix::Zero(steps, out.out_width());
  grad_spikes.rowwise() = norm * grad_logits.transpose();

  std::vector<GradBundle> grads(net.layers.size());
  for (std::size_t l = net.layers.size(); l-- > 0;) {
    grads[l] = mode == BackwardMode::Vanilla
                   ? vanilla_bptt_backward(grad_spikes, caches[l], net.layers[l])
                   : backward_layer(grad_spikes, caches[l], net.layers[l]);
    grad_spikes = grads[l].input_spikes;
  }
  return grads;
}

SopReport count_sops(const NetworkSpec& net, const std::optional<SpikeStats>& stats,
                     double energy_per_sop) {
  if (!stats) throw InstrumentationError("count_sops: forward pass did not record spike stats");
  if (stats->counts.size() != net.layers.size())
    throw InstrumentationError("count_sops: stats do not match network depth");
  SopReport report;
  for (std::size_t l = 0; l + 1 < net.layers.size(); ++l) {
    const auto fan_out = static_cast<std::uint64_t>(net.layers[l + 1].out_width());
    const double total = stats->counts[l].sum();
    report.sops += static_cast<std::uint64_t>(std::llround(total)) * fan_out;
  }
  report.energy_mj = static_cast<double>(report.sops) * energy_per_sop;
  return report;
}

}  // namespace lmht
