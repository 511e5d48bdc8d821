#include "lmht/reparam.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace lmht {

Matrix expand_tgim(const Matrix& omega, int levels) {
  if (levels < 1) throw ConfigError("expand_tgim: levels must be >= 1");
  if (levels == 1) return omega;
  Matrix out(omega.rows() * levels, omega.cols() * levels);
  for (Eigen::Index t = 0; t < omega.rows(); ++t)
    for (Eigen::Index i = 0; i < omega.cols(); ++i)
      out.block(t * levels, i * levels, levels, levels).setConstant(omega(t, i) / levels);
  return out;
}

Matrix rectify_bias(const Matrix& per_step_bias, int levels) {
  if (levels < 1) throw ConfigError("rectify_bias: levels must be >= 1");
  if (levels == 1) return per_step_bias;
  Matrix out(per_step_bias.rows() * levels, per_step_bias.cols());
  for (Eigen::Index t = 0; t < per_step_bias.rows(); ++t)
    for (int k = 0; k < levels; ++k) out.row(t * levels + k) = per_step_bias.row(t) / levels;
  return out;
}

ReparamPlan plan_reparameterization(const NetworkSpec& net) {
  net.validate();
  ReparamPlan plan;
  plan.source_levels = net.layers.front().levels;
  plan.source_horizon = net.horizon;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const LayerSpec& layer = net.layers[l];
    if (layer.levels != plan.source_levels)
      throw UnsupportedLayerError("reparam: layer " + std::to_string(l) + " has " +
                                  std::to_string(layer.levels) + " levels, layer 0 has " +
                                  std::to_string(plan.source_levels));
    if (layer.levels > 1 && layer.leak_period != 1)
      throw UnsupportedLayerError("reparam: layer " + std::to_string(l) +
                                  " is multi-level with a windowed leak");
  }
  const int levels = plan.source_levels;
  plan.target_horizon = net.horizon * levels;
  for (const LayerSpec& layer : net.layers) {
    const TGimView view = constrained_view(layer.tgim);
    Matrix bias(net.horizon, layer.out_width());
    bias.rowwise() = (layer.bias_scale * layer.bias).transpose();
    ReparamLayerPlan lp;
    lp.omega = expand_tgim(view.omega, levels);
    lp.bias = rectify_bias(bias, levels);
    lp.leak = view.leak;
    lp.leak_period = layer.leak_period * levels;
    plan.layers.push_back(std::move(lp));
  }
  return plan;
}

NetworkSpec reparameterize_network(const NetworkSpec& net) {
  const ReparamPlan plan = plan_reparameterization(net);
  const int levels = plan.source_levels;
  if (levels == 1) return net;

  NetworkSpec out;
  out.horizon = plan.target_horizon;
  // Each window sees the analog input L times, so it is split across them.
  out.input_scale = net.input_scale / levels;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const LayerSpec& src = net.layers[l];
    const ReparamLayerPlan& lp = plan.layers[l];
    LayerSpec dst;
    dst.weight = src.weight;
    dst.bias = src.bias;
    // Biases are constant over time, so the rectified rows all equal
    // bias * bias_scale / L.
    dst.bias_scale = src.bias_scale / levels;
    dst.threshold = src.threshold;
    dst.levels = 1;
    dst.v0 = src.v0;
    dst.leak_period = lp.leak_period;
    dst.tgim.raw_omega = lp.omega;
    dst.tgim.raw_leak = lp.leak;
    dst.tgim.bypass = true;
    out.layers.push_back(std::move(dst));
  }
  return out;
}

EquivalenceReport verify_equivalence(const NetworkSpec& source, const NetworkSpec& target,
                                     const Matrix& inputs) {
  source.validate();
  target.validate();
  if (source.layers.size() != target.layers.size())
    throw DimensionError("verify_equivalence: networks differ in depth");
  if (target.horizon % source.horizon != 0)
    throw DimensionError("verify_equivalence: target horizon is not a multiple of source horizon");
  const int window = target.horizon / source.horizon;

  EquivalenceReport report;
  SpikeStats src_stats, dst_stats;
  for (std::size_t l = 0; l < source.layers.size(); ++l) {
    src_stats.counts.push_back(Matrix::Zero(source.horizon, source.layers[l].out_width()));
    dst_stats.counts.push_back(Matrix::Zero(target.horizon, target.layers[l].out_width()));
  }

  for (Eigen::Index n = 0; n < inputs.rows(); ++n) {
    const SampleTrace a = simulate(source, inputs.row(n).transpose());
    const SampleTrace b = simulate(target, inputs.row(n).transpose());
    ++report.inputs;
    for (std::size_t l = 0; l < a.spikes.size(); ++l) {
      src_stats.counts[l] += a.spikes[l].cast<double>();
      dst_stats.counts[l] += b.spikes[l].cast<double>();
      for (int t = 0; t < source.horizon; ++t) {
        const Eigen::RowVectorXi summed = b.spikes[l].middleRows(t * window, window).colwise().sum();
        report.window_mismatches += static_cast<int>((summed.array() != a.spikes[l].row(t).array()).count());
        const Eigen::RowVectorXd current = b.currents[l].middleRows(t * window, window).colwise().sum();
        report.max_current_deviation = std::max(
            report.max_current_deviation, (current - a.currents[l].row(t)).cwiseAbs().maxCoeff());
      }
    }
    report.max_logit_deviation =
        std::max(report.max_logit_deviation, (a.logits - b.logits).cwiseAbs().maxCoeff());
  }
  src_stats.samples = dst_stats.samples = static_cast<std::size_t>(report.inputs);
  report.source_sops = count_sops(source, src_stats);
  report.target_sops = count_sops(target, dst_stats);
  const double s0 = static_cast<double>(report.source_sops.sops);
  const double s1 = static_cast<double>(report.target_sops.sops);
  report.sop_relative_gap = s0 == 0.0 ? (s1 == 0.0 ? 0.0 : 1.0) : std::abs(s1 - s0) / s0;
  report.pass = report.window_mismatches == 0 && report.max_logit_deviation <= kLogitTolerance &&
                report.max_current_deviation <= kCurrentTolerance &&
                report.sop_relative_gap <= kSopTolerance;
  return report;
}

}  // namespace lmht
