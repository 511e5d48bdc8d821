// network.hpp
// Layer-wise forward pass of an LM-HT network: affine map, temporal
// mixing, multi-level spiking dynamics. The readout is the output spike
// rate normalised by levels and horizon, (sum_t s(t) theta) / (L T).
#ifndef LMHT_NETWORK_HPP
#define LMHT_NETWORK_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include "lmht/layer.hpp"
#include "lmht/stbp.hpp"

namespace lmht {

// Energy per synaptic operation in mJ.
inline constexpr double kDefaultEnergyPerSop = 0.9e-9;

// Weight init gain. Larger values push most units outside the surrogate
// window at the first step, where they never receive a gradient.
inline constexpr double kInitGain = 0.125;

// Weights are uniform in +-sqrt(3 gain / fan_in), biases theta / 2;
// mixing is uniform (Identity gives frozen identity mixing with leak 1);
// theta = 1, v0 = 0, first-layer input scaled by `levels`.
NetworkSpec build_network(const std::vector<int>& arch, int horizon, int levels,
                          std::uint64_t seed, TGimInit mixing = TGimInit::Uniform);

struct SampleTrace {
  std::vector<SpikeMatrix> spikes;  // per layer, T x width
  std::vector<Matrix> currents;     // per layer, mixed input current I(t)
  Vector logits;
  std::vector<LayerCache> caches;   // filled only when recording
};

SampleTrace simulate(const NetworkSpec& net, const Eigen::Ref<const Vector>& x,
                     bool record = false);

struct SpikeStats {
  std::vector<Matrix> counts;  // per layer, T x width, summed over samples
  std::size_t samples = 0;
};

struct ForwardResult {
  Matrix logits;                               // N x classes
  std::vector<std::vector<LayerCache>> caches; // per sample, when recording
  std::optional<SpikeStats> stats;             // when recording
};

ForwardResult forward(const NetworkSpec& net, const Matrix& batch, bool record = false);

enum class BackwardMode { Detached, Vanilla };

// Gradients of every layer for one sample, given d loss / d logits.
std::vector<GradBundle> network_backward(const NetworkSpec& net,
                                         const std::vector<LayerCache>& caches,
                                         const Eigen::Ref<const Vector>& grad_logits,
                                         BackwardMode mode);

class InstrumentationError : public Error {
 public:
  using Error::Error;
};

struct SopReport {
  std::uint64_t sops = 0;
  double energy_mj = 0.0;
};

// Sum over layers, steps and units of spike count times fan-out. The
// output layer feeds the readout only and has no outgoing synapses.
SopReport count_sops(const NetworkSpec& net, const std::optional<SpikeStats>& stats,
                     double energy_per_sop = kDefaultEnergyPerSop);

}  // namespace lmht

#endif  // LMHT_NETWORK_HPP
