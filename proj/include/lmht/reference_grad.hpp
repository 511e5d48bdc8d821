// reference_grad.hpp
// Brute-force gradient evaluator for whole spiking networks. It re-runs
// the forward pass on a scalar reverse-mode tape, one node per scalar
// operation, and never touches LayerCache or the layer backward code.
// Spike nodes carry the surrogate window as their local derivative; in
// detached mode the previous potential enters the membrane update as a
// stop-gradient constant.
#ifndef LMHT_REFERENCE_GRAD_HPP
#define LMHT_REFERENCE_GRAD_HPP

#include <vector>

#include "lmht/network.hpp"

namespace lmht {

struct ReferenceGradients {
  double loss = 0.0;
  Vector logits;
  // input_spikes of layer l is d loss / d (presynaptic value at step t),
  // through the forward path only.
  std::vector<GradBundle> layers;
};

// Cross-entropy of one sample with label `label`.
ReferenceGradients reference_gradients(const NetworkSpec& net, const Vector& x, int label,
                                       BackwardMode mode);

// ||a - b|| / ||b|| over all components of every layer; 0 when both are
// zero.
double relative_gradient_error(const std::vector<GradBundle>& a,
                               const std::vector<GradBundle>& b);

inline constexpr double kGradientTolerance = 1e-10;

}  // namespace lmht

#endif  // LMHT_REFERENCE_GRAD_HPP
