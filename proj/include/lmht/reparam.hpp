// reparam.hpp
// Rewrites an L-level network over T steps as a single-threshold network
// over L*T steps. Each multi-level step becomes a window of L vanilla
// steps: mixing weights are spread evenly over L x L blocks, biases are
// split across the window, and the leak acts only at window starts.
#ifndef LMHT_REPARAM_HPP
#define LMHT_REPARAM_HPP

#include <vector>

#include "lmht/layer.hpp"
#include "lmht/network.hpp"

namespace lmht {

class UnsupportedLayerError : public Error {
 public:
  using Error::Error;
};

// Block-constant LT x LT matrix with value omega(t, i) / L in block (t, i).
Matrix expand_tgim(const Matrix& omega, int levels);

// Per-step biases (rows are steps) to L rows per step, each divided by L.
Matrix rectify_bias(const Matrix& per_step_bias, int levels);

struct ReparamLayerPlan {
  Matrix omega;   // expanded, LT x LT
  Matrix bias;    // rectified per-step bias, LT x out
  double leak = 1.0;
  int leak_period = 1;
};

struct ReparamPlan {
  int source_levels = 1;
  int source_horizon = 1;
  int target_horizon = 1;
  std::vector<ReparamLayerPlan> layers;
};

// Throws UnsupportedLayerError when layers disagree on L or a multi-level
// layer already has a windowed leak.
ReparamPlan plan_reparameterization(const NetworkSpec& net);

// Single-level layers pass through unchanged, which makes the
// transformation idempotent.
NetworkSpec reparameterize_network(const NetworkSpec& net);

struct EquivalenceReport {
  int inputs = 0;
  int window_mismatches = 0;        // (input, layer, window, unit) tuples
  double max_logit_deviation = 0.0;
  double max_current_deviation = 0.0;  // window sum of currents vs source
  SopReport source_sops;
  SopReport target_sops;
  double sop_relative_gap = 0.0;
  bool pass = false;
};

inline constexpr double kLogitTolerance = 1e-6;
inline constexpr double kSopTolerance = 1e-3;
inline constexpr double kCurrentTolerance = 1e-9;

// Runs both networks on every row of `inputs`. Passes when every
// per-window spike count matches, window current sums agree within 1e-9,
// logits within 1e-6 and SOPs within 0.1%.
EquivalenceReport verify_equivalence(const NetworkSpec& source, const NetworkSpec& target,
                                     const Matrix& inputs);

}  // namespace lmht

#endif  // LMHT_REPARAM_HPP
