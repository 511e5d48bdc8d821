// tgim.hpp
// Temporal mixing of synaptic currents across all time-steps, with the
// mixing weights and the membrane leak kept in a bounded range through
// sigmoid views of unconstrained raw parameters.
#ifndef LMHT_TGIM_HPP
#define LMHT_TGIM_HPP

#include "lmht/numerics.hpp"

namespace lmht {

enum class TGimInit { Uniform, Identity };

struct TGimParams {
  Matrix raw_omega;  // T x T logits
  double raw_leak = 0.0;
  // Frozen mode: raw values are used as-is (no sigmoid) and are never
  // trained. Used for exact 0/1 identity mixing and for reparameterized
  // networks whose weights are not representable as sigmoids.
  bool bypass = false;

  int horizon() const { return static_cast<int>(raw_omega.rows()); }
};

// Logits are clamped to this magnitude so T = 1 stays finite.
inline constexpr double kLogitClamp = 12.0;

TGimParams init_params(TGimInit mode, int horizon);

// omega = sigmoid(raw_omega), leak = 2 * sigmoid(raw_leak); identity when
// bypass is set.
struct TGimView {
  Matrix omega;
  double leak;
};
TGimView constrained_view(const TGimParams& params);

// out(t) = sum_j omega(t, j) * raw(j); rows of raw are time-steps.
Matrix mix_currents(const Matrix& omega, const Matrix& raw);
Matrix mix_currents(const TGimParams& params, const Matrix& raw);

// d omega / d raw_omega and d leak / d raw_leak, elementwise.
Matrix omega_slope(const TGimParams& params);
double leak_slope(const TGimParams& params);

}  // namespace lmht

#endif  // LMHT_TGIM_HPP
