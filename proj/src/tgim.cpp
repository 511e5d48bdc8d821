#include "lmht/tgim.hpp"

#include <algorithm>
#include <string>

namespace lmht {

TGimParams init_params(TGimInit mode, int horizon) {
  if (horizon < 1) throw ConfigError("tgim: horizon must be >= 1");
  TGimParams p;
  if (mode == TGimInit::Identity) {
    p.raw_omega = Matrix::Identity(horizon, horizon);
    p.raw_leak = 1.0;
    p.bypass = true;
    return p;
  }
  const double z = std::clamp(logit(1.0 / horizon), -kLogitClamp, kLogitClamp);
  p.raw_omega = Matrix::Constant(horizon, horizon, z);
  p.raw_leak = 0.0;
  return p;
}

TGimView constrained_view(const TGimParams& params) {
  if (params.bypass) return {params.raw_omega, params.raw_leak};
  return {params.raw_omega.unaryExpr([](double x) { return sigmoid(x); }),
          2.0 * sigmoid(params.raw_leak)};
}

Matrix mix_currents(const Matrix& omega, const Matrix& raw) {
  if (omega.rows() != raw.rows() || omega.cols() != raw.rows()) {
    throw DimensionError("mix_currents: omega is " + std::to_string(omega.rows()) +
                         "x" + std::to_string(omega.cols()) + " but currents have " +
                         std::to_string(raw.rows()) + " steps");
  }
  // Explicit loop: the summation order over j is part of the contract.
  Matrix out = Matrix::Zero(raw.rows(), raw.cols());
  for (Eigen::Index t = 0; t < omega.rows(); ++t)
    for (Eigen::Index j = 0; j < omega.cols(); ++j)
      out.row(t) += omega(t, j) * raw.row(j);
  return out;
}

Matrix mix_currents(const TGimParams& params, const Matrix& raw) {
  return mix_currents(constrained_view(params).omega, raw);
}

Matrix omega_slope(const TGimParams& params) {
  if (params.bypass) return Matrix::Ones(params.raw_omega.rows(), params.raw_omega.cols());
  return params.raw_omega.unaryExpr([](double x) { return sigmoid_slope(x); });
}

double leak_slope(const TGimParams& params) {
  return params.bypass ? 1.0 : 2.0 * sigmoid_slope(params.raw_leak);
}

}  // namespace lmht
