// numerics.hpp
// Dense storage, fixed-order affine maps and a counter-based RNG.
#ifndef LMHT_NUMERICS_HPP
#define LMHT_NUMERICS_HPP

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace lmht {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrix = MatrixX<double>;
using Vector = VectorX<double>;
// Rows are time-steps, columns are units.
using SpikeMatrix = MatrixX<int>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class DimensionError : public Error {
 public:
  using Error::Error;
};
class RangeError : public Error {
 public:
  using Error::Error;
};
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Wx + b, accumulated row by row, left to right, starting from b.
// The order is fixed so that two networks computing the same sums agree
// bit for bit.
template <typename Scalar>
VectorX<Scalar> affine(const MatrixX<Scalar>& weight, const VectorX<Scalar>& x,
                       const VectorX<Scalar>& bias) {
  if (weight.cols() != x.size() || weight.rows() != bias.size()) {
    throw DimensionError("affine: W is " + std::to_string(weight.rows()) + "x" +
                         std::to_string(weight.cols()) + ", x has " +
                         std::to_string(x.size()) + ", b has " +
                         std::to_string(bias.size()));
  }
  VectorX<Scalar> out(weight.rows());
  for (Eigen::Index i = 0; i < weight.rows(); ++i) {
    Scalar acc = bias[i];
    for (Eigen::Index k = 0; k < weight.cols(); ++k) acc += weight(i, k) * x[k];
    out[i] = acc;
  }
  return out;
}

template <typename Scalar>
Scalar sigmoid(Scalar x) {
  if (x >= Scalar(0)) return Scalar(1) / (Scalar(1) + std::exp(-x));
  const Scalar e = std::exp(x);
  return e / (Scalar(1) + e);
}

// Derivative of the sigmoid, expressed through its value.
template <typename Scalar>
Scalar sigmoid_slope(Scalar x) {
  const Scalar s = sigmoid(x);
  return s * (Scalar(1) - s);
}

template <typename Scalar>
Scalar logit(Scalar p) {
  return std::log(p) - std::log1p(-p);
}

/// Counter-based generator: the n-th draw is a pure function of
/// (key, n), so any trial can be regenerated from its seed and index
/// without replaying the others.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }

  // Independent child stream; does not advance this generator.
  Rng split(std::uint64_t stream) const;

  std::uint64_t next_u64();
  // Uniform on [0, 1) with 53 bits of resolution.
  double next_double();
  double uniform(double lo, double hi);
  // Uniform integer in [lo, hi].
  int uniform_int(int lo, int hi);
  double normal(double mean = 0.0, double stddev = 1.0);

 private:
  Rng(std::uint64_t seed, std::uint64_t key) : seed_(seed), key_(key) {}

  std::uint64_t seed_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

std::uint64_t mix64(std::uint64_t z);

// n samples from [lo, hi). Throws RangeError unless lo < hi.
Vector rng_uniform(Rng& rng, double lo, double hi, Eigen::Index n);
Matrix rng_uniform(Rng& rng, double lo, double hi, Eigen::Index rows,
                   Eigen::Index cols);

bool all_finite(const Matrix& m);

}  // namespace lmht

#endif  // LMHT_NUMERICS_HPP
