#include "lmht/numerics.hpp"

#include <numbers>

namespace lmht {

namespace {
constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
}

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Rng::Rng(std::uint64_t seed) : seed_(seed), key_(mix64(seed + kGolden)) {}

Rng Rng::split(std::uint64_t stream) const {
  return Rng(seed_, mix64(key_ ^ mix64(stream * kGolden + 0x632be59bd9b4e019ULL)));
}

std::uint64_t Rng::next_u64() {
  ++counter_;
  return mix64(key_ + counter_ * kGolden);
}

double Rng::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
  const double x = lo + (hi - lo) * next_double();
  // Rounding can land exactly on hi; keep the interval half-open.
  return x < hi ? x : std::nextafter(hi, lo);
}

int Rng::uniform_int(int lo, int hi) {
  const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
  return lo + static_cast<int>(next_u64() % span);
}

double Rng::normal(double mean, double stddev) {
  // Box-Muller; 1 - u keeps the log argument in (0, 1].
  const double u1 = 1.0 - next_double();
  const double u2 = next_double();
  const double r = std::sqrt(-2.0 * std::log(u1));
  return mean + stddev * r * std::cos(2.0 * std::numbers::pi * u2);
}

Vector rng_uniform(Rng& rng, double lo, double hi, Eigen::Index n) {
  if (!(lo < hi)) throw RangeError("rng_uniform: need lo < hi");
  Vector out(n);
  for (Eigen::Index i = 0; i < n; ++i) out[i] = rng.uniform(lo, hi);
  return out;
}

Matrix rng_uniform(Rng& rng, double lo, double hi, Eigen::Index rows,
                   Eigen::Index cols) {
  if (!(lo < hi)) throw RangeError("rng_uniform: need lo < hi");
  Matrix out(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) out(i, j) = rng.uniform(lo, hi);
  return out;
}

bool all_finite(const Matrix& m) { return m.allFinite(); }

}  // namespace lmht
