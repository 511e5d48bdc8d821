// loss.hpp
#ifndef LMHT_LOSS_HPP
#define LMHT_LOSS_HPP

#include <span>
#include <vector>

#include "lmht/numerics.hpp"

namespace lmht {

struct LossResult {
  double loss = 0.0;    // mean softmax cross-entropy over the batch
  Matrix grad_logits;   // d loss / d logits, rows sum to zero
  std::size_t correct = 0;
};

LossResult loss_and_grad(const Matrix& logits, std::span<const int> labels);

// Index of the first maximal entry.
int argmax(const Eigen::Ref<const Vector>& row);
std::size_t count_correct(const Matrix& logits, std::span<const int> labels);

}  // namespace lmht

#endif  // LMHT_LOSS_HPP
