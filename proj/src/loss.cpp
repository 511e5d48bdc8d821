#include "lmht/loss.hpp"

#include <cmath>
#include <string>

namespace lmht {

int argmax(const Eigen::Ref<const Vector>& row) {
  int best = 0;
  for (Eigen::Index i = 1; i < row.size(); ++i)
    if (row[i] > row[best]) best = static_cast<int>(i);
  return best;
}

std::size_t count_correct(const Matrix& logits, std::span<const int> labels) {
  std::size_t correct = 0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i)
    if (argmax(logits.row(i).transpose()) == labels[static_cast<std::size_t>(i)]) ++correct;
  return correct;
}

LossResult loss_and_grad(const Matrix& logits, std::span<const int> labels) {
  if (static_cast<std::size_t>(logits.rows()) != labels.size())
    throw DimensionError("loss: " + std::to_string(logits.rows()) + " rows but " +
                         std::to_string(labels.size()) + " labels");
  LossResult out;
  const auto n = logits.rows();
  out.grad_logits.resize(n, logits.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const int label = labels[static_cast<std::size_t>(i)];
    if (label < 0 || label >= logits.cols())
      throw DimensionError("loss: label " + std::to_string(label) + " out of range");
    const double peak = logits.row(i).maxCoeff();
    const Eigen::RowVectorXd e = (logits.row(i).array() - peak).exp().matrix();
    const double z = e.sum();
    out.loss += std::log(z) - (logits(i, label) - peak);
    out.grad_logits.row(i) = e / z;
    out.grad_logits(i, label) -= 1.0;
  }
  out.loss /= static_cast<double>(n);
  out.grad_logits /= static_cast<double>(n);
  out.correct = count_correct(logits, labels);
  return out;
}

}  // namespace lmht
