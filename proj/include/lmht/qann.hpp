// qann.hpp
// Quantization-clip-floor-shift activation and a small quantized MLP that
// feeds the ANN-to-SNN conversion path.
#ifndef LMHT_QANN_HPP
#define LMHT_QANN_HPP

#include <cstdint>
#include <vector>

#include "lmht/dataset.hpp"
#include "lmht/numerics.hpp"

namespace lmht {

struct QcfsConfig {
  int levels = 4;      // quantization level T_q
  double scale = 1.0;  // learnable clip value
  double shift = 0.5;  // conventionally scale / 2

  void validate() const;
};

// (scale / T_q) * clip(floor((x T_q + shift) / scale), 0, T_q)
Matrix qcfs_forward(const Matrix& x, const QcfsConfig& cfg);
// The integer bucket clip(floor(...), 0, T_q) for a single value.
int qcfs_level(double x, const QcfsConfig& cfg);

struct QcfsGrad {
  Matrix input;
  double scale = 0.0;
};

// Straight-through estimator. Treating the floor as identity the
// activation is scale * clamp(u, 0, 1) with u = (x T_q + shift)/(scale T_q),
// so d/dx passes through where 0 <= (x T_q + shift)/scale <= T_q and the
// scale gradient is q/T_q - x/scale inside the range, 1 above it, 0 below.
QcfsGrad qcfs_backward(const Matrix& grad_out, const Matrix& x, const QcfsConfig& cfg);

struct QcfsLayer {
  Matrix weight;  // out x in
  Vector bias;
  double scale = 1.0;
};

struct QcfsNetwork {
  std::vector<QcfsLayer> layers;
  int levels = 4;

  QcfsConfig config(std::size_t layer) const {
    const double s = layers[layer].scale;
    return {levels, s, 0.5 * s};
  }
  // Every layer, the last included, uses the QCFS activation; the output
  // activations are the logits.
  Matrix forward(const Matrix& batch) const;
  // Per-layer activations; element 0 is the input batch.
  std::vector<Matrix> activations(const Matrix& batch) const;
};

struct QcfsTrainConfig {
  std::vector<int> arch{2, 32, 32, 3};
  int levels = 4;
  double learning_rate = 0.1;
  double weight_decay = 0.0;
  double momentum = 0.9;
  int epochs = 300;
  int batch_size = 32;
  std::uint64_t seed = 1;
};

struct EpochStats {
  int epoch = 0;
  double loss = 0.0;
  double accuracy = 0.0;
};

class TrainingError : public Error {
 public:
  TrainingError(const std::string& what, int epoch)
      : Error(what + " at epoch " + std::to_string(epoch)), epoch_(epoch) {}
  int epoch() const { return epoch_; }

 private:
  int epoch_;
};

QcfsNetwork build_qcfs_network(const std::vector<int>& arch, int levels, std::uint64_t seed);

struct QcfsTrainResult {
  QcfsNetwork net;
  std::vector<EpochStats> history;
};

QcfsTrainResult train_qcfs_ann(const Dataset& data, const QcfsTrainConfig& cfg);
QcfsTrainResult train_qcfs_ann(QcfsNetwork net, const Dataset& data, const QcfsTrainConfig& cfg);

double accuracy(const QcfsNetwork& net, const Dataset& data);

}  // namespace lmht

#endif  // LMHT_QANN_HPP
