// train.hpp
// Direct STBP training and the hybrid ANN -> SNN conversion route.
#ifndef LMHT_TRAIN_HPP
#define LMHT_TRAIN_HPP

#include <cstdint>
#include <vector>

#include "lmht/dataset.hpp"
#include "lmht/network.hpp"
#include "lmht/qann.hpp"

namespace lmht {

enum class TrainMode { Direct, VanillaReference, HybridFinetune };

struct TrainConfig {
  double learning_rate = 0.05;
  double weight_decay = 0.0;
  double momentum = 0.9;
  int epochs = 200;
  int batch_size = 32;
  std::uint64_t seed = 1;
  TrainMode mode = TrainMode::Direct;

  void validate() const;
};

struct TrainResult {
  NetworkSpec net;
  std::vector<EpochStats> history;
};

// Mini-batch SGD on softmax cross-entropy of the rate readout.
// Direct and HybridFinetune use the detached LM-HT backward pass,
// VanillaReference uses full BPTT and requires single-level layers.
// Throws TrainingError when the loss stops being finite.
TrainResult stbp_train(NetworkSpec net, const Dataset& data, const TrainConfig& cfg);

double accuracy(const NetworkSpec& net, const Dataset& data);

// Weights copied; theta = clip value; uniform mixing 1/T; leak 1;
// v0 = theta / 2; first-layer input scaled by L. Biases are scaled by L
// because one LM-HT step carries L vanilla steps worth of current.
NetworkSpec hybrid_convert(const QcfsNetwork& ann, int horizon, int levels);

// STBP fine-tuning with mixing and leak trainable and thresholds fixed.
TrainResult hybrid_finetune(NetworkSpec net, const Dataset& data, int epochs,
                            TrainConfig cfg = {});

}  // namespace lmht

#endif  // LMHT_TRAIN_HPP
