#include "lmht/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lmht/loss.hpp"

namespace lmht {

void TrainConfig::validate() const {
  // lr = 0 is accepted: it is the frozen-network control run.
  if (!(learning_rate >= 0.0)) throw ConfigError("train: learning rate must be >= 0");
  if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("train: batch size must be >= 1");
}

double accuracy(const NetworkSpec& net, const Dataset& data) {
  const ForwardResult fr = forward(net, data.features);
  return static_cast<double>(count_correct(fr.logits, data.labels)) / data.size();
}

TrainResult stbp_train(NetworkSpec net, const Dataset& data, const TrainConfig& cfg) {
  cfg.validate();
  net.validate();
  if (data.size() == 0) throw ConfigError("stbp_train: empty dataset");
  const BackwardMode mode =
      cfg.mode == TrainMode::VanillaReference ? BackwardMode::Vanilla : BackwardMode::Detached;
  if (mode == BackwardMode::Vanilla)
    for (const auto& layer : net.layers)
      if (layer.levels != 1) throw ConfigError("stbp_train: vanilla reference needs levels == 1");

  TrainResult result;
  Sgd sgd({cfg.learning_rate, cfg.weight_decay, cfg.momentum});
  Rng shuffle_rng = Rng(cfg.seed).split(2);
  std::vector<std::size_t> order(static_cast<std::size_t>(data.size()));
  std::iota(order.begin(), order.end(), 0);
  const auto batch = static_cast<std::size_t>(cfg.batch_size);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[shuffle_rng.next_u64() % i]);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t stop = std::min(order.size(), start + batch);
      const Dataset mb = data.subset({order.begin() + static_cast<std::ptrdiff_t>(start),
                                      order.begin() + static_cast<std::ptrdiff_t>(stop)});
      const ForwardResult fr = forward(net, mb.features, true);
      const LossResult lr = loss_and_grad(fr.logits, mb.labels);
      if (!std::isfinite(lr.loss)) throw TrainingError("stbp_train: loss is not finite", epoch);
      loss_sum += lr.loss * static_cast<double>(stop - start);

      std::vector<GradBundle> total;
      for (Eigen::Index i = 0; i < mb.size(); ++i) {
        // grad_logits already carries the 1/batch factor of the mean loss.
        auto grads = network_backward(net, fr.caches[static_cast<std::size_t>(i)],
                                      lr.grad_logits.row(i).transpose(), mode);
        if (total.empty()) {
          total = std::move(grads);
        } else {
          for (std::size_t l = 0; l < total.size(); ++l) total[l] += grads[l];
        }
      }
      sgd.step(net.layers, total);
    }
    EpochStats stats;
    stats.epoch = epoch;
    stats.loss = loss_sum / static_cast<double>(data.size());
    stats.accuracy = accuracy(net, data);
    result.history.push_back(stats);
  }
  result.net = std::move(net);
  return result;
}

NetworkSpec hybrid_convert(const QcfsNetwork& ann, int horizon, int levels) {
  if (ann.layers.empty()) throw ConfigError("hybrid_convert: ANN has no layers");
  if (horizon < 1 || levels < 1) throw ConfigError("hybrid_convert: horizon and levels must be >= 1");
  NetworkSpec net;
  net.horizon = horizon;
  net.input_scale = levels;
  for (const QcfsLayer& src : ann.layers) {
    LayerSpec layer;
    layer.weight = src.weight;
    layer.bias = static_cast<double>(levels) * src.bias;
    layer.threshold = src.scale;
    layer.levels = levels;
    layer.v0 = 0.5 * layer.threshold;
    layer.tgim = init_params(TGimInit::Uniform, horizon);
    net.layers.push_back(std::move(layer));
  }
  return net;
}

TrainResult hybrid_finetune(NetworkSpec net, const Dataset& data, int epochs, TrainConfig cfg) {
  if (epochs <= 0) return {std::move(net), {}};
  cfg.epochs = epochs;
  cfg.mode = TrainMode::HybridFinetune;
  return stbp_train(std::move(net), data, cfg);
}

}  // namespace lmht
