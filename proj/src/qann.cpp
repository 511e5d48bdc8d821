#include "lmht/qann.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lmht/loss.hpp"
#include "lmht/stbp.hpp"

namespace lmht {

void QcfsConfig::validate() const {
  if (levels < 1) throw ConfigError("qcfs: levels must be >= 1");
  if (!(scale > 0.0)) throw ConfigError("qcfs: scale must be positive");
}

int qcfs_level(double x, const QcfsConfig& cfg) {
  const double q = std::floor((x * cfg.levels + cfg.shift) / cfg.scale);
  if (!(q > 0.0)) return 0;
  return q >= cfg.levels ? cfg.levels : static_cast<int>(q);
}

Matrix qcfs_forward(const Matrix& x, const QcfsConfig& cfg) {
  cfg.validate();
  const double step = cfg.scale / cfg.levels;
  return x.unaryExpr([&](double v) { return step * qcfs_level(v, cfg); });
}

QcfsGrad qcfs_backward(const Matrix& grad_out, const Matrix& x, const QcfsConfig& cfg) {
  if (grad_out.rows() != x.rows() || grad_out.cols() != x.cols())
    throw DimensionError("qcfs_backward: gradient and cache shapes differ");
  QcfsGrad g;
  g.input = Matrix::Zero(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const double u = (x(i, j) * cfg.levels + cfg.shift) / cfg.scale;
      if (u < 0.0) continue;
      if (u > cfg.levels) {
        g.scale += grad_out(i, j);
        continue;
      }
      g.input(i, j) = grad_out(i, j);
      const double q = qcfs_level(x(i, j), cfg);
      g.scale += grad_out(i, j) * (q / cfg.levels - x(i, j) / cfg.scale);
    }
  }
  return g;
}

std::vector<Matrix> QcfsNetwork::activations(const Matrix& batch) const {
  std::vector<Matrix> acts{batch};
  for (std::size_t l = 0; l < layers.size(); ++l) {
    Matrix pre = acts.back() * layers[l].weight.transpose();
    pre.rowwise() += layers[l].bias.transpose();
    acts.push_back(qcfs_forward(pre, config(l)));
  }
  return acts;
}

Matrix QcfsNetwork::forward(const Matrix& batch) const { return activations(batch).back(); }

QcfsNetwork build_qcfs_network(const std::vector<int>& arch, int levels, std::uint64_t seed) {
  if (arch.size() < 2) throw ConfigError("qcfs network: need at least two widths");
  QcfsNetwork net;
  net.levels = levels;
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < arch.size(); ++l) {
    const double a = std::sqrt(6.0 / arch[l]);
    QcfsLayer layer;
    layer.weight = rng_uniform(rng, -a, a, arch[l + 1], arch[l]);
    layer.bias = Vector::Zero(arch[l + 1]);
    layer.scale = 1.0;
    net.layers.push_back(std::move(layer));
  }
  return net;
}

double accuracy(const QcfsNetwork& net, const Dataset& data) {
  const Matrix logits = net.forward(data.features);
  return static_cast<double>(count_correct(logits, data.labels)) / data.size();
}

QcfsTrainResult train_qcfs_ann(const Dataset& data, const QcfsTrainConfig& cfg) {
  return train_qcfs_ann(build_qcfs_network(cfg.arch, cfg.levels, cfg.seed), data, cfg);
}

QcfsTrainResult train_qcfs_ann(QcfsNetwork net, const Dataset& data, const QcfsTrainConfig& cfg) {
  if (data.size() == 0) throw ConfigError("train_qcfs_ann: empty dataset");
  if (cfg.batch_size < 1) throw ConfigError("train_qcfs_ann: batch size must be >= 1");
  QcfsTrainResult result;
  Rng shuffle_rng = Rng(cfg.seed).split(1);
  std::vector<std::size_t> order(static_cast<std::size_t>(data.size()));
  std::iota(order.begin(), order.end(), 0);

  struct Velocity {
    Matrix w;
    Vector b;
    double s = 0.0;
  };
  std::vector<Velocity> vel;
  for (const auto& layer : net.layers)
    vel.push_back({Matrix::Zero(layer.weight.rows(), layer.weight.cols()),
                   Vector::Zero(layer.bias.size()), 0.0});

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[shuffle_rng.next_u64() % i]);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      const Dataset batch = data.subset({order.begin() + static_cast<std::ptrdiff_t>(start),
                                         order.begin() + static_cast<std::ptrdiff_t>(stop)});
      // Forward, keeping pre-activations for the straight-through pass.
      std::vector<Matrix> acts{batch.features};
      std::vector<Matrix> pres;
      for (std::size_t l = 0; l < net.layers.size(); ++l) {
        Matrix pre = acts.back() * net.layers[l].weight.transpose();
        pre.rowwise() += net.layers[l].bias.transpose();
        acts.push_back(qcfs_forward(pre, net.config(l)));
        pres.push_back(std::move(pre));
      }
      const LossResult lr = loss_and_grad(acts.back(), batch.labels);
      if (!std::isfinite(lr.loss)) throw TrainingError("train_qcfs_ann: loss is not finite", epoch);
      loss_sum += lr.loss * static_cast<double>(stop - start);

      Matrix grad = lr.grad_logits;
      for (std::size_t l = net.layers.size(); l-- > 0;) {
        QcfsLayer& layer = net.layers[l];
        const QcfsGrad qg = qcfs_backward(grad, pres[l], net.config(l));
        const Matrix gw = qg.input.transpose() * acts[l];
        const Vector gb = qg.input.colwise().sum().transpose();
        grad = qg.input * layer.weight;
        Velocity& v = vel[l];
        v.w = cfg.momentum * v.w + gw + cfg.weight_decay * layer.weight;
        v.b = cfg.momentum * v.b + gb + cfg.weight_decay * layer.bias;
        v.s = cfg.momentum * v.s + qg.scale;
        layer.weight -= cfg.learning_rate * v.w;
        layer.bias -= cfg.learning_rate * v.b;
        // The clip value must stay positive.
        layer.scale = std::max(1e-3, layer.scale - cfg.learning_rate * v.s);
      }
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

}  // namespace lmht
