#include "doctest.h"
#include "lmht/loss.hpp"
#include "lmht/train.hpp"

#include <cmath>
#include <sstream>

using namespace lmht;

namespace {

const Dataset& blobs() {
  static const Dataset data = make_dataset(SyntheticDataset{});
  return data;
}

}  // namespace

TEST_CASE("build_network") {
  const NetworkSpec net = build_network({2, 4, 3}, 2, 2, 1);
  CHECK(net.layers.size() == 2);
  CHECK(net.horizon == 2);
  CHECK(net.input_scale == 2.0);
  for (const auto& layer : net.layers) CHECK((constrained_view(layer.tgim).omega.array() == 0.5).all());
  const NetworkSpec again = build_network({2, 4, 3}, 2, 2, 1);
  for (std::size_t l = 0; l < 2; ++l) CHECK(again.layers[l].weight == net.layers[l].weight);
  CHECK(build_network({2, 4, 3}, 2, 2, 2).layers[0].weight != net.layers[0].weight);
  CHECK_THROWS_AS(build_network({2}, 2, 2, 1), ConfigError);
  CHECK_THROWS_AS(build_network({2, 0, 3}, 2, 2, 1), ConfigError);
}

TEST_CASE("forward degenerate cases") {
  NetworkSpec net = build_network({3, 4, 2}, 2, 2, 1);
  for (auto& layer : net.layers) layer.bias.setZero();
  const ForwardResult zero = forward(net, Matrix::Zero(5, 3));
  CHECK(zero.logits.isZero(0));
  CHECK_THROWS_AS(forward(net, Matrix::Zero(1, 4)), DimensionError);

  // One step, one level, identity mixing: a binary threshold MLP.
  NetworkSpec bin = build_network({3, 4, 2}, 1, 1, 6, TGimInit::Identity);
  Rng rng(5);
  const Matrix batch = rng_uniform(rng, -2, 2, 50, 3);
  const ForwardResult fr = forward(bin, batch);
  for (Eigen::Index n = 0; n < batch.rows(); ++n) {
    Vector h = batch.row(n).transpose();
    for (const auto& layer : bin.layers) {
      const Vector pre = affine<double>(layer.weight, h, layer.bias);
      h = (pre.array() >= layer.threshold).cast<double>() * layer.threshold;
    }
    CHECK(fr.logits.row(n).transpose() == h);
  }
}

TEST_CASE("identity mixing with one level reproduces the LIF trace") {
  NetworkSpec net = build_network({3, 5, 4}, 6, 1, 2, TGimInit::Identity);
  net.layers[0].tgim.raw_leak = 0.8;
  net.layers[1].tgim.raw_leak = 0.6;
  Rng rng(1);
  for (int n = 0; n < 50; ++n) {
    const Vector x = rng_uniform(rng, -1, 1, 3);
    const SampleTrace trace = simulate(net, x);
    Matrix input(6, 3);
    input.rowwise() = x.transpose();
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
      const LayerSpec& layer = net.layers[l];
      NeuronConfig cfg = layer.neuron();
      NeuronLayerState state = initial_state(cfg, layer.out_width());
      Matrix next(6, layer.out_width());
      for (int t = 0; t < 6; ++t) {
        const Vector current = affine<double>(layer.weight, input.row(t).transpose(), layer.bias);
        const StepResult step = lif_step(state, current, cfg);
        REQUIRE(step.spikes.transpose() == trace.spikes[l].row(t));
        next.row(t) = step.spikes.cast<double>().transpose() * layer.threshold;
        state = step.state;
      }
      input = next;
    }
  }
}

TEST_CASE("uniform mixing matches the quantized activation") {
  // Single layer, constant current per step, v0 = theta / 2.
  Rng rng(77);
  for (int draw = 0; draw < 1000; ++draw) {
    const int levels = rng.uniform_int(1, 4);
    const int horizon = rng.uniform_int(1, 2) * 2;
    QcfsNetwork ann = build_qcfs_network({3, 4}, levels * horizon, rng.next_u64());
    ann.layers[0].bias = rng_uniform(rng, -0.3, 0.3, 4);
    ann.layers[0].scale = rng.uniform(0.5, 2.0);
    const Vector x = rng_uniform(rng, -1, 1, 3);
    const NetworkSpec snn = hybrid_convert(ann, horizon, levels);
    const Vector expected = ann.forward(x.transpose()).row(0).transpose();
    REQUIRE(simulate(snn, x).logits == expected);
  }
}

TEST_CASE("spike counts stay within [0, L]") {
  const NetworkSpec net = build_network({2, 6, 3}, 3, 3, 4);
  Rng rng(2);
  const ForwardResult fr = forward(net, rng_uniform(rng, -3, 3, 40, 2), true);
  for (const auto& sample : fr.caches)
    for (const auto& cache : sample) {
      CHECK(cache.spikes.minCoeff() >= 0);
      CHECK(cache.spikes.maxCoeff() <= 3);
    }
}

TEST_CASE("loss_and_grad") {
  const Matrix uniform = Matrix::Zero(2, 4);
  const std::vector<int> labels{1, 3};
  const LossResult flat = loss_and_grad(uniform, labels);
  CHECK(flat.loss == doctest::Approx(std::log(4.0)).epsilon(1e-15));
  for (Eigen::Index i = 0; i < 2; ++i) CHECK(std::abs(flat.grad_logits.row(i).sum()) <= 1e-15);

  const LossResult sure = loss_and_grad(Matrix{{1e3, 0.0, 0.0}}, std::vector<int>{0});
  CHECK(sure.loss <= 1e-12);
  CHECK(sure.correct == 1);

  Rng rng(3);
  const Matrix logits = rng_uniform(rng, -5, 5, 6, 3);
  const std::vector<int> many{0, 1, 2, 0, 1, 2};
  const LossResult r = loss_and_grad(logits, many);
  for (Eigen::Index i = 0; i < 6; ++i) CHECK(std::abs(r.grad_logits.row(i).sum()) <= 1e-15);
  CHECK_THROWS_AS(loss_and_grad(logits, std::vector<int>{0}), DimensionError);
  CHECK(argmax(Vector{{1.0, 3.0, 3.0}}) == 1);
}

TEST_CASE("datasets") {
  const Dataset a = make_dataset(SyntheticDataset{});
  const Dataset b = make_dataset(SyntheticDataset{});
  CHECK(a.size() == 600);
  CHECK(a.classes == 3);
  CHECK(a.features == b.features);
  CHECK(a.labels == b.labels);

  std::istringstream good("1.0,2.0,1\n");
  const Dataset g = parse_csv(good);
  CHECK(g.features == Matrix{{1.0, 2.0}});
  CHECK(g.labels == std::vector<int>{1});

  std::istringstream bad("1.0,x,1\n");
  try {
    parse_csv(bad);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 1);
  }
  std::istringstream ragged("1,2,0\n\n1,0\n");
  try {
    parse_csv(ragged);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
}

TEST_CASE("zero learning rate keeps the network") {
  TrainConfig cfg;
  cfg.learning_rate = 0.0;
  cfg.epochs = 3;
  const NetworkSpec net = build_network({2, 8, 3}, 2, 2, 1);
  const TrainResult r = stbp_train(net, blobs(), cfg);
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    CHECK(r.net.layers[l].weight == net.layers[l].weight);
    CHECK(r.net.layers[l].tgim.raw_omega == net.layers[l].tgim.raw_omega);
  }
  // Batches are reshuffled each epoch, so only the summation order differs.
  CHECK(r.history[0].loss == doctest::Approx(r.history[2].loss).epsilon(1e-12));
}

TEST_CASE("direct training on blobs") {
  TrainConfig cfg;
  cfg.epochs = 200;
  const TrainResult r = stbp_train(build_network({2, 32, 32, 3}, 2, 2, 1), blobs(), cfg);
  CHECK(r.history.size() == 200);
  CHECK(accuracy(r.net, blobs()) >= 0.90);
}

TEST_CASE("vanilla reference training on blobs") {
  TrainConfig cfg;
  cfg.epochs = 200;
  cfg.mode = TrainMode::VanillaReference;
  const NetworkSpec net = build_network({2, 32, 32, 3}, 4, 1, 1, TGimInit::Identity);
  const TrainResult r = stbp_train(net, blobs(), cfg);
  CHECK(accuracy(r.net, blobs()) >= 0.85);
  CHECK_THROWS_AS(stbp_train(build_network({2, 3}, 2, 2, 1), blobs(), cfg), ConfigError);
}

TEST_CASE("hybrid conversion") {
  QcfsTrainConfig ann_cfg;
  ann_cfg.arch = {2, 32, 32, 3};
  ann_cfg.levels = 4;
  const QcfsNetwork ann = train_qcfs_ann(blobs(), ann_cfg).net;
  const NetworkSpec snn = hybrid_convert(ann, 2, 2);
  for (std::size_t l = 0; l < ann.layers.size(); ++l) {
    CHECK(snn.layers[l].weight == ann.layers[l].weight);
    CHECK(snn.layers[l].bias == 2.0 * ann.layers[l].bias);
    CHECK(snn.layers[l].threshold == ann.layers[l].scale);
    CHECK(snn.layers[l].v0 == 0.5 * ann.layers[l].scale);
    CHECK(constrained_view(snn.layers[l].tgim).leak == 1.0);
    CHECK((constrained_view(snn.layers[l].tgim).omega.array() == 0.5).all());
  }
  const double zero_shot = accuracy(snn, blobs());
  CHECK(zero_shot >= accuracy(ann, blobs()) - 0.05);

  const TrainResult none = hybrid_finetune(snn, blobs(), 0);
  CHECK(none.history.empty());
  CHECK(none.net.layers[0].weight == snn.layers[0].weight);

  TrainConfig ft;
  ft.learning_rate = 0.01;
  const TrainResult a = hybrid_finetune(snn, blobs(), 30, ft);
  const TrainResult b = hybrid_finetune(snn, blobs(), 30, ft);
  CHECK(a.net.layers[0].weight == b.net.layers[0].weight);
  CHECK(accuracy(a.net, blobs()) >= zero_shot - 0.01);
}

TEST_CASE("count_sops") {
  NetworkSpec net = build_network({1, 1, 10}, 1, 2, 1);
  SpikeStats stats;
  stats.counts = {Matrix::Constant(1, 1, 2.0), Matrix::Zero(1, 10)};
  stats.samples = 1;
  const SopReport r = count_sops(net, stats);
  CHECK(r.sops == 20);
  CHECK(r.energy_mj == doctest::Approx(20 * kDefaultEnergyPerSop));
  CHECK(count_sops(net, stats, 2.0).energy_mj == 40.0);

  stats.counts[0].setZero();
  CHECK(count_sops(net, stats).sops == 0);
  CHECK_THROWS_AS(count_sops(net, std::nullopt), InstrumentationError);
  const ForwardResult plain = forward(net, Matrix::Zero(1, 1));
  CHECK_THROWS_AS(count_sops(net, plain.stats), InstrumentationError);
}
