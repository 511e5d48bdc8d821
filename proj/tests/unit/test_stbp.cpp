#include "doctest.h"
#include "lmht/network.hpp"
#include "lmht/reference_grad.hpp"
#include "lmht/stbp.hpp"
#include "lmht/verify.hpp"

using namespace lmht;

namespace {

// One unit, one input, one step, membrane inside the window.
struct SingleStep {
  LayerSpec layer;
  LayerCache cache;
};

SingleStep single_step() {
  SingleStep s;
  s.layer.weight = Matrix::Constant(1, 1, 0.5);
  s.layer.bias = Vector::Constant(1, 0.0);
  s.layer.levels = 2;
  s.layer.tgim = init_params(TGimInit::Uniform, 1);
  s.cache.input = Matrix::Constant(1, 1, 1.0);
  s.cache.raw = Matrix::Constant(1, 1, 0.5);
  s.cache.prev_potential = Matrix::Constant(1, 1, 0.5);
  s.cache.membrane = Matrix::Constant(1, 1, 1.0);
  s.cache.spikes = SpikeMatrix::Constant(1, 1, 1);
  s.cache.omega = constrained_view(s.layer.tgim).omega;
  s.cache.neuron = s.layer.neuron();
  return s;
}

LayerCache record_first_layer(const NetworkSpec& net, const Vector& x) {
  return simulate(net, x, true).caches.front();
}

}  // namespace

TEST_CASE("surrogate windows") {
  CHECK(surrogate_grad(Matrix::Constant(1, 1, 1.7), 1.0, 2)(0, 0) == 1.0);
  CHECK(surrogate_grad(Matrix::Constant(1, 1, 3.0), 1.0, 2)(0, 0) == 0.0);
  CHECK(surrogate_grad(Matrix::Constant(1, 1, 0.4), 1.0, 2)(0, 0) == 0.0);
  CHECK(surrogate_grad(Matrix::Constant(1, 1, 2.5), 1.0, 2)(0, 0) == 1.0);
  CHECK(surrogate_grad(Matrix::Constant(1, 1, 0.5), 1.0, 2)(0, 0) == 1.0);
  CHECK(rect_surrogate_grad(Matrix::Constant(1, 1, 1.0), 1.0)(0, 0) == 1.0);
  CHECK(rect_surrogate_grad(Matrix::Constant(1, 1, 1.6), 1.0)(0, 0) == 0.0);
}

TEST_CASE("single-level window equals the rectangular window") {
  Rng rng(4);
  for (int i = 0; i < 200; ++i) {
    const double theta = rng.uniform(0.25, 3.0);
    const Matrix m = rng_uniform(rng, -theta, 3 * theta, 4, 4);
    CHECK(surrogate_grad(m, theta, 1) == rect_surrogate_grad(m, theta));
  }
  // Exact window edges.
  const Matrix edges{{0.5, 1.5, 0.4999999, 1.5000001}};
  CHECK(surrogate_grad(edges, 1.0, 1) == rect_surrogate_grad(edges, 1.0));
}

TEST_CASE("one-step leak gradient") {
  SingleStep s = single_step();
  const GradBundle g = backward_layer(Matrix::Constant(1, 1, 2.0), s.cache, s.layer);
  CHECK(g.raw_leak / leak_slope(s.layer.tgim) == 1.0);
  CHECK(g.raw_leak == 0.5);
  // dL/dI = 2 flows to W through omega and the input.
  const double omega = s.cache.omega(0, 0);
  CHECK(g.weight(0, 0) == doctest::Approx(2.0 * omega));
  CHECK(g.bias[0] == doctest::Approx(2.0 * omega));
  CHECK(g.input_spikes(0, 0) == doctest::Approx(2.0 * omega * 0.5));
}

TEST_CASE("zero upstream gradient gives a zero bundle") {
  const NetworkSpec net = build_network({3, 4}, 3, 2, 5);
  const LayerCache cache = record_first_layer(net, Vector::Constant(3, 0.4));
  const GradBundle g = backward_layer(Matrix::Zero(3, 4), cache, net.layers[0]);
  CHECK(g.weight.isZero(0));
  CHECK(g.bias.isZero(0));
  CHECK(g.raw_omega.isZero(0));
  CHECK(g.raw_leak == 0.0);
  CHECK(g.input_spikes.isZero(0));
}

TEST_CASE("backward rejects mismatched gradients") {
  const NetworkSpec net = build_network({3, 4}, 3, 2, 5);
  const LayerCache cache = record_first_layer(net, Vector::Constant(3, 0.4));
  CHECK_THROWS_AS(backward_layer(Matrix::Zero(2, 4), cache, net.layers[0]), DimensionError);
}

TEST_CASE("vanilla backward degenerates to the detached rule") {
  SUBCASE("one step") {
    const NetworkSpec net = build_network({3, 5}, 1, 1, 8);
    const LayerCache cache = record_first_layer(net, Vector{{0.9, -0.2, 0.6}});
    Rng rng(3);
    const Matrix grad = rng_uniform(rng, -1, 1, 1, 5);
    const GradBundle a = backward_layer(grad, cache, net.layers[0]);
    const GradBundle b = vanilla_bptt_backward(grad, cache, net.layers[0]);
    CHECK(a.weight == b.weight);
    CHECK(a.bias == b.bias);
    CHECK(a.raw_omega == b.raw_omega);
    CHECK(a.raw_leak == b.raw_leak);
    CHECK(a.input_spikes == b.input_spikes);
  }
  SUBCASE("zero leak") {
    NetworkSpec net = build_network({3, 5}, 4, 1, 8, TGimInit::Identity);
    net.layers[0].tgim.raw_leak = 0.0;
    const LayerCache cache = record_first_layer(net, Vector{{0.9, -0.2, 0.6}});
    REQUIRE(cache.neuron.leak == 0.0);
    Rng rng(3);
    const Matrix grad = rng_uniform(rng, -1, 1, 4, 5);
    const GradBundle a = backward_layer(grad, cache, net.layers[0]);
    const GradBundle b = vanilla_bptt_backward(grad, cache, net.layers[0]);
    CHECK(a.weight == b.weight);
    CHECK(a.input_spikes == b.input_spikes);
  }
}

TEST_CASE("vanilla backward rejects multi-level layers") {
  const NetworkSpec net = build_network({2, 2}, 2, 2, 1);
  const LayerCache cache = record_first_layer(net, Vector::Constant(2, 0.5));
  CHECK_THROWS_AS(vanilla_bptt_backward(Matrix::Zero(2, 2), cache, net.layers[0]), ConfigError);
}

TEST_CASE("detached gradient never crosses the membrane recurrence") {
  // Bypass mixing with column 1 zeroed: step 1's input feeds no current,
  // so its input gradient must be exactly zero even though v carries
  // charge from step 1 into step 2.
  NetworkSpec net = build_network({2, 3}, 3, 2, 12);
  LayerSpec& layer = net.layers[0];
  layer.tgim.bypass = true;
  layer.tgim.raw_omega = Matrix{{0.6, 0.0, 0.3}, {0.2, 0.0, 0.5}, {0.4, 0.0, 0.9}};
  layer.tgim.raw_leak = 0.8;
  layer.bias.setConstant(1.0);
  const LayerCache cache = record_first_layer(net, Vector{{0.7, 0.4}});
  const GradBundle g = backward_layer(Matrix::Ones(3, 3), cache, layer);
  CHECK((g.input_spikes.row(1).array() == 0.0).all());
  CHECK(g.input_spikes.row(0).cwiseAbs().sum() > 0.0);

  for (std::uint64_t id = 0; id < 20; ++id) {
    const TrialReport r = check_detach_trial(3, id);
    CHECK(r.verdict != Verdict::Fail);
  }
}

TEST_CASE("layer backward matches the tape evaluator") {
  for (std::uint64_t id = 0; id < 100; ++id) {
    const TrialReport detached = check_grad_trial(17, id, false);
    CHECK_MESSAGE(detached.verdict == Verdict::Pass, detached.note);
    const TrialReport vanilla = check_grad_trial(17, id, true);
    CHECK_MESSAGE(vanilla.verdict == Verdict::Pass, vanilla.note);
  }
}

TEST_CASE("tape evaluator on a hand network") {
  // One layer, L = 1, T = 1: loss is CE over logits = s * theta / 1.
  NetworkSpec net = build_network({1, 2}, 1, 1, 1);
  net.input_scale = 1.0;
  net.layers[0].weight = Matrix{{1.0}, {0.0}};
  net.layers[0].bias = Vector{{0.0, 0.0}};
  net.layers[0].tgim = init_params(TGimInit::Identity, 1);
  const ReferenceGradients ref = reference_gradients(net, Vector{{1.2}}, 1, BackwardMode::Detached);
  CHECK(ref.logits == Vector{{1.0, 0.0}});
  const double p0 = std::exp(1.0) / (std::exp(1.0) + 1.0);
  CHECK(ref.loss == doctest::Approx(std::log(std::exp(1.0) + 1.0)));
  // Unit 0 is in the window (m = 1.2), unit 1 is not (m = 0).
  CHECK(ref.layers[0].weight(0, 0) == doctest::Approx(p0 * 1.2));
  CHECK(ref.layers[0].weight(1, 0) == 0.0);

  ForwardResult fwd = forward(net, Matrix{{1.2}}, true);
  const Vector grad_logits{{p0, -p0}};
  const auto grads = network_backward(net, fwd.caches[0], grad_logits, BackwardMode::Detached);
  CHECK(relative_gradient_error(grads, ref.layers) <= kGradientTolerance);
}

TEST_CASE("sgd_step") {
  Matrix p = Matrix::Constant(1, 1, 1.0);
  sgd_step(p, Matrix::Constant(1, 1, 0.5), 0.1, 0.0);
  CHECK(p(0, 0) == doctest::Approx(0.95).epsilon(1e-15));
  p(0, 0) = 1.0;
  sgd_step(p, Matrix::Zero(1, 1), 0.1, 0.0);
  CHECK(p(0, 0) == 1.0);
  sgd_step(p, Matrix::Zero(1, 1), 0.1, 0.1);
  CHECK(p(0, 0) == doctest::Approx(0.99).epsilon(1e-15));
  double q = 2.0;
  sgd_step(q, 1.0, 0.5, 0.0);
  CHECK(q == 1.5);
}

TEST_CASE("Sgd leaves frozen mixing alone and never decays it") {
  std::vector<LayerSpec> layers = build_network({2, 2}, 2, 1, 3).layers;
  layers[0].tgim.raw_omega.setConstant(0.4);
  std::vector<LayerSpec> frozen = build_network({2, 2}, 2, 1, 3, TGimInit::Identity).layers;
  GradBundle zero = GradBundle::zeros_like(layers[0], 2);

  Sgd decay({0.1, 0.5, 0.0});
  decay.step(layers, {zero});
  CHECK((layers[0].tgim.raw_omega.array() == 0.4).all());

  GradBundle push = zero;
  push.raw_omega.setOnes();
  push.raw_leak = 1.0;
  Sgd plain({0.1, 0.0, 0.9});
  const Matrix before = frozen[0].tgim.raw_omega;
  plain.step(frozen, {push});
  CHECK(frozen[0].tgim.raw_omega == before);
  CHECK(frozen[0].tgim.raw_leak == 1.0);

  plain.step(layers, {push});
  CHECK((layers[0].tgim.raw_omega.array() < 0.4).all());
}

TEST_CASE("momentum accumulates velocity") {
  std::vector<LayerSpec> layers = build_network({1, 1}, 1, 1, 3).layers;
  layers[0].weight(0, 0) = 0.0;
  GradBundle g = GradBundle::zeros_like(layers[0], 1);
  g.weight(0, 0) = 1.0;
  Sgd opt({0.1, 0.0, 0.5});
  opt.step(layers, {g});
  CHECK(layers[0].weight(0, 0) == doctest::Approx(-0.1));
  opt.step(layers, {g});
  CHECK(layers[0].weight(0, 0) == doctest::Approx(-0.25));
}
