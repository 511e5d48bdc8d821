#include "doctest.h"
#include "lmht/reparam.hpp"
#include "lmht/verify.hpp"

using namespace lmht;

TEST_CASE("expand_tgim") {
  const Matrix one = expand_tgim(Matrix::Constant(1, 1, 1.0), 3);
  CHECK(one.rows() == 3);
  CHECK((one.array() == 1.0 / 3.0).all());

  const Matrix omega{{0.2, 0.4}, {0.6, 0.8}};
  const Matrix big = expand_tgim(omega, 2);
  REQUIRE(big.rows() == 4);
  REQUIRE(big.cols() == 4);
  for (int j = 0; j < 4; ++j)
    for (int k = 0; k < 4; ++k) CHECK(big(j, k) == omega(j / 2, k / 2) / 2);
  for (int j = 0; j < 4; ++j)
    CHECK(big.row(j).sum() == doctest::Approx(omega.row(j / 2).sum()).epsilon(1e-15));
  CHECK(expand_tgim(omega, 1) == omega);
}

TEST_CASE("rectify_bias") {
  const Matrix b = rectify_bias(Matrix::Constant(1, 1, 2.0), 4);
  CHECK(b == Matrix::Constant(4, 1, 0.5));
  const Matrix per_step{{1.0, -3.0}, {0.3, 0.9}};
  CHECK(rectify_bias(per_step, 1) == per_step);
  const Matrix r = rectify_bias(per_step, 3);
  for (int t = 0; t < 2; ++t)
    CHECK((r.middleRows(t * 3, 3).colwise().sum() - per_step.row(t)).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("reparameterized network shape") {
  const NetworkSpec src = random_reparam_network(1, 0);
  const NetworkSpec dst = reparameterize_network(src);
  const int levels = src.layers[0].levels;
  CHECK(dst.horizon == src.horizon * levels);
  CHECK(dst.input_scale == src.input_scale / levels);
  for (std::size_t l = 0; l < src.layers.size(); ++l) {
    CHECK(dst.layers[l].levels == 1);
    CHECK(dst.layers[l].weight == src.layers[l].weight);
    CHECK(dst.layers[l].threshold == src.layers[l].threshold);
    CHECK(dst.layers[l].leak_period == levels);
    CHECK(dst.layers[l].tgim.bypass);
    CHECK(constrained_view(dst.layers[l].tgim).leak == constrained_view(src.layers[l].tgim).leak);
  }
}

TEST_CASE("single-level networks pass through") {
  NetworkSpec net = build_network({3, 4, 2}, 3, 1, 9);
  const NetworkSpec once = reparameterize_network(net);
  CHECK(once.horizon == net.horizon);
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    CHECK(once.layers[l].weight == net.layers[l].weight);
    CHECK(once.layers[l].tgim.raw_omega == net.layers[l].tgim.raw_omega);
  }
  const NetworkSpec twice = reparameterize_network(once);
  for (std::size_t l = 0; l < net.layers.size(); ++l)
    CHECK(twice.layers[l].tgim.raw_omega == once.layers[l].tgim.raw_omega);

  Rng rng(2);
  const EquivalenceReport eq = verify_equivalence(net, net, rng_uniform(rng, -1, 1, 20, 3));
  CHECK(eq.pass);
  CHECK(eq.max_logit_deviation == 0.0);
  CHECK(eq.max_current_deviation == 0.0);
}

TEST_CASE("reparameterizing twice equals once") {
  const NetworkSpec once = reparameterize_network(random_reparam_network(4, 2));
  const NetworkSpec twice = reparameterize_network(once);
  CHECK(twice.horizon == once.horizon);
  for (std::size_t l = 0; l < once.layers.size(); ++l) {
    CHECK(twice.layers[l].tgim.raw_omega == once.layers[l].tgim.raw_omega);
    CHECK(twice.layers[l].bias_scale == once.layers[l].bias_scale);
  }
}

TEST_CASE("unsupported layers") {
  NetworkSpec mixed = build_network({2, 3, 2}, 2, 2, 1);
  mixed.layers[1].levels = 3;
  CHECK_THROWS_AS(reparameterize_network(mixed), UnsupportedLayerError);
  NetworkSpec windowed = build_network({2, 3, 2}, 2, 2, 1);
  windowed.layers[0].leak_period = 2;
  CHECK_THROWS_AS(reparameterize_network(windowed), UnsupportedLayerError);
}

TEST_CASE("window currents and spikes are preserved") {
  for (std::uint64_t id = 0; id < 20; ++id) {
    const NetworkSpec src = random_reparam_network(7, id);
    const NetworkSpec dst = reparameterize_network(src);
    const Matrix inputs = random_reparam_inputs(7, id, 100, src.input_width());
    const EquivalenceReport eq = verify_equivalence(src, dst, inputs);
    CHECK(eq.window_mismatches == 0);
    CHECK(eq.max_current_deviation <= kCurrentTolerance);
    CHECK(eq.max_logit_deviation <= kLogitTolerance);
    CHECK(eq.sop_relative_gap <= kSopTolerance);
    CHECK(eq.pass);
  }
}

TEST_CASE("two-level two-step network end to end") {
  NetworkSpec src;
  for (std::uint64_t id = 0;; ++id) {
    src = random_reparam_network(11, id);
    if (src.layers[0].levels == 2 && src.horizon == 2) break;
  }
  const EquivalenceReport eq = verify_equivalence(
      src, reparameterize_network(src), random_reparam_inputs(11, 0, 100, src.input_width()));
  CHECK(eq.window_mismatches == 0);
  CHECK(eq.pass);
  CHECK(eq.source_sops.sops == eq.target_sops.sops);
}

TEST_CASE("a perturbed weight is caught") {
  const NetworkSpec src = random_reparam_network(3, 5);
  NetworkSpec dst = reparameterize_network(src);
  dst.layers[0].weight(0, 0) += 1e-3;
  const EquivalenceReport eq =
      verify_equivalence(src, dst, random_reparam_inputs(3, 5, 100, src.input_width()));
  CHECK_FALSE(eq.pass);
  CHECK(eq.max_current_deviation > kCurrentTolerance);
}

TEST_CASE("random reparameterization trials") {
  for (std::uint64_t id = 0; id < 20; ++id) {
    const TrialReport r = check_reparam_trial(21, id);
    CHECK_MESSAGE(r.verdict == Verdict::Pass, r.note);
  }
}
