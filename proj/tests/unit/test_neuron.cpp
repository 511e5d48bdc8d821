#include "doctest.h"
#include "lmht/neuron.hpp"

using namespace lmht;

namespace {

NeuronConfig config(double theta, int levels, double leak, double v0 = 0.0) {
  NeuronConfig cfg;
  cfg.threshold = theta;
  cfg.levels = levels;
  cfg.leak = leak;
  cfg.v0 = v0;
  return cfg;
}

StepResult step(double v, double current, const NeuronConfig& cfg) {
  return mht_step({Vector::Constant(1, v), 0}, Vector::Constant(1, current), cfg);
}

}  // namespace

TEST_CASE("mht_fire levels") {
  CHECK(fire_count(2.8, 1.0, 4) == 2);
  CHECK(fire_count(-0.3, 1.0, 2) == 0);
  CHECK(fire_count(7.0, 1.0, 2) == 2);
  CHECK(fire_count(1.0, 1.0, 3) == 1);
  CHECK(fire_count(0.9999999999, 1.0, 3) == 0);
  CHECK(fire_count(3.0, 1.0, 3) == 3);
  const Matrix m{{0.2, 1.5}, {2.5, 9.0}};
  const SpikeMatrix s = mht_fire(m, 1.0, 2);
  CHECK(s(0, 0) == 0);
  CHECK(s(0, 1) == 1);
  CHECK(s(1, 0) == 2);
  CHECK(s(1, 1) == 2);
}

TEST_CASE("mht_fire agrees with the threshold comparisons near boundaries") {
  const double theta = 0.1;
  const double m = 3 * theta;
  const int s = fire_count(m, theta, 5);
  CHECK(m >= s * theta);
  CHECK(!(m >= (s + 1) * theta));
}

TEST_CASE("mht_fire is monotone and scale invariant") {
  Rng rng(8);
  for (int i = 0; i < 2000; ++i) {
    const double theta = rng.uniform(0.25, 4.0);
    const int levels = rng.uniform_int(1, 5);
    const double a = rng.uniform(-2.0, 8.0);
    const double b = a + rng.uniform(0.0, 1.0);
    CHECK(fire_count(a, theta, levels) <= fire_count(b, theta, levels));
    CHECK(fire_count(a * 4.0, theta * 4.0, levels) == fire_count(a, theta, levels));
  }
}

TEST_CASE("mht_step hand traces") {
  auto r = step(0.4, 1.6, config(1.0, 2, 1.0));
  CHECK(r.spikes[0] == 2);
  CHECK(r.state.v[0] == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(r.state.t == 1);
  r = step(0.5, 0.0, config(1.0, 2, 0.5));
  CHECK(r.spikes[0] == 0);
  CHECK(r.state.v[0] == 0.25);
  r = step(0.0, 0.0, config(1.0, 2, 1.0));
  CHECK(r.spikes[0] == 0);
  CHECK(r.state.v[0] == 0.0);
}

TEST_CASE("negative potentials persist") {
  const auto r = step(0.1, -0.7, config(1.0, 2, 1.0));
  CHECK(r.spikes[0] == 0);
  CHECK(r.state.v[0] == doctest::Approx(-0.6));
}

TEST_CASE("lif_step") {
  auto r = lif_step({Vector::Constant(1, 0.6), 0}, Vector::Constant(1, 0.5), config(1.0, 1, 1.0));
  CHECK(r.spikes[0] == 1);
  CHECK(r.state.v[0] == doctest::Approx(0.1));
  r = lif_step({Vector::Constant(1, 0.6), 0}, Vector::Constant(1, 5.0), config(1.0, 1, 1.0));
  CHECK(r.spikes[0] == 1);
  CHECK(r.state.v[0] == doctest::Approx(4.6));
  CHECK_THROWS_AS(lif_step({Vector::Zero(1), 0}, Vector::Zero(1), config(1.0, 2, 1.0)), ConfigError);
}

TEST_CASE("IF trace with constant current") {
  const SequenceResult seq = run_sequence(config(1.0, 1, 1.0), Matrix::Constant(4, 1, 0.625));
  CHECK(seq.spikes(0, 0) == 0);
  CHECK(seq.spikes(1, 0) == 1);
  CHECK(seq.spikes(2, 0) == 0);
  CHECK(seq.spikes(3, 0) == 1);
  CHECK(seq.potential(3, 0) == 0.5);
}

TEST_CASE("run_sequence") {
  const SequenceResult seq = run_sequence(config(1.0, 2, 1.0, 0.5), Matrix::Constant(3, 1, 0.9));
  CHECK(seq.spikes.col(0).transpose() == Eigen::RowVector3i(1, 1, 1));
  CHECK(seq.potential(2, 0) == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(seq.membrane(0, 0) == doctest::Approx(1.4));

  const SequenceResult quiet = run_sequence(config(1.0, 3, 0.9), Matrix::Zero(5, 3));
  CHECK((quiet.spikes.array() == 0).all());
}

TEST_CASE("lif path equals mht path with one level") {
  Rng rng(21);
  const NeuronConfig cfg = config(0.8, 1, 0.9, 0.1);
  NeuronLayerState a = initial_state(cfg, 6), b = initial_state(cfg, 6);
  for (int t = 0; t < 20; ++t) {
    const Vector current = rng_uniform(rng, -0.5, 2.0, 6);
    const StepResult ra = mht_step(a, current, cfg);
    const StepResult rb = lif_step(b, current, cfg);
    CHECK(ra.spikes == rb.spikes);
    CHECK(ra.state.v == rb.state.v);
    a = ra.state;
    b = rb.state;
  }
}

TEST_CASE("soft reset conserves charge") {
  Rng rng(13);
  const NeuronConfig cfg = config(1.3, 4, 0.7, 0.2);
  NeuronLayerState state = initial_state(cfg, 8);
  for (int t = 0; t < 50; ++t) {
    const StepResult r = mht_step(state, rng_uniform(rng, -1.0, 6.0, 8), cfg);
    for (int i = 0; i < 8; ++i) {
      CHECK(std::abs(r.membrane[i] - r.state.v[i] - r.spikes[i] * cfg.threshold) <= 1e-12);
      CHECK(r.spikes[i] >= 0);
      CHECK(r.spikes[i] <= cfg.levels);
    }
    state = r.state;
  }
}

TEST_CASE("potential stays in [0, theta) for in-range currents") {
  Rng rng(17);
  for (int trial = 0; trial < 10000; ++trial) {
    const int levels = rng.uniform_int(1, 4);
    const double theta = rng.uniform(0.5, 2.0);
    const NeuronConfig cfg = config(theta, levels, 1.0, rng.uniform(0.0, theta));
    const int steps = rng.uniform_int(1, 8);
    const Matrix currents = rng_uniform(rng, 0.0, levels * theta, steps, 1);
    const SequenceResult seq = run_sequence(cfg, currents);
    REQUIRE((seq.potential.array() >= 0.0).all());
    REQUIRE((seq.potential.array() < theta).all());
  }
}

TEST_CASE("windowed leak") {
  NeuronConfig cfg = config(10.0, 1, 0.5, 4.0);
  cfg.leak_period = 2;
  CHECK(cfg.leak_at(0) == 0.5);
  CHECK(cfg.leak_at(1) == 1.0);
  CHECK(cfg.leak_at(2) == 0.5);
  const SequenceResult seq = run_sequence(cfg, Matrix::Zero(3, 1));
  CHECK(seq.potential(0, 0) == 2.0);
  CHECK(seq.potential(1, 0) == 2.0);
  CHECK(seq.potential(2, 0) == 1.0);
}

TEST_CASE("config validation") {
  CHECK_THROWS_AS(config(0.0, 1, 1.0).validate(), ConfigError);
  CHECK_THROWS_AS(config(1.0, 0, 1.0).validate(), ConfigError);
  NeuronConfig cfg = config(1.0, 1, 1.0);
  cfg.leak_period = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  CHECK_THROWS_AS(mht_step({Vector::Zero(2), 0}, Vector::Zero(3), config(1.0, 1, 1.0)), DimensionError);
}
