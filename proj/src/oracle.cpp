#include "lmht/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "lmht/neuron.hpp"

namespace lmht {

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "pass";
    case Verdict::Fail: return "fail";
    case Verdict::Skipped: return "skipped";
  }
  return "?";
}

IfTrace if_simulate(double v0, std::span<const double> currents, double threshold) {
  IfTrace trace;
  double v = v0;
  for (double current : currents) {
    const double m = v + current;
    const int s = m >= threshold ? 1 : 0;
    v = m - s * threshold;
    trace.spikes.push_back(s);
    trace.potential.push_back(v);
  }
  return trace;
}

long long closed_form_count(double v0, double total_current, double threshold, long long cap) {
  const double q = std::floor((v0 + total_current) / threshold);
  if (!(q > 0.0)) return 0;
  return q >= static_cast<double>(cap) ? cap : static_cast<long long>(q);
}

namespace {

WindowTrial sample_trial(std::uint64_t seed, std::uint64_t id, const WindowSampling& s,
                         bool uniform) {
  Rng rng = Rng(seed).split(id);
  WindowTrial trial;
  trial.seed = seed;
  trial.id = id;
  trial.levels = rng.uniform_int(1, s.max_levels);
  const int horizon = rng.uniform_int(1, s.max_horizon);
  trial.threshold = rng.uniform(s.min_threshold, s.max_threshold);
  trial.v0 = rng.uniform(0.0, trial.threshold);
  const double cap = trial.levels * trial.threshold;
  if (uniform) {
    const double current = rng.uniform(-0.5 * trial.threshold, cap + 0.5 * trial.threshold);
    trial.currents.assign(static_cast<std::size_t>(horizon), current);
  } else {
    for (int t = 0; t < horizon; ++t) trial.currents.push_back(rng.uniform(0.0, cap));
  }
  return trial;
}

TrialReport base_report(const char* suite, const WindowTrial& trial) {
  TrialReport r;
  r.suite = suite;
  r.id = trial.id;
  r.seed = trial.seed;
  r.params = {{"L", trial.levels},
              {"T", static_cast<double>(trial.currents.size())},
              {"theta", trial.threshold},
              {"v0", trial.v0}};
  r.currents = trial.currents;
  return r;
}

bool window_preconditions(const WindowTrial& trial) {
  if (!(trial.v0 >= 0.0 && trial.v0 < trial.threshold)) return false;
  const double cap = trial.levels * trial.threshold;
  return std::all_of(trial.currents.begin(), trial.currents.end(),
                     [cap](double i) { return i >= 0.0 && i < cap; });
}

NeuronConfig integrate_config(const WindowTrial& trial) {
  NeuronConfig cfg;
  cfg.threshold = trial.threshold;
  cfg.levels = trial.levels;
  cfg.leak = 1.0;
  cfg.v0 = trial.v0;
  return cfg;
}

Matrix column(const std::vector<double>& values) {
  Matrix m(static_cast<Eigen::Index>(values.size()), 1);
  for (std::size_t i = 0; i < values.size(); ++i) m(static_cast<Eigen::Index>(i), 0) = values[i];
  return m;
}

}  // namespace

WindowTrial sample_window_trial(std::uint64_t seed, std::uint64_t id,
                                const WindowSampling& sampling) {
  return sample_trial(seed, id, sampling, false);
}

WindowTrial sample_uniform_trial(std::uint64_t seed, std::uint64_t id,
                                 const WindowSampling& sampling) {
  return sample_trial(seed, id, sampling, true);
}

TrialReport check_lemma41(const WindowTrial& trial) {
  TrialReport r = base_report("lemma41", trial);
  if (trial.currents.empty() || !window_preconditions(trial)) {
    r.verdict = Verdict::Skipped;
    r.note = "precondition-violated";
    return r;
  }
  const double current = trial.currents.front();
  const int levels = trial.levels;
  const NeuronConfig cfg = integrate_config(trial);
  const StepResult step = mht_step(initial_state(cfg, 1), Vector::Constant(1, current), cfg);

  const std::vector<double> split(static_cast<std::size_t>(levels), current / levels);
  const IfTrace ift = if_simulate(trial.v0, split, trial.threshold);
  long long if_total = 0;
  for (int s : ift.spikes) if_total += s;
  const long long closed = closed_form_count(trial.v0, current, trial.threshold, levels);

  r.lhs = {static_cast<double>(step.spikes[0])};
  r.rhs = {static_cast<double>(if_total), static_cast<double>(closed)};
  r.deviation = std::max(std::abs(step.spikes[0] - static_cast<double>(if_total)),
                         std::abs(step.spikes[0] - static_cast<double>(closed)));
  r.verdict = (step.spikes[0] == if_total && step.spikes[0] == closed) ? Verdict::Pass : Verdict::Fail;
  return r;
}

TrialReport check_thm42_windows(const WindowTrial& trial) {
  TrialReport r = base_report("thm42", trial);
  if (trial.currents.empty() || !window_preconditions(trial)) {
    r.verdict = Verdict::Skipped;
    r.note = "precondition-violated";
    return r;
  }
  const int levels = trial.levels;
  const SequenceResult seq = run_sequence(integrate_config(trial), column(trial.currents));

  std::vector<double> expanded;
  for (double current : trial.currents)
    for (int k = 0; k < levels; ++k) expanded.push_back(current / levels);
  const IfTrace ift = if_simulate(trial.v0, expanded, trial.threshold);

  bool counts_equal = true;
  double max_dv = 0.0;
  for (std::size_t t = 0; t < trial.currents.size(); ++t) {
    int window = 0;
    for (int k = 0; k < levels; ++k) window += ift.spikes[t * levels + static_cast<std::size_t>(k)];
    const int mht = seq.spikes(static_cast<Eigen::Index>(t), 0);
    r.lhs.push_back(mht);
    r.rhs.push_back(window);
    if (mht != window) counts_equal = false;
    const double dv = std::abs(seq.potential(static_cast<Eigen::Index>(t), 0) -
                               ift.potential[(t + 1) * levels - 1]);
    max_dv = std::max(max_dv, dv);
  }
  r.deviation = max_dv;
  r.verdict = (counts_equal && max_dv <= kPotentialTolerance) ? Verdict::Pass : Verdict::Fail;
  if (!counts_equal) r.note = "window-count-mismatch";
  return r;
}

TrialReport check_thm42_closed_form(const WindowTrial& trial) {
  TrialReport r = base_report("thm42-closed", trial);
  if (trial.currents.empty() || !(trial.v0 >= 0.0 && trial.v0 < trial.threshold) ||
      std::adjacent_find(trial.currents.begin(), trial.currents.end(),
                         std::not_equal_to<>()) != trial.currents.end()) {
    r.verdict = Verdict::Skipped;
    r.note = "precondition-violated";
    return r;
  }
  const SequenceResult seq = run_sequence(integrate_config(trial), column(trial.currents));
  const long long simulated = seq.spikes.cast<long long>().sum();
  double total = 0.0;
  for (double c : trial.currents) total += c;
  const auto horizon = static_cast<long long>(trial.currents.size());
  const long long closed = closed_form_count(trial.v0, total, trial.threshold, trial.levels * horizon);
  r.lhs = {static_cast<double>(simulated)};
  r.rhs = {static_cast<double>(closed)};
  r.deviation = std::abs(static_cast<double>(simulated - closed));
  r.verdict = simulated == closed ? Verdict::Pass : Verdict::Fail;
  return r;
}

TrialReport check_lemma_s1(const WindowTrial& trial) {
  TrialReport r = base_report("lemmas1", trial);
  if (trial.currents.empty() || !window_preconditions(trial)) {
    r.verdict = Verdict::Skipped;
    r.note = "precondition-violated";
    return r;
  }
  const SequenceResult seq = run_sequence(integrate_config(trial), column(trial.currents));
  bool inside = true;
  double worst = 0.0;
  for (Eigen::Index t = 0; t < seq.potential.rows(); ++t) {
    const double v = seq.potential(t, 0);
    r.lhs.push_back(v);
    if (!(v >= 0.0 && v < trial.threshold)) inside = false;
    worst = std::max({worst, -v, v - trial.threshold});
  }
  r.rhs = {0.0, trial.threshold};
  r.deviation = std::max(0.0, worst);
  r.verdict = inside ? Verdict::Pass : Verdict::Fail;
  return r;
}

FiringRegion classify_firing_region(double current, double threshold, int levels, int horizon) {
  if (current < 0.0 || current >= levels * threshold) return FiringRegion::Uniform;
  for (int k = 0; k < levels; ++k) {
    const double lo = k * threshold;
    if (current >= lo && current < lo + threshold / horizon) return FiringRegion::Uniform;
  }
  return FiringRegion::Uneven;
}

bool simulated_uniform(double current, double threshold, int levels, int horizon) {
  NeuronConfig cfg;
  cfg.threshold = threshold;
  cfg.levels = levels;
  cfg.leak = 1.0;
  cfg.v0 = 0.0;
  const SequenceResult seq = run_sequence(cfg, Matrix::Constant(horizon, 1, current));
  return (seq.spikes.array() == seq.spikes(0, 0)).all();
}

RegionSweep sweep_firing_regions(int levels, int horizon, double threshold, int points,
                                 double band) {
  RegionSweep sweep;
  sweep.levels = levels;
  sweep.horizon = horizon;
  sweep.threshold = threshold;
  std::vector<double> boundaries;
  for (int k = 0; k <= levels; ++k) boundaries.push_back(k * threshold);
  for (int k = 0; k < levels; ++k) boundaries.push_back(k * threshold + threshold / horizon);

  const double lo = -threshold;
  const double width = (levels + 2) * threshold;
  for (int i = 0; i < points; ++i) {
    const double current = lo + (i + 0.5) * width / points;
    ++sweep.points;
    const bool near = std::any_of(boundaries.begin(), boundaries.end(),
                                  [&](double b) { return std::abs(current - b) <= band; });
    if (near) {
      ++sweep.excluded;
      continue;
    }
    const bool predicted =
        classify_firing_region(current, threshold, levels, horizon) == FiringRegion::Uniform;
    if (predicted != simulated_uniform(current, threshold, levels, horizon)) {
      ++sweep.disagreements;
      sweep.disagreeing_currents.push_back(current);
    }
  }
  return sweep;
}

TrialReport check_thm44_expectation(const ExpectationConfig& cfg) {
  if (cfg.samples < 100) throw RangeError("thm44: need at least 100 samples");
  TrialReport r;
  r.suite = "thm44";
  r.seed = cfg.seed;
  r.params = {{"L", cfg.levels},        {"T", cfg.horizon},
              {"Tq", cfg.quant_levels}, {"theta", cfg.threshold},
              {"N", cfg.samples}};
  r.note = "x ~ U[0, theta]";

  NeuronConfig neuron;
  neuron.threshold = cfg.threshold;
  neuron.levels = cfg.levels;
  neuron.leak = 1.0;
  neuron.v0 = 0.5 * cfg.threshold;
  const double lt = static_cast<double>(cfg.levels) * cfg.horizon;

  Rng rng = Rng(cfg.seed).split(0x7444);
  double mean = 0.0, m2 = 0.0, lhs_mean = 0.0, rhs_mean = 0.0;
  for (int n = 1; n <= cfg.samples; ++n) {
    const double x = rng.uniform(0.0, cfg.threshold);
    const SequenceResult seq =
        run_sequence(neuron, Matrix::Constant(cfg.horizon, 1, x * cfg.levels));
    const double rate = seq.spikes.sum() * cfg.threshold / lt;
    double q = std::floor(x * cfg.quant_levels / cfg.threshold + 0.5);
    q = std::clamp(q, 0.0, static_cast<double>(cfg.quant_levels));
    const double quant = cfg.threshold / cfg.quant_levels * q;
    const double gap = rate - quant;
    // Welford update.
    const double delta = gap - mean;
    mean += delta / n;
    m2 += delta * (gap - mean);
    lhs_mean += (rate - lhs_mean) / n;
    rhs_mean += (quant - rhs_mean) / n;
  }
  const double variance = m2 / (cfg.samples - 1);
  const double se = std::sqrt(variance / cfg.samples);
  r.lhs = {lhs_mean};
  r.rhs = {rhs_mean};
  r.deviation = std::abs(mean);
  r.params.emplace_back("mean_gap", mean);
  r.params.emplace_back("standard_error", se);
  r.verdict = std::abs(mean) <= 4.0 * se ? Verdict::Pass : Verdict::Fail;
  return r;
}

}  // namespace lmht
