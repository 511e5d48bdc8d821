// oracle.hpp
// Ground truths for the multi-level neuron: a plain IF simulator, the
// closed-form spike count, the firing-region classifier, and per-trial
// checks that compare them with the simulator in neuron.hpp.
#ifndef LMHT_ORACLE_HPP
#define LMHT_ORACLE_HPP

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lmht/numerics.hpp"

namespace lmht {

enum class Verdict { Pass, Fail, Skipped };
const char* to_string(Verdict v);

/// One oracle trial. `params` holds the sampled scalars, `lhs` and `rhs`
/// the two sides of the identity being checked. Skipped means the sampled
/// inputs fell outside the identity's preconditions.
struct TrialReport {
  std::string suite;
  std::uint64_t id = 0;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, double>> params;
  std::vector<double> currents;
  std::vector<double> lhs;
  std::vector<double> rhs;
  Verdict verdict = Verdict::Pass;
  double deviation = 0.0;
  std::string note;
};

struct IfTrace {
  std::vector<int> spikes;
  std::vector<double> potential;  // v after reset, one per step
};

// Integrate-and-fire (leak 1), soft reset, fires when m >= theta.
IfTrace if_simulate(double v0, std::span<const double> currents, double threshold);

// clip(floor((v0 + total) / theta), 0, cap)
long long closed_form_count(double v0, double total_current, double threshold, long long cap);

// A random multi-step trial for the window identities: leak 1,
// v0 in [0, theta), every current in [0, L theta).
struct WindowTrial {
  std::uint64_t seed = 0;
  std::uint64_t id = 0;
  int levels = 1;
  double threshold = 1.0;
  double v0 = 0.0;
  std::vector<double> currents;  // one per multi-level step
};

struct WindowSampling {
  int max_levels = 4;
  int max_horizon = 8;
  double min_threshold = 0.5;
  double max_threshold = 2.0;
};

// Regenerable from (seed, id) alone.
WindowTrial sample_window_trial(std::uint64_t seed, std::uint64_t id,
                                const WindowSampling& sampling = {});
// Same sampling but one constant current repeated over the horizon, drawn
// from [-theta/2, (L + 1/2) theta) so both saturation branches occur.
WindowTrial sample_uniform_trial(std::uint64_t seed, std::uint64_t id,
                                 const WindowSampling& sampling = {});

// One M-HT step against L IF steps of current I/L and the closed form.
TrialReport check_lemma41(const WindowTrial& trial);
// M-HT over T steps against IF over L T steps: per-window spike counts
// exactly, v(t) against v_IF(L t) within 1e-9.
TrialReport check_thm42_windows(const WindowTrial& trial);
// Uniform currents: total M-HT spikes against the closed form.
TrialReport check_thm42_closed_form(const WindowTrial& trial);
// v(t) stays in [0, theta) at every step.
TrialReport check_lemma_s1(const WindowTrial& trial);

inline constexpr double kPotentialTolerance = 1e-9;

enum class FiringRegion { Uniform, Uneven };

// Constant current I over T steps from v0 = 0 gives identical spike counts
// at every step iff I < 0, I >= L theta, or I in [k theta, k theta + theta/T).
FiringRegion classify_firing_region(double current, double threshold, int levels, int horizon);
// The same question answered by running the simulator.
bool simulated_uniform(double current, double threshold, int levels, int horizon);

struct RegionSweep {
  int levels = 1;
  int horizon = 1;
  double threshold = 1.0;
  int points = 0;
  int excluded = 0;
  int disagreements = 0;
  std::vector<double> disagreeing_currents;
};

// Midpoint grid over [-theta, (L + 1) theta]; points within `band` of an
// interval boundary are excluded.
RegionSweep sweep_firing_regions(int levels, int horizon, double threshold, int points,
                                 double band = 1e-9);

struct ExpectationConfig {
  int levels = 2;
  int horizon = 2;
  int quant_levels = 4;
  double threshold = 1.0;
  int samples = 100000;
  std::uint64_t seed = 1;
};

// Monte Carlo over x ~ U[0, theta]: the converted neuron (uniform current
// x L per step, v0 = theta / 2, leak 1) against the quantized activation
// with T_q levels and clip value theta. Passes iff |mean gap| <= 4 SE.
// Throws RangeError for fewer than 100 samples.
TrialReport check_thm44_expectation(const ExpectationConfig& cfg);

}  // namespace lmht

#endif  // LMHT_ORACLE_HPP
