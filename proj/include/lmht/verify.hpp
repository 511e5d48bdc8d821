// verify.hpp
// Runs the oracle suites in parallel and renders their reports as
// line-delimited JSON. Trials are keyed by (seed, id) so the report body
// does not depend on the number of worker threads.
#ifndef LMHT_VERIFY_HPP
#define LMHT_VERIFY_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "lmht/layer.hpp"
#include "lmht/oracle.hpp"

namespace lmht {

enum class Suite { Lemma41, Thm42, Cor43, Thm44, LemmaS1, Reparam, Grad, All };

std::optional<Suite> parse_suite(const std::string& name);
const char* to_string(Suite suite);

struct VerifyOptions {
  Suite suite = Suite::All;
  // 0 selects each suite's default size.
  std::uint64_t trials = 0;
  std::uint64_t seed = 1;
  unsigned threads = 1;
};

struct SuiteSummary {
  std::string suite;
  std::uint64_t total = 0;
  std::uint64_t passed = 0;
  std::uint64_t failed = 0;
  std::uint64_t skipped = 0;
  double max_deviation = 0.0;
};

struct VerifyResult {
  std::vector<TrialReport> reports;  // grouped by suite, ascending id
  std::vector<SuiteSummary> summaries;
  bool ok() const;
};

VerifyResult run_verify(const VerifyOptions& opts);

// One JSON object per trial, then one summary object per suite and a
// final overall line.
std::string render_report(const VerifyResult& result, const VerifyOptions& opts);

// LMHT_THREADS if set to a positive integer, else the hardware count.
unsigned thread_budget();

// Calls fn(i) for i in [0, n) on up to `threads` workers. The first
// exception thrown by any call is rethrown.
void parallel_for(std::uint64_t n, unsigned threads, const std::function<void(std::uint64_t)>& fn);

// Three-layer network with L in {2, 3, 4}, T in {2, 3} whose mixed
// currents provably stay below L theta for inputs in [-1, 1], with leak
// in (0, 1] and v0 in [0, theta).
NetworkSpec random_reparam_network(std::uint64_t seed, std::uint64_t id);
Matrix random_reparam_inputs(std::uint64_t seed, std::uint64_t id, Eigen::Index count,
                             Eigen::Index width);

// Up to three layers, T <= 4, widths <= 4, L <= max_levels, with random
// mixing, leak, thresholds and v0.
NetworkSpec random_toy_network(std::uint64_t seed, std::uint64_t id, int max_levels);

TrialReport check_reparam_trial(std::uint64_t seed, std::uint64_t id, Eigen::Index inputs = 100);
// Detached (any L) and vanilla (L = 1) backward against the tape evaluator.
TrialReport check_grad_trial(std::uint64_t seed, std::uint64_t id, bool vanilla);
// Zeroes column j of a frozen mixing matrix and checks that the input
// gradient at step j is exactly zero.
TrialReport check_detach_trial(std::uint64_t seed, std::uint64_t id);

}  // namespace lmht

#endif  // LMHT_VERIFY_HPP
