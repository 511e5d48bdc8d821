#include "lmht/verify.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

#include "json.hpp"
#include "lmht/loss.hpp"
#include "lmht/network.hpp"
#include "lmht/reference_grad.hpp"
#include "lmht/reparam.hpp"

namespace lmht {

namespace {

constexpr std::uint64_t kWindowTrials = 10000;
constexpr int kSweepPoints = 10000;
constexpr int kExpectationSamples = 100000;
constexpr std::uint64_t kReparamNetworks = 20;
constexpr std::uint64_t kGradNetworks = 100;

// Stream tags keep the suites' random draws independent of each other.
constexpr std::uint64_t kReparamStream = 0x7265;
constexpr std::uint64_t kToyStream = 0x6772;

struct SuiteInfo {
  Suite suite;
  const char* name;
};
constexpr SuiteInfo kSuites[] = {
    {Suite::Lemma41, "lemma41"}, {Suite::Thm42, "thm42"},     {Suite::Cor43, "cor43"},
    {Suite::Thm44, "thm44"},     {Suite::LemmaS1, "lemmas1"}, {Suite::Reparam, "reparam"},
    {Suite::Grad, "grad"},       {Suite::All, "all"},
};

template <typename Fn>
std::vector<TrialReport> run_trials(std::uint64_t n, unsigned threads, Fn fn) {
  std::vector<TrialReport> out(static_cast<std::size_t>(n));
  parallel_for(n, threads, [&](std::uint64_t id) { out[static_cast<std::size_t>(id)] = fn(id); });
  return out;
}

void append(std::vector<TrialReport>& dst, std::vector<TrialReport> src) {
  for (auto& r : src) dst.push_back(std::move(r));
}

// Sum of |W(o, i)| max|in_i| + |b_o| times the largest mixing row sum.
double current_bound(const LayerSpec& layer, Eigen::Index row, double max_input) {
  const TGimView view = constrained_view(layer.tgim);
  const double row_mix = view.omega.rowwise().sum().maxCoeff();
  const double affine_bound =
      layer.weight.row(row).cwiseAbs().sum() * max_input + std::abs(layer.bias_scale * layer.bias[row]);
  return row_mix * affine_bound;
}

std::vector<TrialReport> lemma41(const VerifyOptions& o, std::uint64_t n) {
  return run_trials(n, o.threads, [&](std::uint64_t id) {
    return check_lemma41(sample_window_trial(o.seed, id));
  });
}

std::vector<TrialReport> thm42(const VerifyOptions& o, std::uint64_t n) {
  auto out = run_trials(n, o.threads, [&](std::uint64_t id) {
    return check_thm42_windows(sample_window_trial(o.seed, id));
  });
  append(out, run_trials(n, o.threads, [&](std::uint64_t id) {
           return check_thm42_closed_form(sample_uniform_trial(o.seed, id));
         }));
  return out;
}

std::vector<TrialReport> lemma_s1(const VerifyOptions& o, std::uint64_t n) {
  return run_trials(n, o.threads, [&](std::uint64_t id) {
    return check_lemma_s1(sample_window_trial(o.seed, id));
  });
}

std::vector<TrialReport> cor43(const VerifyOptions& o, std::uint64_t points) {
  std::vector<std::pair<int, int>> configs;
  for (int levels = 1; levels <= 4; ++levels)
    for (int horizon = 2; horizon <= 6; ++horizon) configs.emplace_back(levels, horizon);
  return run_trials(configs.size(), o.threads, [&](std::uint64_t id) {
    const auto [levels, horizon] = configs[static_cast<std::size_t>(id)];
    const RegionSweep sweep = sweep_firing_regions(levels, horizon, 1.0, static_cast<int>(points));
    TrialReport r;
    r.suite = "cor43";
    r.id = id;
    r.seed = o.seed;
    r.params = {{"L", levels},
                {"T", horizon},
                {"theta", 1.0},
                {"points", sweep.points},
                {"excluded", sweep.excluded}};
    r.lhs = {static_cast<double>(sweep.disagreements)};
    r.rhs = {0.0};
    r.currents = sweep.disagreeing_currents;
    r.deviation = sweep.disagreements;
    r.verdict = sweep.disagreements == 0 ? Verdict::Pass : Verdict::Fail;
    return r;
  });
}

std::vector<TrialReport> thm44(const VerifyOptions& o, std::uint64_t samples) {
  const int configs[][3] = {{2, 2, 4}, {2, 4, 8}, {4, 2, 4}, {1, 1, 1}};
  return run_trials(4, o.threads, [&](std::uint64_t id) {
    ExpectationConfig cfg;
    cfg.levels = configs[id][0];
    cfg.horizon = configs[id][1];
    cfg.quant_levels = configs[id][2];
    cfg.samples = static_cast<int>(samples);
    cfg.seed = Rng(o.seed).split(id).next_u64();
    TrialReport r = check_thm44_expectation(cfg);
    r.id = id;
    r.seed = o.seed;
    return r;
  });
}

std::vector<TrialReport> reparam(const VerifyOptions& o, std::uint64_t n) {
  return run_trials(n, o.threads, [&](std::uint64_t id) { return check_reparam_trial(o.seed, id); });
}

std::vector<TrialReport> grad(const VerifyOptions& o, std::uint64_t n) {
  auto out = run_trials(n, o.threads, [&](std::uint64_t id) { return check_grad_trial(o.seed, id, false); });
  append(out, run_trials(n, o.threads, [&](std::uint64_t id) { return check_grad_trial(o.seed, id, true); }));
  append(out, run_trials(n, o.threads, [&](std::uint64_t id) { return check_detach_trial(o.seed, id); }));
  return out;
}

std::vector<TrialReport> run_suite(Suite suite, const VerifyOptions& o) {
  const auto n = [&](std::uint64_t fallback) { return o.trials ? o.trials : fallback; };
  switch (suite) {
    case Suite::Lemma41: return lemma41(o, n(kWindowTrials));
    case Suite::Thm42: return thm42(o, n(kWindowTrials));
    case Suite::Cor43: return cor43(o, n(kSweepPoints));
    case Suite::Thm44: return thm44(o, std::max<std::uint64_t>(100, n(kExpectationSamples)));
    case Suite::LemmaS1: return lemma_s1(o, n(kWindowTrials));
    case Suite::Reparam: return reparam(o, n(kReparamNetworks));
    case Suite::Grad: return grad(o, n(kGradNetworks));
    case Suite::All: break;
  }
  return {};
}

nlohmann::json to_json(const TrialReport& r) {
  nlohmann::json params = nlohmann::json::object();
  for (const auto& [k, v] : r.params) params[k] = v;
  nlohmann::json j;
  j["suite"] = r.suite;
  j["id"] = r.id;
  j["seed"] = r.seed;
  j["params"] = params;
  j["currents"] = r.currents;
  j["lhs"] = r.lhs;
  j["rhs"] = r.rhs;
  j["verdict"] = to_string(r.verdict);
  j["deviation"] = r.deviation;
  if (!r.note.empty()) j["note"] = r.note;
  return j;
}

}  // namespace

std::optional<Suite> parse_suite(const std::string& name) {
  for (const auto& s : kSuites)
    if (name == s.name) return s.suite;
  return std::nullopt;
}

const char* to_string(Suite suite) {
  for (const auto& s : kSuites)
    if (s.suite == suite) return s.name;
  return "?";
}

unsigned thread_budget() {
  if (const char* env = std::getenv("LMHT_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::uint64_t n, unsigned threads, const std::function<void(std::uint64_t)>& fn) {
  const auto workers = static_cast<unsigned>(std::min<std::uint64_t>(std::max(1u, threads), n));
  if (workers <= 1) {
    for (std::uint64_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::uint64_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::uint64_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

bool VerifyResult::ok() const {
  return std::all_of(summaries.begin(), summaries.end(), [](const SuiteSummary& s) { return s.failed == 0; });
}

VerifyResult run_verify(const VerifyOptions& opts) {
  std::vector<Suite> suites;
  if (opts.suite == Suite::All) {
    for (const auto& s : kSuites)
      if (s.suite != Suite::All) suites.push_back(s.suite);
  } else {
    suites.push_back(opts.suite);
  }
  VerifyResult result;
  for (Suite suite : suites) {
    std::vector<TrialReport> reports = run_suite(suite, opts);
    // Families inside a suite (e.g. the closed-form half of thm42) keep
    // their own name; summaries follow the record names.
    for (const TrialReport& r : reports) {
      auto it = std::find_if(result.summaries.begin(), result.summaries.end(),
                             [&](const SuiteSummary& s) { return s.suite == r.suite; });
      if (it == result.summaries.end()) {
        result.summaries.push_back({r.suite});
        it = std::prev(result.summaries.end());
      }
      ++it->total;
      if (r.verdict == Verdict::Pass) ++it->passed;
      else if (r.verdict == Verdict::Fail) ++it->failed;
      else ++it->skipped;
      if (r.verdict != Verdict::Skipped) it->max_deviation = std::max(it->max_deviation, r.deviation);
    }
    std::stable_sort(reports.begin(), reports.end(), [](const TrialReport& a, const TrialReport& b) {
      return a.suite != b.suite ? a.suite < b.suite : a.id < b.id;
    });
    append(result.reports, std::move(reports));
  }
  return result;
}

std::string render_report(const VerifyResult& result, const VerifyOptions& opts) {
  std::string out;
  nlohmann::json header;
  header["record"] = "header";
  header["suite"] = to_string(opts.suite);
  header["seed"] = opts.seed;
  header["trials"] = opts.trials;
  header["expectation_input"] = "x ~ U[0, theta]";
  out += header.dump() + '\n';
  for (const TrialReport& r : result.reports) out += to_json(r).dump() + '\n';
  std::uint64_t failures = 0;
  for (const SuiteSummary& s : result.summaries) {
    nlohmann::json j;
    j["record"] = "summary";
    j["suite"] = s.suite;
    j["total"] = s.total;
    j["passed"] = s.passed;
    j["failed"] = s.failed;
    j["skipped"] = s.skipped;
    j["max_deviation"] = s.max_deviation;
    out += j.dump() + '\n';
    failures += s.failed;
  }
  nlohmann::json total;
  total["record"] = "result";
  total["failures"] = failures;
  total["ok"] = failures == 0;
  out += total.dump() + '\n';
  return out;
}

NetworkSpec random_reparam_network(std::uint64_t seed, std::uint64_t id) {
  Rng rng = Rng(seed).split(kReparamStream).split(id);
  const int levels = rng.uniform_int(2, 4);
  const int horizon = rng.uniform_int(2, 3);
  std::vector<int> arch{rng.uniform_int(2, 6)};
  for (int l = 0; l < 3; ++l) arch.push_back(rng.uniform_int(2, 6));
  NetworkSpec net = build_network(arch, horizon, levels, rng.next_u64());

  double max_input = net.input_scale;  // features lie in [-1, 1]
  for (LayerSpec& layer : net.layers) {
    layer.threshold = rng.uniform(0.5, 2.0);
    layer.v0 = rng.uniform(0.0, layer.threshold);
    layer.bias = rng_uniform(rng, -0.5, 0.5, layer.out_width(), 1).col(0);
    layer.tgim.raw_omega = rng_uniform(rng, -3.0, 3.0, horizon, horizon);
    layer.tgim.raw_leak = rng.uniform(-3.0, 0.0);  // leak = 2 sigmoid(raw) <= 1
    const double cap = 0.99 * levels * layer.threshold;
    for (Eigen::Index o = 0; o < layer.out_width(); ++o) {
      const double bound = current_bound(layer, o, max_input);
      if (bound > 0.0) {
        layer.weight.row(o) *= cap / bound;
        layer.bias[o] *= cap / bound;
      }
    }
    max_input = levels * layer.threshold;
  }
  return net;
}

Matrix random_reparam_inputs(std::uint64_t seed, std::uint64_t id, Eigen::Index count,
                             Eigen::Index width) {
  Rng rng = Rng(seed).split(kReparamStream + 1).split(id);
  return rng_uniform(rng, -1.0, 1.0, count, width);
}

NetworkSpec random_toy_network(std::uint64_t seed, std::uint64_t id, int max_levels) {
  Rng rng = Rng(seed).split(kToyStream).split(id);
  const int depth = rng.uniform_int(1, 3);
  const int horizon = rng.uniform_int(1, 4);
  const int levels = rng.uniform_int(1, max_levels);
  std::vector<int> arch;
  for (int l = 0; l <= depth; ++l) arch.push_back(rng.uniform_int(1, 4));
  NetworkSpec net = build_network(arch, horizon, levels, rng.next_u64());
  for (LayerSpec& layer : net.layers) {
    layer.threshold = rng.uniform(0.5, 1.5);
    layer.v0 = rng.uniform(0.0, layer.threshold);
    layer.weight = rng_uniform(rng, -0.5, 0.5, layer.out_width(), layer.in_width());
    layer.bias = rng_uniform(rng, 0.5, levels + 0.5, layer.out_width(), 1).col(0) * layer.threshold;
    // Mixing rows sum to about one so membranes stay near the surrogate window.
    layer.tgim.raw_omega =
        rng_uniform(rng, -1.5, 1.5, horizon, horizon).array() + logit(1.0 / (horizon + 1.0));
    layer.tgim.raw_leak = rng.uniform(-2.0, 2.0);
  }
  return net;
}

TrialReport check_reparam_trial(std::uint64_t seed, std::uint64_t id, Eigen::Index inputs) {
  const NetworkSpec source = random_reparam_network(seed, id);
  const NetworkSpec target = reparameterize_network(source);
  const Matrix x = random_reparam_inputs(seed, id, inputs, source.input_width());
  const EquivalenceReport eq = verify_equivalence(source, target, x);
  TrialReport r;
  r.suite = "reparam";
  r.id = id;
  r.seed = seed;
  r.params = {{"L", source.layers.front().levels},
              {"T", source.horizon},
              {"inputs", static_cast<double>(inputs)},
              {"window_mismatches", eq.window_mismatches},
              {"current_deviation", eq.max_current_deviation},
              {"sop_gap", eq.sop_relative_gap}};
  r.lhs = {static_cast<double>(eq.source_sops.sops)};
  r.rhs = {static_cast<double>(eq.target_sops.sops)};
  r.deviation = eq.max_logit_deviation;
  r.verdict = eq.pass ? Verdict::Pass : Verdict::Fail;
  return r;
}

TrialReport check_grad_trial(std::uint64_t seed, std::uint64_t id, bool vanilla) {
  NetworkSpec net = random_toy_network(seed, id, vanilla ? 1 : 3);
  Rng rng = Rng(seed).split(kToyStream + 1).split(id);
  const Vector x = rng_uniform(rng, 0.0, 1.0, net.input_width(), 1).col(0);
  const int label = rng.uniform_int(0, static_cast<int>(net.output_width()) - 1);
  const BackwardMode mode = vanilla ? BackwardMode::Vanilla : BackwardMode::Detached;

  const ReferenceGradients ref = reference_gradients(net, x, label, mode);
  const SampleTrace trace = simulate(net, x, true);
  const Matrix logits = trace.logits.transpose();
  const std::vector<int> labels{label};
  const LossResult loss = loss_and_grad(logits, labels);
  const auto grads = network_backward(net, trace.caches, loss.grad_logits.row(0).transpose(), mode);
  const double err = relative_gradient_error(grads, ref.layers);
  double norm = 0.0;
  for (const auto& g : ref.layers) norm += g.weight.squaredNorm();

  TrialReport r;
  r.suite = vanilla ? "grad-vanilla" : "grad-detached";
  r.id = id;
  r.seed = seed;
  r.params = {{"layers", static_cast<double>(net.layers.size())},
              {"T", net.horizon},
              {"L", net.layers.front().levels},
              {"weight_grad_norm", std::sqrt(norm)}};
  r.lhs = {loss.loss};
  r.rhs = {ref.loss};
  r.deviation = err;
  r.verdict = (err <= kGradientTolerance && (trace.logits - ref.logits).cwiseAbs().maxCoeff() == 0.0)
                  ? Verdict::Pass
                  : Verdict::Fail;
  return r;
}

TrialReport check_detach_trial(std::uint64_t seed, std::uint64_t id) {
  NetworkSpec net = random_toy_network(seed, id, 3);
  Rng rng = Rng(seed).split(kToyStream + 2).split(id);
  const int horizon = net.horizon;
  const int column = rng.uniform_int(0, horizon - 1);
  LayerSpec& first = net.layers.front();
  first.tgim.raw_omega = rng_uniform(rng, 0.1, 1.0, horizon, horizon);
  first.tgim.raw_omega.col(column).setZero();
  first.tgim.raw_leak = rng.uniform(0.1, 1.0);
  first.tgim.bypass = true;

  const Vector x = rng_uniform(rng, 0.0, 1.0, net.input_width(), 1).col(0);
  const SampleTrace trace = simulate(net, x, true);
  // Unit gradient on every output spike.
  const auto grads = network_backward(net, trace.caches, Vector::Ones(net.output_width()),
                                      BackwardMode::Detached);
  const double blocked = grads.front().input_spikes.row(column).cwiseAbs().maxCoeff();

  TrialReport r;
  r.suite = "grad-detach";
  r.id = id;
  r.seed = seed;
  r.params = {{"T", horizon}, {"column", column}};
  r.lhs = {blocked};
  r.rhs = {0.0};
  r.deviation = blocked;
  r.verdict = blocked == 0.0 ? Verdict::Pass : Verdict::Fail;
  return r;
}

}  // namespace lmht
