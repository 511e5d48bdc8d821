// lmht: command-line driver.
//
//   lmht verify  --suite all --seed 1 [--trials N] [--out report.jsonl]
//   lmht train   --config run.cfg --out model.ckpt
//   lmht convert --ann ann.ckpt --horizon 2 --levels 2 --out snn.ckpt
//   lmht reparam --in snn.ckpt --out flat.ckpt [--check]
//   lmht bench   --ckpt snn.ckpt
//
// Exit status: 0 success, 1 verification or training failure (including
// corrupt checkpoints), 2 usage error.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "lmht/checkpoint.hpp"
#include "lmht/config.hpp"
#include "lmht/loss.hpp"
#include "lmht/reparam.hpp"
#include "lmht/train.hpp"
#include "lmht/verify.hpp"

namespace {

using namespace lmht;

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kUsage = 2;

class UsageError : public Error {
 public:
  using Error::Error;
};

std::string command_line(int argc, char** argv) {
  std::string out;
  for (int i = 0; i < argc; ++i) {
    if (i) out += ' ';
    out += argv[i];
  }
  return out;
}

void print_history(const std::vector<EpochStats>& history, const char* stage) {
  for (const EpochStats& s : history)
    std::printf("%s epoch %d loss %.6f accuracy %.4f\n", stage, s.epoch, s.loss, s.accuracy);
}

// Dataset from a config file when given, else from checkpoint metadata.
Dataset resolve_dataset(const std::string& config_path, const Checkpoint& ckpt) {
  RunConfig cfg;
  if (!config_path.empty()) {
    cfg = load_config(config_path);
  } else {
    bool any = false;
    for (const auto& [k, v] : ckpt.meta) {
      try {
        apply_config_entry(cfg, k, v);
        any = true;
      } catch (const ConfigError&) {
        // Keys that are not run settings are ignored.
      }
    }
    if (!any) throw UsageError("no dataset settings: pass --config");
  }
  return make_dataset(cfg.data);
}

Checkpoint load_or_usage(const std::string& path) {
  if (!std::filesystem::exists(path)) throw UsageError("no such file: " + path);
  return load_checkpoint(path);
}

int cmd_verify(const std::string& suite_name, std::uint64_t trials, std::uint64_t seed,
               const std::string& out_path) {
  const auto suite = parse_suite(suite_name);
  if (!suite) throw UsageError("unknown suite '" + suite_name + "'");
  VerifyOptions opts;
  opts.suite = *suite;
  opts.trials = trials;
  opts.seed = seed;
  opts.threads = thread_budget();
  const VerifyResult result = run_verify(opts);
  const std::string report = render_report(result, opts);
  if (out_path.empty()) {
    std::fwrite(report.data(), 1, report.size(), stdout);
  } else {
    std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
    if (!out) throw UsageError("cannot write " + out_path);
    out << report;
  }
  for (const SuiteSummary& s : result.summaries)
    std::fprintf(stderr, "%-14s total %llu passed %llu failed %llu skipped %llu max_deviation %.3g\n",
                 s.suite.c_str(), static_cast<unsigned long long>(s.total),
                 static_cast<unsigned long long>(s.passed), static_cast<unsigned long long>(s.failed),
                 static_cast<unsigned long long>(s.skipped), s.max_deviation);
  return result.ok() ? kOk : kFailure;
}

int cmd_train(const std::string& config_path, const std::string& out_path, const std::string& cmd) {
  if (!std::filesystem::exists(config_path)) throw UsageError("no such config: " + config_path);
  const RunConfig cfg = load_config(config_path);
  const Dataset data = make_dataset(cfg.data);
  Checkpoint ckpt;
  ckpt.seed = cfg.train.seed;
  ckpt.command = cmd;
  ckpt.meta = cfg.entries();

  QcfsTrainConfig ann_cfg;
  ann_cfg.arch = cfg.arch;
  ann_cfg.levels = cfg.quant_levels;
  ann_cfg.learning_rate = cfg.ann_learning_rate;
  ann_cfg.weight_decay = cfg.train.weight_decay;
  ann_cfg.momentum = cfg.train.momentum;
  ann_cfg.epochs = cfg.ann_epochs;
  ann_cfg.batch_size = cfg.train.batch_size;
  ann_cfg.seed = cfg.train.seed;

  switch (cfg.mode) {
    case RunMode::Direct:
    case RunMode::Vanilla: {
      const bool vanilla = cfg.mode == RunMode::Vanilla;
      const int levels = vanilla ? 1 : cfg.levels;
      NetworkSpec net = build_network(cfg.arch, cfg.horizon, levels, cfg.train.seed,
                                      vanilla ? TGimInit::Identity : TGimInit::Uniform);
      if (!cfg.scale_input) net.input_scale = 1.0;
      TrainConfig tc = cfg.train;
      tc.mode = vanilla ? TrainMode::VanillaReference : TrainMode::Direct;
      const TrainResult result = stbp_train(std::move(net), data, tc);
      print_history(result.history, "stbp");
      std::printf("final accuracy %.4f\n", accuracy(result.net, data));
      ckpt.model = result.net;
      break;
    }
    case RunMode::Ann: {
      ann_cfg.epochs = cfg.train.epochs;
      ann_cfg.learning_rate = cfg.train.learning_rate;
      const QcfsTrainResult result = train_qcfs_ann(data, ann_cfg);
      print_history(result.history, "ann");
      std::printf("final accuracy %.4f\n", accuracy(result.net, data));
      ckpt.model = result.net;
      break;
    }
    case RunMode::Hybrid: {
      const QcfsTrainResult ann = train_qcfs_ann(data, ann_cfg);
      print_history(ann.history, "ann");
      const NetworkSpec converted = hybrid_convert(ann.net, cfg.horizon, cfg.levels);
      std::printf("ann accuracy %.4f zero-shot accuracy %.4f\n", accuracy(ann.net, data),
                  accuracy(converted, data));
      const TrainResult tuned = hybrid_finetune(converted, data, cfg.finetune_epochs, cfg.train);
      print_history(tuned.history, "finetune");
      std::printf("final accuracy %.4f\n", accuracy(tuned.net, data));
      ckpt.model = tuned.net;
      break;
    }
  }
  save_checkpoint(out_path, ckpt);
  std::printf("wrote %s\n", out_path.c_str());
  return kOk;
}

int cmd_convert(const std::string& ann_path, int horizon, int levels, const std::string& out_path,
                const std::string& config_path, const std::string& cmd) {
  const Checkpoint in = load_or_usage(ann_path);
  if (in.is_snn()) throw UsageError(ann_path + " holds a spiking network, expected an ANN");
  const QcfsNetwork& ann = std::get<QcfsNetwork>(in.model);
  Checkpoint out;
  out.model = hybrid_convert(ann, horizon, levels);
  out.seed = in.seed;
  out.command = cmd;
  out.meta = in.meta;
  save_checkpoint(out_path, out);
  std::printf("wrote %s\n", out_path.c_str());
  try {
    const Dataset data = resolve_dataset(config_path, in);
    std::printf("ann accuracy %.4f zero-shot accuracy %.4f\n", accuracy(ann, data),
                accuracy(std::get<NetworkSpec>(out.model), data));
  } catch (const UsageError& e) {
    std::printf("zero-shot accuracy not evaluated: %s\n", e.what());
  }
  return kOk;
}

Matrix verification_inputs(const Checkpoint& ckpt, const NetworkSpec& net, int count,
                           std::uint64_t seed) {
  try {
    const Dataset data = resolve_dataset("", ckpt);
    if (data.features.cols() == net.input_width())
      return data.features.topRows(std::min<Eigen::Index>(count, data.size()));
  } catch (const Error&) {
    // Fall back to random inputs.
  }
  Rng rng(seed);
  return rng_uniform(rng, -1.0, 1.0, count, net.input_width());
}

int cmd_reparam(const std::string& in_path, const std::string& out_path, int trials, bool check,
                std::uint64_t seed, const std::string& cmd) {
  const Checkpoint in = load_or_usage(in_path);
  if (!in.is_snn()) throw UsageError(in_path + " holds an ANN, expected a spiking network");
  const NetworkSpec& source = std::get<NetworkSpec>(in.model);
  const NetworkSpec target = reparameterize_network(source);

  NetworkSpec candidate = target;
  bool identical = true;
  if (check) {
    const Checkpoint existing = load_or_usage(out_path);
    if (!existing.is_snn()) throw IntegrityError(out_path + " does not hold a spiking network");
    candidate = std::get<NetworkSpec>(existing.model);
    Checkpoint expected = existing;
    expected.model = target;
    identical = serialize_checkpoint(expected) == serialize_checkpoint(existing);
  } else {
    Checkpoint out;
    out.model = target;
    out.seed = in.seed;
    out.command = cmd;
    out.meta = in.meta;
    save_checkpoint(out_path, out);
    std::printf("wrote %s\n", out_path.c_str());
  }

  if (candidate.layers.size() != source.layers.size() || candidate.horizon % source.horizon != 0) {
    std::printf("equivalence FAIL: %s has a different structure\n", out_path.c_str());
    return kFailure;
  }
  const Matrix inputs = verification_inputs(in, source, trials, seed);
  const EquivalenceReport eq = verify_equivalence(source, candidate, inputs);
  std::printf("levels %d -> %d, horizon %d -> %d\n", source.layers.front().levels,
              candidate.layers.front().levels, source.horizon, candidate.horizon);
  std::printf("inputs %d window_mismatches %d max_logit_deviation %.3g sops %llu -> %llu\n",
              eq.inputs, eq.window_mismatches, eq.max_logit_deviation,
              static_cast<unsigned long long>(eq.source_sops.sops),
              static_cast<unsigned long long>(eq.target_sops.sops));
  if (!identical) std::printf("%s differs from the reparameterized network\n", out_path.c_str());
  const bool ok = eq.pass && identical;
  std::printf("equivalence %s\n", ok ? "PASS" : "FAIL");
  return ok ? kOk : kFailure;
}

int cmd_bench(const std::string& path, const std::string& config_path, int samples) {
  const Checkpoint ckpt = load_or_usage(path);
  if (!ckpt.is_snn()) throw UsageError(path + " holds an ANN, expected a spiking network");
  const NetworkSpec& net = std::get<NetworkSpec>(ckpt.model);
  RunConfig cfg;
  for (const auto& [k, v] : ckpt.meta) {
    try {
      apply_config_entry(cfg, k, v);
    } catch (const ConfigError&) {
      // Not a run setting.
    }
  }
  if (!config_path.empty()) cfg = load_config(config_path);
  Dataset data = resolve_dataset(config_path, ckpt);
  if (samples > 0 && samples < data.size()) {
    std::vector<std::size_t> rows(static_cast<std::size_t>(samples));
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    data = data.subset(rows);
  }
  const ForwardResult fr = forward(net, data.features, true);
  const SopReport sops = count_sops(net, fr.stats, cfg.energy_per_sop);
  nlohmann::json j;
  j["samples"] = data.size();
  j["accuracy"] = static_cast<double>(count_correct(fr.logits, data.labels)) / data.size();
  j["sops"] = sops.sops;
  j["sops_per_sample"] = static_cast<double>(sops.sops) / data.size();
  j["energy_mj"] = sops.energy_mj;
  j["levels"] = net.layers.front().levels;
  j["horizon"] = net.horizon;
  std::printf("%s\n", j.dump().c_str());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LM-HT spiking network toolkit"};
  app.require_subcommand(1);
  const std::string cmd = command_line(argc, argv);

  std::string suite = "all", out_path, config_path, in_path, ann_path, ckpt_path;
  std::uint64_t trials = 0, seed = 1;
  int horizon = 2, levels = 2, inputs = 100, samples = 0;
  bool check = false;

  auto* verify = app.add_subcommand("verify", "Run oracle suites");
  verify->add_option("--suite", suite, "lemma41|thm42|cor43|thm44|lemmas1|reparam|grad|all");
  verify->add_option("--trials", trials, "Trials per suite (0 = suite default)");
  verify->add_option("--seed", seed, "Base seed");
  verify->add_option("--out", out_path, "Report file (default stdout)");

  auto* train = app.add_subcommand("train", "Train from a config file");
  train->add_option("--config", config_path, "key = value config")->required();
  train->add_option("--out", out_path, "Checkpoint to write")->required();

  auto* convert = app.add_subcommand("convert", "Convert a QCFS ANN checkpoint");
  convert->add_option("--ann", ann_path, "ANN checkpoint")->required();
  convert->add_option("--horizon", horizon, "Time-steps T")->check(CLI::PositiveNumber);
  convert->add_option("--levels", levels, "Threshold levels L")->check(CLI::PositiveNumber);
  convert->add_option("--out", out_path, "Checkpoint to write")->required();
  convert->add_option("--config", config_path, "Dataset config for zero-shot accuracy");

  auto* reparam = app.add_subcommand("reparam", "Rewrite as a single-threshold network");
  reparam->add_option("--in", in_path, "Source checkpoint")->required();
  reparam->add_option("--out", out_path, "Output checkpoint")->required();
  reparam->add_option("--inputs", inputs, "Inputs used to verify equivalence")->check(CLI::PositiveNumber);
  reparam->add_option("--seed", seed, "Seed for random verification inputs");
  reparam->add_flag("--check", check, "Verify an existing output instead of writing it");

  auto* bench = app.add_subcommand("bench", "Forward pass with SOP and energy counts");
  bench->add_option("--ckpt", ckpt_path, "Spiking network checkpoint")->required();
  bench->add_option("--config", config_path, "Dataset config (default: checkpoint metadata)");
  bench->add_option("--samples", samples, "Evaluate only the first N samples");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*verify) return cmd_verify(suite, trials, seed, out_path);
    if (*train) return cmd_train(config_path, out_path, cmd);
    if (*convert) return cmd_convert(ann_path, horizon, levels, out_path, config_path, cmd);
    if (*reparam) return cmd_reparam(in_path, out_path, inputs, check, seed, cmd);
    if (*bench) return cmd_bench(ckpt_path, config_path, samples);
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kUsage;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kUsage;
  } catch (const IntegrityError& e) {
    std::fprintf(stderr, "integrity error: %s\n", e.what());
    return kFailure;
  } catch (const TrainingError& e) {
    std::fprintf(stderr, "training failed at epoch %d: %s\n", e.epoch(), e.what());
    return kFailure;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kFailure;
  }
  return kUsage;
}
