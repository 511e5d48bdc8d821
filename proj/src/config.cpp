#include "lmht/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace lmht {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const auto [end, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || end != value.data() + value.size() || value.empty())
    throw ConfigError("config: bad value '" + value + "' for " + key);
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError("config: bad value '" + value + "' for " + key);
}

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

const char* dataset_name(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::GaussianBlobs: return "blobs";
    case DatasetKind::TwoMoons: return "moons";
    case DatasetKind::Csv: return "csv";
  }
  return "?";
}

}  // namespace

const char* to_string(RunMode mode) {
  switch (mode) {
    case RunMode::Direct: return "direct";
    case RunMode::Vanilla: return "vanilla";
    case RunMode::Hybrid: return "hybrid";
    case RunMode::Ann: return "ann";
  }
  return "?";
}

void apply_config_entry(RunConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "mode") {
    if (value == "direct") cfg.mode = RunMode::Direct;
    else if (value == "vanilla") cfg.mode = RunMode::Vanilla;
    else if (value == "hybrid") cfg.mode = RunMode::Hybrid;
    else if (value == "ann") cfg.mode = RunMode::Ann;
    else throw ConfigError("config: unknown mode '" + value + "'");
  } else if (key == "arch") {
    cfg.arch.clear();
    std::istringstream in(value);
    for (std::string w; std::getline(in, w, ',');) cfg.arch.push_back(parse_number<int>(key, trim(w)));
  } else if (key == "horizon") {
    cfg.horizon = parse_number<int>(key, value);
  } else if (key == "levels") {
    cfg.levels = parse_number<int>(key, value);
  } else if (key == "quant_levels") {
    cfg.quant_levels = parse_number<int>(key, value);
  } else if (key == "scale_input") {
    cfg.scale_input = parse_bool(key, value);
  } else if (key == "lr") {
    cfg.train.learning_rate = parse_number<double>(key, value);
  } else if (key == "weight_decay") {
    cfg.train.weight_decay = parse_number<double>(key, value);
  } else if (key == "momentum") {
    cfg.train.momentum = parse_number<double>(key, value);
  } else if (key == "epochs") {
    cfg.train.epochs = parse_number<int>(key, value);
  } else if (key == "batch_size") {
    cfg.train.batch_size = parse_number<int>(key, value);
  } else if (key == "seed") {
    cfg.train.seed = parse_number<std::uint64_t>(key, value);
  } else if (key == "ann_epochs") {
    cfg.ann_epochs = parse_number<int>(key, value);
  } else if (key == "ann_lr") {
    cfg.ann_learning_rate = parse_number<double>(key, value);
  } else if (key == "finetune_epochs") {
    cfg.finetune_epochs = parse_number<int>(key, value);
  } else if (key == "dataset") {
    cfg.data.kind = parse_dataset_kind(value);
  } else if (key == "samples") {
    cfg.data.samples = parse_number<int>(key, value);
  } else if (key == "classes") {
    cfg.data.classes = parse_number<int>(key, value);
  } else if (key == "data_seed") {
    cfg.data.seed = parse_number<std::uint64_t>(key, value);
  } else if (key == "spread") {
    cfg.data.spread = parse_number<double>(key, value);
  } else if (key == "csv_path") {
    cfg.data.csv_path = value;
  } else if (key == "energy_per_sop") {
    cfg.energy_per_sop = parse_number<double>(key, value);
  } else {
    throw ConfigError("config: unknown key '" + key + "'");
  }
}

RunConfig parse_config(std::istream& in) {
  RunConfig cfg;
  std::size_t lineno = 0;
  for (std::string line; std::getline(in, line);) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: line " + std::to_string(lineno) + ": expected key = value");
    try {
      apply_config_entry(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const Error& e) {
      throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  return parse_config(in);
}

std::vector<std::pair<std::string, std::string>> RunConfig::entries() const {
  std::string arch_text;
  for (std::size_t i = 0; i < arch.size(); ++i) arch_text += (i ? "," : "") + std::to_string(arch[i]);
  return {
      {"mode", to_string(mode)},
      {"arch", arch_text},
      {"horizon", std::to_string(horizon)},
      {"levels", std::to_string(levels)},
      {"quant_levels", std::to_string(quant_levels)},
      {"scale_input", scale_input ? "true" : "false"},
      {"lr", format_double(train.learning_rate)},
      {"weight_decay", format_double(train.weight_decay)},
      {"momentum", format_double(train.momentum)},
      {"epochs", std::to_string(train.epochs)},
      {"batch_size", std::to_string(train.batch_size)},
      {"seed", std::to_string(train.seed)},
      {"ann_epochs", std::to_string(ann_epochs)},
      {"ann_lr", format_double(ann_learning_rate)},
      {"finetune_epochs", std::to_string(finetune_epochs)},
      {"dataset", dataset_name(data.kind)},
      {"samples", std::to_string(data.samples)},
      {"classes", std::to_string(data.classes)},
      {"data_seed", std::to_string(data.seed)},
      {"spread", format_double(data.spread)},
      {"csv_path", data.csv_path},
      {"energy_per_sop", format_double(energy_per_sop)},
  };
}

}  // namespace lmht
