// config.hpp
// Flat key = value run configuration for the command-line tool.
//
//   # comment
//   mode = direct          # direct | vanilla | hybrid | ann
//   arch = 2,32,32,3
//   horizon = 2
//   levels = 2
//
// Unknown keys and malformed values are errors that carry the line number.
#ifndef LMHT_CONFIG_HPP
#define LMHT_CONFIG_HPP

#include <istream>
#include <string>
#include <utility>
#include <vector>

#include "lmht/dataset.hpp"
#include "lmht/train.hpp"

namespace lmht {

enum class RunMode { Direct, Vanilla, Hybrid, Ann };

struct RunConfig {
  RunMode mode = RunMode::Direct;
  std::vector<int> arch{2, 32, 32, 3};
  int horizon = 2;
  int levels = 2;
  int quant_levels = 4;
  // Multiply analog input by L in direct and vanilla modes too.
  bool scale_input = true;
  TrainConfig train;
  // Used by hybrid mode: epochs for the ANN stage and for fine-tuning.
  int ann_epochs = 300;
  double ann_learning_rate = 0.1;
  int finetune_epochs = 30;
  SyntheticDataset data;
  double energy_per_sop = 0.9e-9;

  // Key/value pairs in canonical order, for checkpoint metadata.
  std::vector<std::pair<std::string, std::string>> entries() const;
};

RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::string& path);
// Applies a single key (as in the file) to `cfg`; throws ConfigError.
void apply_config_entry(RunConfig& cfg, const std::string& key, const std::string& value);
const char* to_string(RunMode mode);

}  // namespace lmht

#endif  // LMHT_CONFIG_HPP
