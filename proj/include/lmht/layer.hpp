// layer.hpp
// Parameter containers for spiking networks.
#ifndef LMHT_LAYER_HPP
#define LMHT_LAYER_HPP

#include <vector>

#include "lmht/neuron.hpp"
#include "lmht/tgim.hpp"

namespace lmht {

struct LayerSpec {
  Matrix weight;  // out x in
  Vector bias;    // out
  double threshold = 1.0;
  int levels = 1;
  double v0 = 0.0;
  int leak_period = 1;
  // Per-step bias multiplier; 1/L after reparameterization.
  double bias_scale = 1.0;
  TGimParams tgim;

  Eigen::Index in_width() const { return weight.cols(); }
  Eigen::Index out_width() const { return weight.rows(); }
  // Neuron parameters with the current constrained leak.
  NeuronConfig neuron() const;
};

struct NetworkSpec {
  std::vector<LayerSpec> layers;
  int horizon = 1;
  // Analog features are multiplied by this before the first layer
  // (the number of threshold levels for LM-HT networks).
  double input_scale = 1.0;

  // Throws DimensionError / ConfigError on inconsistent structure.
  void validate() const;
  Eigen::Index input_width() const { return layers.front().in_width(); }
  Eigen::Index output_width() const { return layers.back().out_width(); }
  int output_levels() const { return layers.back().levels; }
};

}  // namespace lmht

#endif  // LMHT_LAYER_HPP
