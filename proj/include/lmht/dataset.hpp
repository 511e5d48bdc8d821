// dataset.hpp
// Small labelled point clouds for desk-scale training runs.
#ifndef LMHT_DATASET_HPP
#define LMHT_DATASET_HPP

#include <cstdint>
#include <istream>
#include <string>
#include <vector>

#include "lmht/numerics.hpp"

namespace lmht {

struct Dataset {
  Matrix features;  // N x d
  std::vector<int> labels;
  int classes = 0;

  Eigen::Index size() const { return features.rows(); }
  Dataset subset(const std::vector<std::size_t>& rows) const;
};

enum class DatasetKind { GaussianBlobs, TwoMoons, Csv };

struct SyntheticDataset {
  DatasetKind kind = DatasetKind::GaussianBlobs;
  int samples = 600;
  int classes = 3;
  std::uint64_t seed = 7;
  double spread = 0.5;  // blob standard deviation / moon noise
  std::string csv_path;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

Dataset make_dataset(const SyntheticDataset& spec);

// Comma-separated floats, last column an integer label, no header.
// Blank lines are skipped; line numbers in errors are 1-based.
Dataset parse_csv(std::istream& in);
Dataset load_csv(const std::string& path);

DatasetKind parse_dataset_kind(const std::string& name);

}  // namespace lmht

#endif  // LMHT_DATASET_HPP
