#include "lmht/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numbers>
#include <sstream>

namespace lmht {

Dataset Dataset::subset(const std::vector<std::size_t>& rows) const {
  Dataset out;
  out.classes = classes;
  out.features.resize(static_cast<Eigen::Index>(rows.size()), features.cols());
  out.labels.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.features.row(static_cast<Eigen::Index>(i)) = features.row(static_cast<Eigen::Index>(rows[i]));
    out.labels.push_back(labels[rows[i]]);
  }
  return out;
}

namespace {

Dataset gaussian_blobs(const SyntheticDataset& spec) {
  Rng rng(spec.seed);
  Dataset d;
  d.classes = spec.classes;
  d.features.resize(spec.samples, 2);
  d.labels.resize(static_cast<std::size_t>(spec.samples));
  // Centres evenly spaced on a circle of radius 2.
  for (int i = 0; i < spec.samples; ++i) {
    const int label = i % spec.classes;
    const double angle = 2.0 * std::numbers::pi * label / spec.classes;
    d.features(i, 0) = 2.0 * std::cos(angle) + rng.normal(0.0, spec.spread);
    d.features(i, 1) = 2.0 * std::sin(angle) + rng.normal(0.0, spec.spread);
    d.labels[static_cast<std::size_t>(i)] = label;
  }
  return d;
}

Dataset two_moons(const SyntheticDataset& spec) {
  Rng rng(spec.seed);
  Dataset d;
  d.classes = 2;
  d.features.resize(spec.samples, 2);
  d.labels.resize(static_cast<std::size_t>(spec.samples));
  for (int i = 0; i < spec.samples; ++i) {
    const int label = i % 2;
    const double a = std::numbers::pi * rng.next_double();
    double x = std::cos(a), y = std::sin(a);
    if (label == 1) {
      x = 1.0 - x;
      y = 0.5 - y;
    }
    d.features(i, 0) = x + rng.normal(0.0, spec.spread);
    d.features(i, 1) = y + rng.normal(0.0, spec.spread);
    d.labels[static_cast<std::size_t>(i)] = label;
  }
  return d;
}

bool parse_double(std::string_view text, double& out) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r'))
    text.remove_suffix(1);
  if (text.empty()) return false;
  if (text.front() == '+') text.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

}  // namespace

Dataset make_dataset(const SyntheticDataset& spec) {
  if (spec.kind == DatasetKind::Csv) return load_csv(spec.csv_path);
  if (spec.classes < 1 || spec.samples < spec.classes)
    throw ConfigError("dataset: need samples >= classes >= 1");
  if (spec.kind == DatasetKind::TwoMoons) return two_moons(spec);
  return gaussian_blobs(spec);
}

Dataset parse_csv(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> values;
    std::string_view rest(line);
    while (true) {
      const auto comma = rest.find(',');
      double v = 0.0;
      if (!parse_double(rest.substr(0, comma), v))
        throw ParseError("csv: malformed number '" + std::string(rest.substr(0, comma)) + "'",
                         line_no);
      values.push_back(v);
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (values.size() < 2) throw ParseError("csv: need at least one feature and a label", line_no);
    const double label = values.back();
    if (label != std::floor(label) || label < 0)
      throw ParseError("csv: label must be a non-negative integer", line_no);
    values.pop_back();
    if (width == 0) width = values.size();
    if (values.size() != width) throw ParseError("csv: inconsistent column count", line_no);
    rows.push_back(std::move(values));
    labels.push_back(static_cast<int>(label));
  }
  Dataset d;
  d.features.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < width; ++j)
      d.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  d.labels = std::move(labels);
  d.classes = d.labels.empty() ? 0 : *std::max_element(d.labels.begin(), d.labels.end()) + 1;
  return d;
}

Dataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("csv: cannot open " + path);
  return parse_csv(in);
}

DatasetKind parse_dataset_kind(const std::string& name) {
  if (name == "blobs" || name == "gaussian-blobs") return DatasetKind::GaussianBlobs;
  if (name == "moons" || name == "two-moons") return DatasetKind::TwoMoons;
  if (name == "csv") return DatasetKind::Csv;
  throw ConfigError("unknown dataset kind '" + name + "'");
}

}  // namespace lmht
