// checkpoint.hpp
// Canonical text checkpoints. A header of decimal integers and flags is
// followed by one line per tensor holding lowercase hex big-endian
// IEEE-754 doubles, and a trailing FNV-1a checksum over everything above
// it. Serialising the same model twice gives the same bytes.
#ifndef LMHT_CHECKPOINT_HPP
#define LMHT_CHECKPOINT_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "lmht/layer.hpp"
#include "lmht/qann.hpp"

namespace lmht {

inline constexpr int kCheckpointVersion = 1;

class IntegrityError : public Error {
 public:
  using Error::Error;
};

class VersionError : public IntegrityError {
 public:
  using IntegrityError::IntegrityError;
};

struct Checkpoint {
  std::variant<NetworkSpec, QcfsNetwork> model;
  std::uint64_t seed = 0;
  std::string command;
  // Free-form key/value metadata (dataset settings and the like), kept in
  // insertion order.
  std::vector<std::pair<std::string, std::string>> meta;

  bool is_snn() const { return std::holds_alternative<NetworkSpec>(model); }
  const std::string* find_meta(const std::string& key) const;
};

std::string encode_double(double x);
double decode_double(const std::string& hex);
std::uint64_t fnv1a(const std::string& bytes);

std::string serialize_checkpoint(const Checkpoint& ckpt);
// Throws IntegrityError (or VersionError) on any malformed input.
Checkpoint parse_checkpoint(const std::string& text);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace lmht

#endif  // LMHT_CHECKPOINT_HPP
