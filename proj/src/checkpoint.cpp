#include "lmht/checkpoint.hpp"

#include <bit>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace lmht {

namespace {

constexpr const char* kMagic = "lmht-checkpoint";

std::string quote(const std::string& s) { return nlohmann::json(s).dump(); }

std::string unquote(const std::string& s) {
  try {
    const auto j = nlohmann::json::parse(s);
    if (!j.is_string()) throw IntegrityError("checkpoint: expected a quoted string");
    return j.get<std::string>();
  } catch (const nlohmann::json::exception&) {
    throw IntegrityError("checkpoint: malformed quoted string");
  }
}

template <typename Derived>
std::string encode_tensor(const Eigen::DenseBase<Derived>& m) {
  std::string out;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (!out.empty()) out += ' ';
      out += encode_double(m(i, j));
    }
  return out;
}

class Writer {
 public:
  void line(const std::string& key, const std::string& value) { text_ += key + ' ' + value + '\n'; }
  void line(const std::string& key, long long value) { line(key, std::to_string(value)); }
  void real(const std::string& key, double value) { line(key, encode_double(value)); }
  std::string finish() {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(text_)));
    return text_ + "checksum " + buf + '\n';
  }

 private:
  std::string text_;
};

class Reader {
 public:
  explicit Reader(std::vector<std::string> lines) : lines_(std::move(lines)) {}

  // Returns the value part of the next line after checking its key.
  std::string take(const std::string& key) {
    if (pos_ >= lines_.size()) throw IntegrityError("checkpoint: truncated before '" + key + "'");
    const std::string& l = lines_[pos_];
    const auto space = l.find(' ');
    if (l.substr(0, space) != key)
      throw IntegrityError("checkpoint: line " + std::to_string(pos_ + 1) + ": expected '" + key + "'");
    ++pos_;
    return space == std::string::npos ? std::string() : l.substr(space + 1);
  }
  long long integer(const std::string& key) { return parse_int(take(key)); }
  double real(const std::string& key) { return decode_double(take(key)); }

  Matrix tensor(const std::string& key, Eigen::Index rows, Eigen::Index cols) {
    std::istringstream in(take(key));
    Matrix m(rows, cols);
    std::string word;
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) {
        if (!(in >> word)) throw IntegrityError("checkpoint: tensor '" + key + "' is short");
        m(i, j) = decode_double(word);
      }
    if (in >> word) throw IntegrityError("checkpoint: tensor '" + key + "' is long");
    return m;
  }

  void done() const {
    if (pos_ != lines_.size()) throw IntegrityError("checkpoint: trailing content");
  }

  static long long parse_int(const std::string& s) {
    long long v = 0;
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || end != s.data() + s.size() || s.empty())
      throw IntegrityError("checkpoint: bad integer '" + s + "'");
    return v;
  }

  // Splits "name v name v ..." into the values, checking names.
  static std::vector<long long> fields(const std::string& s, const std::vector<std::string>& names) {
    std::istringstream in(s);
    std::vector<long long> out;
    for (const auto& n : names) {
      std::string k, v;
      if (!(in >> k >> v) || k != n) throw IntegrityError("checkpoint: expected field '" + n + "'");
      out.push_back(parse_int(v));
    }
    std::string extra;
    if (in >> extra) throw IntegrityError("checkpoint: unexpected field '" + extra + "'");
    return out;
  }

 private:
  std::vector<std::string> lines_;
  std::size_t pos_ = 0;
};

void write_snn(Writer& w, const NetworkSpec& net) {
  w.line("kind", "snn");
  w.line("horizon", net.horizon);
  w.real("input_scale", net.input_scale);
  w.line("layers", static_cast<long long>(net.layers.size()));
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const LayerSpec& layer = net.layers[l];
    w.line("layer", std::to_string(l) + " out " + std::to_string(layer.out_width()) + " in " +
                        std::to_string(layer.in_width()) + " levels " + std::to_string(layer.levels) +
                        " leak_period " + std::to_string(layer.leak_period) + " bypass " +
                        (layer.tgim.bypass ? "1" : "0"));
    w.real("threshold", layer.threshold);
    w.real("v0", layer.v0);
    w.real("bias_scale", layer.bias_scale);
    w.real("raw_leak", layer.tgim.raw_leak);
    w.line("weight", encode_tensor(layer.weight));
    w.line("bias", encode_tensor(layer.bias.transpose()));
    w.line("raw_omega", encode_tensor(layer.tgim.raw_omega));
  }
}

void write_ann(Writer& w, const QcfsNetwork& net) {
  w.line("kind", "ann");
  w.line("levels", net.levels);
  w.line("layers", static_cast<long long>(net.layers.size()));
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const QcfsLayer& layer = net.layers[l];
    w.line("layer", std::to_string(l) + " out " + std::to_string(layer.weight.rows()) + " in " +
                        std::to_string(layer.weight.cols()));
    w.real("scale", layer.scale);
    w.line("weight", encode_tensor(layer.weight));
    w.line("bias", encode_tensor(layer.bias.transpose()));
  }
}

long long checked_count(long long n, const char* what) {
  if (n < 0 || n > 1'000'000) throw IntegrityError(std::string("checkpoint: implausible ") + what);
  return n;
}

NetworkSpec read_snn(Reader& r) {
  NetworkSpec net;
  net.horizon = static_cast<int>(checked_count(r.integer("horizon"), "horizon"));
  net.input_scale = r.real("input_scale");
  const long long count = checked_count(r.integer("layers"), "layer count");
  for (long long l = 0; l < count; ++l) {
    const auto f = Reader::fields("index " + r.take("layer"),
                                  {"index", "out", "in", "levels", "leak_period", "bypass"});
    if (f[0] != l) throw IntegrityError("checkpoint: layers out of order");
    const auto out = checked_count(f[1], "width");
    const auto in = checked_count(f[2], "width");
    LayerSpec layer;
    layer.levels = static_cast<int>(f[3]);
    layer.leak_period = static_cast<int>(f[4]);
    layer.tgim.bypass = f[5] != 0;
    layer.threshold = r.real("threshold");
    layer.v0 = r.real("v0");
    layer.bias_scale = r.real("bias_scale");
    layer.tgim.raw_leak = r.real("raw_leak");
    layer.weight = r.tensor("weight", out, in);
    layer.bias = r.tensor("bias", 1, out).row(0).transpose();
    layer.tgim.raw_omega = r.tensor("raw_omega", net.horizon, net.horizon);
    net.layers.push_back(std::move(layer));
  }
  try {
    net.validate();
  } catch (const Error& e) {
    throw IntegrityError(std::string("checkpoint: invalid network: ") + e.what());
  }
  return net;
}

QcfsNetwork read_ann(Reader& r) {
  QcfsNetwork net;
  net.levels = static_cast<int>(checked_count(r.integer("levels"), "levels"));
  const long long count = checked_count(r.integer("layers"), "layer count");
  for (long long l = 0; l < count; ++l) {
    const auto f = Reader::fields("index " + r.take("layer"), {"index", "out", "in"});
    if (f[0] != l) throw IntegrityError("checkpoint: layers out of order");
    QcfsLayer layer;
    layer.scale = r.real("scale");
    layer.weight = r.tensor("weight", checked_count(f[1], "width"), checked_count(f[2], "width"));
    layer.bias = r.tensor("bias", 1, f[1]).row(0).transpose();
    net.layers.push_back(std::move(layer));
  }
  return net;
}

}  // namespace

const std::string* Checkpoint::find_meta(const std::string& key) const {
  for (const auto& [k, v] : meta)
    if (k == key) return &v;
  return nullptr;
}

std::string encode_double(double x) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(std::bit_cast<std::uint64_t>(x)));
  return buf;
}

double decode_double(const std::string& hex) {
  if (hex.size() != 16) throw IntegrityError("checkpoint: bad double '" + hex + "'");
  std::uint64_t bits = 0;
  for (char c : hex) {
    int d;
    if (c >= '0' && c <= '9') d = c - '0';
    else if (c >= 'a' && c <= 'f') d = c - 'a' + 10;
    else throw IntegrityError("checkpoint: bad double '" + hex + "'");
    bits = bits << 4 | static_cast<std::uint64_t>(d);
  }
  return std::bit_cast<double>(bits);
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  Writer w;
  w.line(kMagic, kCheckpointVersion);
  w.line("seed", std::to_string(ckpt.seed));
  w.line("command", quote(ckpt.command));
  w.line("metas", static_cast<long long>(ckpt.meta.size()));
  for (const auto& [k, v] : ckpt.meta) {
    if (k.empty() || k.find_first_of(" \n") != std::string::npos)
      throw ConfigError("checkpoint: metadata key '" + k + "' must be a single word");
    w.line("meta", k + ' ' + quote(v));
  }
  if (const auto* snn = std::get_if<NetworkSpec>(&ckpt.model)) write_snn(w, *snn);
  else write_ann(w, std::get<QcfsNetwork>(ckpt.model));
  return w.finish();
}

Checkpoint parse_checkpoint(const std::string& text) {
  if (text.empty() || text.back() != '\n') throw IntegrityError("checkpoint: truncated file");
  const auto last = text.rfind('\n', text.size() - 2);
  const std::size_t tail = last == std::string::npos ? 0 : last + 1;
  const std::string footer = text.substr(tail, text.size() - tail - 1);
  if (footer.rfind("checksum ", 0) != 0) throw IntegrityError("checkpoint: missing checksum");
  const std::string body = text.substr(0, tail);
  char expect[17];
  std::snprintf(expect, sizeof expect, "%016llx", static_cast<unsigned long long>(fnv1a(body)));
  if (footer.substr(9) != expect) throw IntegrityError("checkpoint: checksum mismatch");

  std::vector<std::string> lines;
  std::istringstream in(body);
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  Reader r(std::move(lines));
  const long long version = r.integer(kMagic);
  if (version != kCheckpointVersion)
    throw VersionError("checkpoint: version " + std::to_string(version) + ", expected " +
                       std::to_string(kCheckpointVersion));
  Checkpoint ckpt;
  const std::string seed = r.take("seed");
  const auto [end, ec] = std::from_chars(seed.data(), seed.data() + seed.size(), ckpt.seed);
  if (ec != std::errc() || end != seed.data() + seed.size()) throw IntegrityError("checkpoint: bad seed");
  ckpt.command = unquote(r.take("command"));
  const long long metas = checked_count(r.integer("metas"), "metadata count");
  for (long long i = 0; i < metas; ++i) {
    const std::string m = r.take("meta");
    const auto space = m.find(' ');
    if (space == std::string::npos) throw IntegrityError("checkpoint: bad metadata line");
    ckpt.meta.emplace_back(m.substr(0, space), unquote(m.substr(space + 1)));
  }
  const std::string kind = r.take("kind");
  if (kind == "snn") ckpt.model = read_snn(r);
  else if (kind == "ann") ckpt.model = read_ann(r);
  else throw IntegrityError("checkpoint: unknown kind '" + kind + "'");
  r.done();
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const std::string text = serialize_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("checkpoint: cannot open '" + path.string() + "' for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error("checkpoint: write to '" + path.string() + "' failed");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("checkpoint: cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_checkpoint(buf.str());
}

}  // namespace lmht
