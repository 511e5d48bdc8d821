#include "lmht/reference_grad.hpp"

#include <cmath>
#include <string>

namespace lmht {

namespace {

// Each node has at most two parents with their local partials.
struct Node {
  double value;
  int a = -1;
  int b = -1;
  double da = 0.0;
  double db = 0.0;
};

class Tape {
 public:
  int constant(double v) { return push({v}); }
  int leaf(double v) { return push({v}); }
  int add(int x, int y) { return push({val(x) + val(y), x, y, 1.0, 1.0}); }
  int sub(int x, int y) { return push({val(x) - val(y), x, y, 1.0, -1.0}); }
  int mul(int x, int y) { return push({val(x) * val(y), x, y, val(y), val(x)}); }
  int scale(int x, double c) { return push({c * val(x), x, -1, c, 0.0}); }
  int sigmoid(int x) {
    const double s = lmht::sigmoid(val(x));
    return push({s, x, -1, s * (1.0 - s), 0.0});
  }
  int exp(int x) {
    const double e = std::exp(val(x));
    return push({e, x, -1, e, 0.0});
  }
  int log(int x) { return push({std::log(val(x)), x, -1, 1.0 / val(x), 0.0}); }
  // Value `v`, derivative `slope` with respect to x.
  int custom(int x, double v, double slope) { return push({v, x, -1, slope, 0.0}); }
  int identity(int x) { return push({val(x), x, -1, 1.0, 0.0}); }
  int stop_gradient(int x) { return push({val(x)}); }

  double val(int i) const { return nodes_[static_cast<std::size_t>(i)].value; }

  std::vector<double> backprop(int root) const {
    std::vector<double> adj(nodes_.size(), 0.0);
    adj[static_cast<std::size_t>(root)] = 1.0;
    for (std::size_t i = nodes_.size(); i-- > 0;) {
      const Node& n = nodes_[i];
      if (adj[i] == 0.0) continue;
      if (n.a >= 0) adj[static_cast<std::size_t>(n.a)] += adj[i] * n.da;
      if (n.b >= 0) adj[static_cast<std::size_t>(n.b)] += adj[i] * n.db;
    }
    return adj;
  }

 private:
  int push(Node n) {
    nodes_.push_back(n);
    return static_cast<int>(nodes_.size()) - 1;
  }
  std::vector<Node> nodes_;
};

int count_spikes(double m, double threshold, int levels) {
  int s = 0;
  while (s < levels && m >= (s + 1) * threshold) ++s;
  return s;
}

double window(double m, double threshold, int levels, BackwardMode mode) {
  if (mode == BackwardMode::Vanilla) return std::abs(m - threshold) <= 0.5 * threshold ? 1.0 : 0.0;
  return (0.5 * threshold <= m && m <= (levels + 0.5) * threshold) ? 1.0 : 0.0;
}

using Grid = std::vector<std::vector<int>>;

Grid grid(std::size_t rows, std::size_t cols) { return Grid(rows, std::vector<int>(cols, -1)); }

struct LayerNodes {
  Grid weight;
  std::vector<int> bias;
  Grid raw_omega;
  int raw_leak = -1;
  Grid inputs;  // T x in, the presynaptic value nodes
};

}  // namespace

ReferenceGradients reference_gradients(const NetworkSpec& net, const Vector& x, int label,
                                       BackwardMode mode) {
  net.validate();
  if (x.size() != net.input_width()) throw DimensionError("reference_gradients: input width");
  if (label < 0 || label >= net.output_width())
    throw RangeError("reference_gradients: label " + std::to_string(label) + " out of range");
  const auto steps = static_cast<std::size_t>(net.horizon);

  Tape tape;
  std::vector<LayerNodes> nodes(net.layers.size());

  // Presynaptic values for layer 0 are the raw features, one leaf per step.
  Grid pre = grid(steps, static_cast<std::size_t>(x.size()));
  for (std::size_t t = 0; t < steps; ++t)
    for (std::size_t i = 0; i < pre[t].size(); ++i) pre[t][i] = tape.leaf(x[static_cast<Eigen::Index>(i)]);
  double gain = net.input_scale;
  Grid out_spikes;

  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const LayerSpec& layer = net.layers[l];
    LayerNodes& ln = nodes[l];
    const auto out_w = static_cast<std::size_t>(layer.out_width());
    const auto in_w = static_cast<std::size_t>(layer.in_width());
    ln.inputs = pre;

    ln.weight = grid(out_w, in_w);
    for (std::size_t o = 0; o < out_w; ++o)
      for (std::size_t i = 0; i < in_w; ++i)
        ln.weight[o][i] = tape.leaf(layer.weight(static_cast<Eigen::Index>(o), static_cast<Eigen::Index>(i)));
    for (std::size_t o = 0; o < out_w; ++o) ln.bias.push_back(tape.leaf(layer.bias[static_cast<Eigen::Index>(o)]));
    ln.raw_omega = grid(steps, steps);
    for (std::size_t t = 0; t < steps; ++t)
      for (std::size_t j = 0; j < steps; ++j)
        ln.raw_omega[t][j] =
            tape.leaf(layer.tgim.raw_omega(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)));
    ln.raw_leak = tape.leaf(layer.tgim.raw_leak);

    const bool bypass = layer.tgim.bypass;
    Grid omega = grid(steps, steps);
    for (std::size_t t = 0; t < steps; ++t)
      for (std::size_t j = 0; j < steps; ++j)
        omega[t][j] = bypass ? ln.raw_omega[t][j] : tape.sigmoid(ln.raw_omega[t][j]);
    const int leak = bypass ? ln.raw_leak : tape.scale(tape.sigmoid(ln.raw_leak), 2.0);

    // Scaled inputs, then raw(t) = bias * scale + sum_i W(o, i) in(t, i).
    Grid scaled = grid(steps, in_w);
    for (std::size_t t = 0; t < steps; ++t)
      for (std::size_t i = 0; i < in_w; ++i) scaled[t][i] = tape.scale(pre[t][i], gain);
    Grid raw = grid(steps, out_w);
    for (std::size_t t = 0; t < steps; ++t)
      for (std::size_t o = 0; o < out_w; ++o) {
        int acc = tape.scale(ln.bias[o], layer.bias_scale);
        for (std::size_t i = 0; i < in_w; ++i) acc = tape.add(acc, tape.mul(ln.weight[o][i], scaled[t][i]));
        raw[t][o] = acc;
      }
    Grid current = grid(steps, out_w);
    for (std::size_t t = 0; t < steps; ++t)
      for (std::size_t o = 0; o < out_w; ++o) {
        int acc = tape.constant(0.0);
        for (std::size_t j = 0; j < steps; ++j) acc = tape.add(acc, tape.mul(omega[t][j], raw[j][o]));
        current[t][o] = acc;
      }

    const double theta = layer.threshold;
    Grid spikes = grid(steps, out_w);
    for (std::size_t o = 0; o < out_w; ++o) {
      int v = tape.constant(layer.v0);
      for (std::size_t t = 0; t < steps; ++t) {
        const bool leaky = static_cast<int>(t) % layer.leak_period == 0;
        const int prev = mode == BackwardMode::Detached ? tape.stop_gradient(v) : v;
        const int decayed = leaky ? tape.mul(leak, prev) : prev;
        const int m = tape.add(decayed, current[t][o]);
        const double mv = tape.val(m);
        const int s = tape.custom(m, count_spikes(mv, theta, layer.levels),
                                  window(mv, theta, layer.levels, mode));
        v = tape.sub(m, tape.scale(s, theta));
        spikes[t][o] = s;
      }
    }
    // Downstream copies so that the adjoint of `pre` excludes the reset path.
    pre = grid(steps, out_w);
    for (std::size_t t = 0; t < steps; ++t)
      for (std::size_t o = 0; o < out_w; ++o) pre[t][o] = tape.identity(spikes[t][o]);
    out_spikes = pre;
    gain = theta;
  }

  const LayerSpec& last = net.layers.back();
  const double norm = last.threshold / (static_cast<double>(last.levels) * net.horizon);
  const auto classes = static_cast<std::size_t>(net.output_width());
  std::vector<int> logits(classes);
  for (std::size_t c = 0; c < classes; ++c) {
    int acc = tape.constant(0.0);
    for (std::size_t t = 0; t < steps; ++t) acc = tape.add(acc, out_spikes[t][c]);
    logits[c] = tape.scale(acc, norm);
  }
  // loss = log sum exp(z - z_max) - (z_label - z_max); the shift is a constant.
  double zmax = tape.val(logits[0]);
  for (int z : logits) zmax = std::max(zmax, tape.val(z));
  const int shift = tape.constant(zmax);
  int sum = tape.constant(0.0);
  for (int z : logits) sum = tape.add(sum, tape.exp(tape.sub(z, shift)));
  const int loss = tape.sub(tape.log(sum), tape.sub(logits[static_cast<std::size_t>(label)], shift));

  const std::vector<double> adj = tape.backprop(loss);
  auto adjoint = [&adj](int i) { return adj[static_cast<std::size_t>(i)]; };

  ReferenceGradients result;
  result.loss = tape.val(loss);
  result.logits.resize(static_cast<Eigen::Index>(classes));
  for (std::size_t c = 0; c < classes; ++c) result.logits[static_cast<Eigen::Index>(c)] = tape.val(logits[c]);
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const LayerSpec& layer = net.layers[l];
    const LayerNodes& ln = nodes[l];
    GradBundle g = GradBundle::zeros_like(layer, net.horizon);
    for (Eigen::Index o = 0; o < layer.out_width(); ++o) {
      g.bias[o] = adjoint(ln.bias[static_cast<std::size_t>(o)]);
      for (Eigen::Index i = 0; i < layer.in_width(); ++i)
        g.weight(o, i) = adjoint(ln.weight[static_cast<std::size_t>(o)][static_cast<std::size_t>(i)]);
    }
    for (Eigen::Index t = 0; t < net.horizon; ++t) {
      for (Eigen::Index j = 0; j < net.horizon; ++j)
        g.raw_omega(t, j) = adjoint(ln.raw_omega[static_cast<std::size_t>(t)][static_cast<std::size_t>(j)]);
      for (Eigen::Index i = 0; i < layer.in_width(); ++i)
        g.input_spikes(t, i) = adjoint(ln.inputs[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)]);
    }
    g.raw_leak = adjoint(ln.raw_leak);
    result.layers.push_back(std::move(g));
  }
  return result;
}

double relative_gradient_error(const std::vector<GradBundle>& a, const std::vector<GradBundle>& b) {
  if (a.size() != b.size()) throw DimensionError("relative_gradient_error: layer count differs");
  double diff = 0.0;
  double ref = 0.0;
  auto acc = [&](const auto& x, const auto& y) {
    if (x.rows() != y.rows() || x.cols() != y.cols())
      throw DimensionError("relative_gradient_error: shape mismatch");
    diff += (x - y).squaredNorm();
    ref += y.squaredNorm();
  };
  for (std::size_t l = 0; l < a.size(); ++l) {
    acc(a[l].weight, b[l].weight);
    acc(a[l].bias, b[l].bias);
    acc(a[l].raw_omega, b[l].raw_omega);
    acc(a[l].input_spikes, b[l].input_spikes);
    diff += (a[l].raw_leak - b[l].raw_leak) * (a[l].raw_leak - b[l].raw_leak);
    ref += b[l].raw_leak * b[l].raw_leak;
  }
  if (ref == 0.0) return diff == 0.0 ? 0.0 : INFINITY;
  return std::sqrt(diff / ref);
}

}  // namespace lmht
