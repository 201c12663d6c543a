#include "gridtrack/lstm.hpp"

#include <cmath>

namespace gridtrack {

namespace {

double sigmoid(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void glorot_fill(Matrix& m, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
  for (auto& w : m.data()) w = rng.uniform(-limit, limit);
}

int layer_input_width(const NetworkShape& s, int layer) { return layer == 0 ? s.inputs : s.hidden; }

void check_trace(const LstmNetwork& net, const ForwardTrace& trace) {
  if (trace.layers.size() != net.params.layers.size()) throw ShapeError("trace layer count does not match network");
  for (std::size_t l = 0; l < trace.layers.size(); ++l) {
    const auto& lt = trace.layers[l];
    if (lt.h.rows() != trace.length() || lt.h.cols() != static_cast<std::size_t>(net.shape.hidden) ||
        lt.input.cols() != static_cast<std::size_t>(layer_input_width(net.shape, static_cast<int>(l)))) {
      throw ShapeError("trace shapes do not match network");
    }
  }
  if (trace.outputs.cols() != static_cast<std::size_t>(net.shape.outputs)) {
    throw ShapeError("trace output width does not match network");
  }
}

}  // namespace

bool operator==(const LstmParams& a, const LstmParams& b) {
  if (a.layers.size() != b.layers.size()) return false;
  for (std::size_t l = 0; l < a.layers.size(); ++l) {
    for (int g = 0; g < kGateCount; ++g) {
      const auto& ga = a.layers[l].gates[g];
      const auto& gb = b.layers[l].gates[g];
      if (!(ga.input_weights == gb.input_weights) || !(ga.recurrent_weights == gb.recurrent_weights) ||
          !(ga.bias == gb.bias)) {
        return false;
      }
    }
  }
  return a.head_weights == b.head_weights && a.head_bias == b.head_bias;
}

LstmParams zeros_like(const LstmParams& p) {
  LstmParams z = p;
  for_each_tensor(z, [](const std::string&, Matrix& m) { m.fill(0.0); });
  return z;
}

double global_norm(const LstmParams& p) {
  double ss = 0.0;
  for_each_tensor(p, [&](const std::string&, const Matrix& m) {
    for (double v : m.data()) ss += v * v;
  });
  return std::sqrt(ss);
}

LstmNetwork init_network(int n_x, int n_h, int n_y, const InitOptions& opts) {
  if (n_x <= 0 || n_h <= 0 || n_y <= 0) throw ConfigError("network dimensions must be positive");
  if (opts.layers <= 0) throw ConfigError("layer count must be positive");
  if (opts.layers != kDefaultLayers && !opts.allow_layer_override) {
    throw ConfigError("layer count is fixed at 3 unless explicitly overridden");
  }
  if (!(opts.dropout >= 0.0 && opts.dropout < 1.0)) throw ConfigError("dropout must be in [0, 1)");

  LstmNetwork net;
  net.shape = {n_x, n_h, n_y, opts.layers};
  net.dropout = opts.dropout;
  net.seed = opts.seed;
  Rng rng(derive_seed(opts.seed, "init"));
  const auto h = static_cast<std::size_t>(n_h);
  for (int l = 0; l < opts.layers; ++l) {
    LstmLayerParams layer;
    const auto in = static_cast<std::size_t>(layer_input_width(net.shape, l));
    for (int g = 0; g < kGateCount; ++g) {
      auto& gate = layer.gates[g];
      gate.input_weights = Matrix(h, in);
      gate.recurrent_weights = Matrix(h, h);
      gate.bias = Matrix(h, 1, g == static_cast<int>(Gate::forget) ? 1.0 : 0.0);
      glorot_fill(gate.input_weights, rng);
      glorot_fill(gate.recurrent_weights, rng);
    }
    net.params.layers.push_back(std::move(layer));
  }
  net.params.head_weights = Matrix(static_cast<std::size_t>(n_y), h);
  net.params.head_bias = Matrix(static_cast<std::size_t>(n_y), 1);
  glorot_fill(net.params.head_weights, rng);
  return net;
}

ForwardTrace forward(const LstmNetwork& net, const Matrix& inputs, bool training, Rng* rng) {
  const auto& shape = net.shape;
  if (inputs.cols() != static_cast<std::size_t>(shape.inputs)) {
    throw ShapeError("input width " + std::to_string(inputs.cols()) + " does not match network n_x " +
                     std::to_string(shape.inputs));
  }
  const bool dropout = training && net.dropout > 0.0;
  if (dropout && rng == nullptr) throw ConfigError("training forward pass needs an rng");

  const std::size_t T = inputs.rows();
  const auto H = static_cast<std::size_t>(shape.hidden);
  const double keep_scale = dropout ? 1.0 / (1.0 - net.dropout) : 1.0;

  ForwardTrace trace;
  trace.layers.resize(net.params.layers.size());
  trace.outputs = Matrix(T, static_cast<std::size_t>(shape.outputs));

  const Matrix* below = &inputs;
  for (std::size_t l = 0; l < net.params.layers.size(); ++l) {
    const auto& p = net.params.layers[l];
    auto& lt = trace.layers[l];
    const std::size_t in_w = below->cols();
    lt.input = Matrix(T, in_w);
    if (dropout) lt.mask = Matrix(T, in_w);
    for (auto* m : {&lt.i, &lt.f, &lt.o, &lt.g, &lt.c, &lt.h}) *m = Matrix(T, H);

    std::vector<double> h_prev(H, 0.0), c_prev(H, 0.0);
    std::array<std::vector<double>, kGateCount> pre;
    for (auto& v : pre) v.resize(H);
    for (std::size_t t = 0; t < T; ++t) {
      auto x = lt.input.row(t);
      const auto src = below->row(t);
      for (std::size_t k = 0; k < in_w; ++k) {
        double m = 1.0;
        if (dropout) {
          m = rng->uniform01() < net.dropout ? 0.0 : keep_scale;
          lt.mask(t, k) = m;
        }
        x[k] = src[k] * m;
      }
      for (int g = 0; g < kGateCount; ++g) {
        const auto& gp = p.gates[g];
        auto& a = pre[g];
        for (std::size_t j = 0; j < H; ++j) a[j] = gp.bias(j, 0);
        gemv_acc(gp.input_weights, x, a);
        gemv_acc(gp.recurrent_weights, h_prev, a);
      }
      auto gi = lt.i.row(t), gf = lt.f.row(t), go = lt.o.row(t), gg = lt.g.row(t);
      auto c = lt.c.row(t), h = lt.h.row(t);
      for (std::size_t j = 0; j < H; ++j) {
        gi[j] = sigmoid(pre[0][j]);
        gf[j] = sigmoid(pre[1][j]);
        go[j] = sigmoid(pre[2][j]);
        gg[j] = std::tanh(pre[3][j]);
        c[j] = gf[j] * c_prev[j] + gi[j] * gg[j];
        h[j] = go[j] * std::tanh(c[j]);
        c_prev[j] = c[j];
        h_prev[j] = h[j];
      }
    }
    below = &lt.h;
  }

  for (std::size_t t = 0; t < T; ++t) {
    auto y = trace.outputs.row(t);
    for (std::size_t k = 0; k < y.size(); ++k) y[k] = net.params.head_bias(k, 0);
    gemv_acc(net.params.head_weights, below->row(t), y);
    for (auto& v : y) v = std::tanh(v);
  }
  return trace;
}

LossResult mse_loss(const Matrix& pred, const Matrix& target) {
  require_same_shape(pred, target, "mse_loss");
  LossResult r;
  r.grad = Matrix(pred.rows(), pred.cols());
  if (pred.size() == 0) return r;
  const double n = static_cast<double>(pred.size());
  const auto p = pred.data();
  const auto q = target.data();
  auto g = r.grad.data();
  double ss = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double d = p[k] - q[k];
    ss += d * d;
    g[k] = 2.0 * d / n;
  }
  r.loss = ss / n;
  return r;
}

LstmParams backward(const LstmNetwork& net, const ForwardTrace& trace, const Matrix& output_grads) {
  check_trace(net, trace);
  require_same_shape(trace.outputs, output_grads, "backward");
  const std::size_t T = trace.length();
  const auto H = static_cast<std::size_t>(net.shape.hidden);
  const std::size_t L = net.params.layers.size();

  LstmParams grads = zeros_like(net.params);

  // Gradient w.r.t. the top layer's hidden states, from the head.
  Matrix dh_above(T, H);
  {
    std::vector<double> dz(output_grads.cols());
    const auto& top = trace.layers[L - 1].h;
    for (std::size_t t = 0; t < T; ++t) {
      const auto y = trace.outputs.row(t);
      const auto dy = output_grads.row(t);
      for (std::size_t k = 0; k < dz.size(); ++k) dz[k] = dy[k] * (1.0 - y[k] * y[k]);
      outer_acc(grads.head_weights, dz, top.row(t));
      for (std::size_t k = 0; k < dz.size(); ++k) grads.head_bias(k, 0) += dz[k];
      gemv_t_acc(net.params.head_weights, dz, dh_above.row(t));
    }
  }

  std::vector<double> dh(H), dc(H), dh_next(H), dc_next(H);
  std::array<std::vector<double>, kGateCount> da;
  for (auto& v : da) v.resize(H);
  const std::vector<double> zeros(H, 0.0);

  for (std::size_t li = L; li-- > 0;) {
    const auto& p = net.params.layers[li];
    auto& gp = grads.layers[li];
    const auto& lt = trace.layers[li];
    const std::size_t in_w = lt.input.cols();
    Matrix dx_below(T, in_w);
    std::fill(dh_next.begin(), dh_next.end(), 0.0);
    std::fill(dc_next.begin(), dc_next.end(), 0.0);

    for (std::size_t t = T; t-- > 0;) {
      const auto gi = lt.i.row(t), gf = lt.f.row(t), go = lt.o.row(t), gg = lt.g.row(t), c = lt.c.row(t);
      const std::span<const double> c_prev = t > 0 ? lt.c.row(t - 1) : std::span<const double>(zeros);
      const std::span<const double> h_prev = t > 0 ? lt.h.row(t - 1) : std::span<const double>(zeros);
      const auto above = dh_above.row(t);
      for (std::size_t j = 0; j < H; ++j) {
        dh[j] = above[j] + dh_next[j];
        const double tc = std::tanh(c[j]);
        const double d_o = dh[j] * tc;
        dc[j] = dh[j] * go[j] * (1.0 - tc * tc) + dc_next[j];
        const double d_i = dc[j] * gg[j];
        const double d_g = dc[j] * gi[j];
        const double d_f = dc[j] * c_prev[j];
        dc_next[j] = dc[j] * gf[j];
        da[0][j] = d_i * gi[j] * (1.0 - gi[j]);
        da[1][j] = d_f * gf[j] * (1.0 - gf[j]);
        da[2][j] = d_o * go[j] * (1.0 - go[j]);
        da[3][j] = d_g * (1.0 - gg[j] * gg[j]);
      }
      std::fill(dh_next.begin(), dh_next.end(), 0.0);
      auto dx = dx_below.row(t);
      for (int g = 0; g < kGateCount; ++g) {
        auto& grad_gate = gp.gates[g];
        outer_acc(grad_gate.input_weights, da[g], lt.input.row(t));
        outer_acc(grad_gate.recurrent_weights, da[g], h_prev);
        for (std::size_t j = 0; j < H; ++j) grad_gate.bias(j, 0) += da[g][j];
        gemv_t_acc(p.gates[g].input_weights, da[g], dx);
        gemv_t_acc(p.gates[g].recurrent_weights, da[g], dh_next);
      }
      if (!lt.mask.empty()) {
        const auto m = lt.mask.row(t);
        for (std::size_t k = 0; k < in_w; ++k) dx[k] *= m[k];
      }
    }
    dh_above = std::move(dx_below);
  }
  return grads;
}

double sgd_step(LstmNetwork& net, const LstmParams& grads, double lr, std::optional<double> clip_norm) {
  if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");
  if (clip_norm && !(*clip_norm > 0.0)) throw ConfigError("clip norm must be positive");
  const double norm = global_norm(grads);
  double scale = lr;
  if (clip_norm && norm > *clip_norm) scale *= *clip_norm / norm;

  std::vector<const Matrix*> g;
  for_each_tensor(grads, [&](const std::string&, const Matrix& m) { g.push_back(&m); });
  std::size_t k = 0;
  for_each_tensor(net.params, [&](const std::string& name, Matrix& m) {
    const Matrix& gm = *g[k++];
    require_same_shape(m, gm, name.c_str());
    auto w = m.data();
    const auto d = gm.data();
    for (std::size_t i = 0; i < w.size(); ++i) w[i] -= scale * d[i];
  });
  if (k != g.size()) throw ShapeError("gradient set does not match network");
  return norm;
}

LstmState::LstmState(const LstmNetwork& net) {
  const auto H = static_cast<std::size_t>(net.shape.hidden);
  h_.assign(net.params.layers.size(), std::vector<double>(H, 0.0));
  c_.assign(net.params.layers.size(), std::vector<double>(H, 0.0));
}

std::vector<double> LstmState::step(const LstmNetwork& net, std::span<const double> x) {
  if (x.size() != static_cast<std::size_t>(net.shape.inputs)) throw ShapeError("step: input width mismatch");
  const auto H = static_cast<std::size_t>(net.shape.hidden);
  std::vector<double> input(x.begin(), x.end());
  std::array<std::vector<double>, kGateCount> pre;
  for (auto& v : pre) v.resize(H);
  for (std::size_t l = 0; l < net.params.layers.size(); ++l) {
    const auto& p = net.params.layers[l];
    for (int g = 0; g < kGateCount; ++g) {
      for (std::size_t j = 0; j < H; ++j) pre[g][j] = p.gates[g].bias(j, 0);
      gemv_acc(p.gates[g].input_weights, input, pre[g]);
      gemv_acc(p.gates[g].recurrent_weights, h_[l], pre[g]);
    }
    for (std::size_t j = 0; j < H; ++j) {
      const double i = sigmoid(pre[0][j]);
      const double f = sigmoid(pre[1][j]);
      const double o = sigmoid(pre[2][j]);
      const double g = std::tanh(pre[3][j]);
      c_[l][j] = f * c_[l][j] + i * g;
      h_[l][j] = o * std::tanh(c_[l][j]);
    }
    input = h_[l];
  }
  std::vector<double> y(static_cast<std::size_t>(net.shape.outputs));
  for (std::size_t k = 0; k < y.size(); ++k) y[k] = net.params.head_bias(k, 0);
  gemv_acc(net.params.head_weights, input, y);
  for (auto& v : y) v = std::tanh(v);
  return y;
}

}  // namespace gridtrack
