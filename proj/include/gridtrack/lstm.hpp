#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gridtrack/matrix.hpp"
#include "gridtrack/rng.hpp"

namespace gridtrack {

enum class Gate : int { input = 0, forget = 1, output = 2, candidate = 3 };
inline constexpr int kGateCount = 4;

struct GateParams {
  Matrix input_weights;      // n_h x layer input width
  Matrix recurrent_weights;  // n_h x n_h
  Matrix bias;               // n_h x 1
};

struct LstmLayerParams {
  std::array<GateParams, kGateCount> gates;
  [[nodiscard]] GateParams& gate(Gate g) { return gates[static_cast<int>(g)]; }
  [[nodiscard]] const GateParams& gate(Gate g) const { return gates[static_cast<int>(g)]; }
};

/// Every trainable tensor. Also used for gradients.
struct LstmParams {
  std::vector<LstmLayerParams> layers;
  Matrix head_weights;  // n_y x n_h
  Matrix head_bias;     // n_y x 1

  friend bool operator==(const LstmParams& a, const LstmParams& b);
};

/// Calls fn(name, tensor) for every tensor in a fixed order.
template <typename Params, typename Fn>
void for_each_tensor(Params& p, Fn&& fn) {
  static constexpr std::array<const char*, kGateCount> kGateNames{"i", "f", "o", "g"};
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    for (int g = 0; g < kGateCount; ++g) {
      auto& gate = p.layers[l].gates[g];
      const std::string prefix = "layer" + std::to_string(l) + "." + kGateNames[g];
      fn(prefix + ".U", gate.input_weights);
      fn(prefix + ".W", gate.recurrent_weights);
      fn(prefix + ".b", gate.bias);
    }
  }
  fn(std::string("head.V"), p.head_weights);
  fn(std::string("head.b"), p.head_bias);
}

/// Zero tensors with the same shapes.
[[nodiscard]] LstmParams zeros_like(const LstmParams& p);
[[nodiscard]] double global_norm(const LstmParams& p);

struct NetworkShape {
  int inputs = 7;   // n_x
  int hidden = 32;  // n_h
  int outputs = 2;  // n_y
  int layers = 3;
  friend bool operator==(const NetworkShape&, const NetworkShape&) = default;
};

inline constexpr int kDefaultLayers = 3;

/// Stacked LSTM with a dense tanh head.
struct LstmNetwork {
  NetworkShape shape;
  double dropout = 0.1;
  std::uint64_t seed = 0;
  LstmParams params;
};

struct InitOptions {
  double dropout = 0.1;
  std::uint64_t seed = 0;
  int layers = kDefaultLayers;
  bool allow_layer_override = false;
};

/// Glorot-uniform weights, forget-gate bias 1, other biases 0.
[[nodiscard]] LstmNetwork init_network(int n_x, int n_h, int n_y, const InitOptions& opts = {});

/// Cached activations of one layer over a sequence (rows = time steps).
struct LayerTrace {
  Matrix input;  // layer input after dropout
  Matrix mask;   // dropout scale per input element (empty at inference)
  Matrix i, f, o, g;
  Matrix c, h;
};

struct ForwardTrace {
  std::vector<LayerTrace> layers;
  Matrix outputs;  // T x n_y
  [[nodiscard]] std::size_t length() const noexcept { return outputs.rows(); }
};

/// Runs the sequence from zero state. With `training`, inverted dropout is
/// applied to every LSTM layer input using masks drawn from `rng`.
[[nodiscard]] ForwardTrace forward(const LstmNetwork& net, const Matrix& inputs, bool training = false,
                                   Rng* rng = nullptr);

struct LossResult {
  double loss = 0.0;
  Matrix grad;
};

/// Mean squared error over all elements; grad = 2 (pred - target) / N.
[[nodiscard]] LossResult mse_loss(const Matrix& pred, const Matrix& target);

/// Exact full-sequence BPTT.
[[nodiscard]] LstmParams backward(const LstmNetwork& net, const ForwardTrace& trace, const Matrix& output_grads);

/// Global-norm clipping then theta -= lr * grad. Returns the pre-clip norm.
double sgd_step(LstmNetwork& net, const LstmParams& grads, double lr, std::optional<double> clip_norm);

/// Recurrent state for step-by-step inference.
class LstmState {
 public:
  explicit LstmState(const LstmNetwork& net);
  /// Advances one step and returns the n_y outputs.
  std::vector<double> step(const LstmNetwork& net, std::span<const double> x);

 private:
  std::vector<std::vector<double>> h_;
  std::vector<std::vector<double>> c_;
};

}  // namespace gridtrack
