#include <cmath>

#include "doctest.h"
#include "gridtrack/error.hpp"
#include "gridtrack/lstm.hpp"
#include "support/gradcheck.hpp"

using namespace gridtrack;

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

LstmNetwork random_net(std::uint64_t seed, int n_x, int n_h, int n_y, double dropout = 0.0) {
  InitOptions o;
  o.seed = seed;
  o.dropout = dropout;
  return init_network(n_x, n_h, n_y, o);
}

Matrix random_inputs(std::uint64_t seed, std::size_t t, std::size_t n_x) {
  Rng rng(seed);
  Matrix m(t, n_x);
  for (auto& v : m.data()) v = rng.normal();
  return m;
}

}  // namespace

TEST_SUITE("neural_core") {
  TEST_CASE("init shapes, forget bias and glorot range") {
    const auto net = random_net(1, 7, 5, 2);
    REQUIRE(net.params.layers.size() == 3);
    for (std::size_t l = 0; l < 3; ++l) {
      const auto& f = net.params.layers[l].gate(Gate::forget);
      CHECK(f.input_weights.rows() == 5);
      CHECK(f.input_weights.cols() == (l == 0 ? 7u : 5u));
      for (const double b : f.bias.data()) CHECK(b == 1.0);
      for (const double b : net.params.layers[l].gate(Gate::input).bias.data()) CHECK(b == 0.0);
      const double limit = std::sqrt(6.0 / static_cast<double>(f.input_weights.rows() + f.input_weights.cols()));
      for (const double w : f.input_weights.data()) CHECK(std::abs(w) <= limit);
    }
    CHECK(net.params.head_weights.rows() == 2);
    CHECK(net.params.head_weights.cols() == 5);
  }

  TEST_CASE("layer count is fixed unless overridden") {
    InitOptions o;
    o.layers = 2;
    CHECK_THROWS_AS((void)init_network(3, 4, 2, o), ConfigError);
    o.allow_layer_override = true;
    CHECK(init_network(3, 4, 2, o).params.layers.size() == 2);
  }

  TEST_CASE("same seed gives the same network") {
    CHECK(random_net(9, 4, 3, 2).params == random_net(9, 4, 3, 2).params);
    CHECK_FALSE(random_net(9, 4, 3, 2).params == random_net(10, 4, 3, 2).params);
  }

  TEST_CASE("zero network outputs zero") {
    auto net = random_net(1, 3, 4, 2);
    for_each_tensor(net.params, [](const std::string&, Matrix& m) { m.fill(0.0); });
    const auto y = forward(net, random_inputs(2, 5, 3)).outputs;
    for (const double v : y.data()) CHECK(v == 0.0);
  }

  TEST_CASE("inference is deterministic") {
    const auto net = random_net(3, 3, 4, 2, 0.5);
    const auto x = random_inputs(4, 6, 3);
    CHECK(forward(net, x).outputs == forward(net, x).outputs);
  }

  TEST_CASE("hand-evaluated single step with one hidden unit") {
    auto net = random_net(1, 2, 1, 1);
    // Distinct weights per layer and gate.
    double w = 0.1;
    for (auto& layer : net.params.layers) {
      for (auto& gate : layer.gates) {
        for (auto& v : gate.input_weights.data()) v = (w += 0.07) - 0.5;
        gate.recurrent_weights(0, 0) = (w += 0.05) - 0.3;
        gate.bias(0, 0) = (w += 0.03) - 0.6;
      }
    }
    net.params.head_weights(0, 0) = 1.3;
    net.params.head_bias(0, 0) = -0.2;
    Matrix x(1, 2);
    x(0, 0) = 0.8;
    x(0, 1) = -1.1;

    std::vector<double> in{0.8, -1.1};
    double h = 0.0;
    for (const auto& layer : net.params.layers) {
      const auto pre = [&](Gate g) {
        const auto& p = layer.gate(g);
        double s = p.bias(0, 0);  // previous h and c are zero
        for (std::size_t k = 0; k < in.size(); ++k) s += p.input_weights(0, k) * in[k];
        return s;
      };
      const double i = sigmoid(pre(Gate::input));
      const double o = sigmoid(pre(Gate::output));
      const double g = std::tanh(pre(Gate::candidate));
      const double c = i * g;
      h = o * std::tanh(c);
      in = {h};
    }
    const double expected = std::tanh(1.3 * h - 0.2);
    CHECK(std::abs(forward(net, x).outputs(0, 0) - expected) <= 1e-12);
  }

  TEST_CASE("step-by-step state matches the sequence forward pass") {
    const auto net = random_net(5, 3, 6, 2);
    const auto x = random_inputs(6, 9, 3);
    const auto y = forward(net, x).outputs;
    LstmState state(net);
    for (std::size_t t = 0; t < x.rows(); ++t) {
      const auto out = state.step(net, x.row(t));
      CHECK(out[0] == y(t, 0));
      CHECK(out[1] == y(t, 1));
    }
  }

  TEST_CASE("mse closed forms") {
    Matrix a(2, 3, 0.5);
    const auto same = mse_loss(a, a);
    CHECK(same.loss == 0.0);
    for (const double g : same.grad.data()) CHECK(g == 0.0);
    Matrix b(2, 3, -0.5);
    const auto off = mse_loss(a, b);
    CHECK(off.loss == doctest::Approx(1.0));
    for (const double g : off.grad.data()) CHECK(g == doctest::Approx(2.0 / 6.0));
    CHECK_THROWS_AS((void)mse_loss(a, Matrix(3, 2)), ShapeError);
  }

  TEST_CASE("zero output gradient gives zero parameter gradients") {
    const auto net = random_net(7, 3, 4, 2);
    const auto trace = forward(net, random_inputs(8, 4, 3));
    const auto grads = backward(net, trace, Matrix(4, 2));
    CHECK(global_norm(grads) == 0.0);
  }

  TEST_CASE("head gradient on a single step") {
    const auto net = random_net(11, 3, 4, 2);
    const auto trace = forward(net, random_inputs(12, 1, 3));
    Matrix dy(1, 2);
    dy(0, 0) = 0.7;
    dy(0, 1) = -0.4;
    const auto grads = backward(net, trace, dy);
    const auto& h = trace.layers.back().h;
    for (std::size_t r = 0; r < 2; ++r) {
      const double y = trace.outputs(0, r);
      const double d = dy(0, r) * (1.0 - y * y);
      CHECK(grads.head_bias(r, 0) == doctest::Approx(d).epsilon(1e-14));
      for (std::size_t c = 0; c < 4; ++c) CHECK(grads.head_weights(r, c) == doctest::Approx(d * h(0, c)).epsilon(1e-14));
    }
  }

  TEST_CASE("gradients match central differences") {
    for (std::uint64_t seed = 100; seed < 112; ++seed) {
      const auto r = testing::gradient_check(testing::sweep_case(seed));
      INFO("seed " << seed << " worst " << r.worst_rel << " at " << r.worst_name);
      CHECK(r.failures == 0);
      CHECK(r.checked > 0);
    }
  }

  TEST_CASE("sgd step closed form") {
    auto net = random_net(1, 1, 1, 1);
    auto grads = zeros_like(net.params);
    net.params.head_bias(0, 0) = 1.0;
    grads.head_bias(0, 0) = 2.0;
    const auto before = net.params;
    const double norm = sgd_step(net, grads, 0.1, std::nullopt);
    CHECK(norm == doctest::Approx(2.0));
    CHECK(net.params.head_bias(0, 0) == doctest::Approx(0.8));
    net.params.head_bias(0, 0) = before.head_bias(0, 0);
    CHECK(net.params == before);
  }

  TEST_CASE("global-norm clipping scales the update") {
    auto a = random_net(2, 2, 3, 2);
    auto b = a;
    auto grads = zeros_like(a.params);
    grads.head_weights(0, 0) = 6.0;
    grads.head_weights(1, 2) = 8.0;  // global norm 10
    const auto start = a.params.head_weights;
    CHECK(sgd_step(a, grads, 0.01, std::nullopt) == doctest::Approx(10.0));
    CHECK(sgd_step(b, grads, 0.01, 1.0) == doctest::Approx(10.0));
    const double full = start(0, 0) - a.params.head_weights(0, 0);
    const double clipped = start(0, 0) - b.params.head_weights(0, 0);
    CHECK(full == doctest::Approx(10.0 * clipped));
    // Under the threshold nothing changes.
    auto c = random_net(2, 2, 3, 2);
    auto d = c;
    grads.head_weights.fill(0.0);
    grads.head_weights(0, 0) = 0.5;
    (void)sgd_step(c, grads, 0.01, std::nullopt);
    (void)sgd_step(d, grads, 0.01, 1.0);
    CHECK(c.params == d.params);
  }

  TEST_CASE("inverted dropout keeps the expected input") {
    const double rate = 0.3;
    const auto net = random_net(21, 5, 4, 2, rate);
    Rng rng(22);
    const auto x = random_inputs(23, 200, 5);
    double sum = 0.0, zeros = 0.0, count = 0.0;
    for (int rep = 0; rep < 20; ++rep) {
      const auto trace = forward(net, x, true, &rng);
      for (const auto& layer : trace.layers) {
        for (const double m : layer.mask.data()) {
          CHECK((m == 0.0 || m == doctest::Approx(1.0 / (1.0 - rate))));
          sum += m;
          zeros += m == 0.0;
          ++count;
        }
      }
    }
    CHECK(sum / count == doctest::Approx(1.0).epsilon(0.02));
    CHECK(zeros / count == doctest::Approx(rate).epsilon(0.05));
    const auto eval = forward(net, x);
    for (const auto& layer : eval.layers) CHECK(layer.mask.empty());
  }

  TEST_CASE("dropout needs a generator in training mode") {
    const auto net = random_net(1, 2, 2, 2, 0.2);
    CHECK_THROWS((void)forward(net, random_inputs(1, 2, 2), true, nullptr));
  }

  TEST_CASE("state stays finite over 10000 steps") {
    auto net = random_net(31, 4, 8, 2);
    for_each_tensor(net.params, [](const std::string&, Matrix& m) {
      for (auto& v : m.data()) v *= 3.0;
    });
    LstmState state(net);
    Rng rng(32);
    std::vector<double> x(4);
    for (int t = 0; t < 10000; ++t) {
      for (auto& v : x) v = 5.0 * rng.normal();
      const auto y = state.step(net, x);
      REQUIRE(std::isfinite(y[0]));
      REQUIRE(std::isfinite(y[1]));
      REQUIRE(std::abs(y[0]) < 1.0);
      REQUIRE(std::abs(y[1]) < 1.0);
    }
  }

  TEST_CASE("tensor names") {
    const auto net = random_net(1, 2, 2, 2);
    std::vector<std::string> names;
    for_each_tensor(net.params, [&](const std::string& n, const Matrix&) { names.push_back(n); });
    CHECK(names.size() == 3 * 4 * 3 + 2);
    CHECK(names.front() == "layer0.i.U");
    CHECK(names[5] == "layer0.f.b");
    CHECK(names.back() == "head.b");
  }
}
