#include <doctest.h>

#include <cmath>
#include <vector>

#include "costyle/nn/mlp.hpp"

using namespace costyle;
using namespace costyle::nn;

namespace {

// Independent dense-algebra oracle: plain matrix chain with the same
// activation definitions, written without touching mlp_forward internals.
std::vector<double> chain_forward(const MlpParams& p, std::vector<double> x) {
  for (int l = 0; l < p.num_layers(); ++l) {
    const int in = p.layer_dims[l];
    const int out = p.layer_dims[l + 1];
    std::vector<double> y(out);
    for (int o = 0; o < out; ++o) {
      double s = p.biases[l][o];
      for (int i = 0; i < in; ++i) s += p.weights[l][o * in + i] * x[i];
      y[o] = s;
    }
    if (l + 1 < p.num_layers()) {
      for (double& v : y) v = v > 0 ? v : p.leaky_slope * v;
    }
    x = std::move(y);
  }
  return x;
}

}  // namespace

TEST_CASE("forward of all-zero net is the zero map") {
  MlpParams p = zero_mlp({3, 4, 2}, HiddenAct::LeakyRelu, OutputAct::Linear);
  const auto y = mlp_forward(p, std::vector<double>{1.0, -2.0, 3.0});
  REQUIRE(y.size() == 2);
  CHECK(y[0] == 0.0);
  CHECK(y[1] == 0.0);
}

TEST_CASE("single identity layer passes input through") {
  MlpParams p = zero_mlp({2, 2}, HiddenAct::LeakyRelu, OutputAct::Linear);
  p.weights[0] = {1.0, 0.0, 0.0, 1.0};
  const auto y = mlp_forward(p, std::vector<double>{1.5, -2.0});
  CHECK(y[0] == 1.5);
  CHECK(y[1] == -2.0);
}

TEST_CASE("forward matches an independent matrix chain") {
  Rng rng(11);
  MlpParams p = make_mlp({5, 7, 3}, HiddenAct::LeakyRelu, OutputAct::Linear, rng);
  std::vector<double> x(5);
  for (double& v : x) v = rng.normal();
  const auto got = mlp_forward(p, x);
  const auto want = chain_forward(p, x);
  for (int i = 0; i < 3; ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
}

TEST_CASE("forward rejects bad input") {
  Rng rng(1);
  MlpParams p = make_mlp({4, 3}, HiddenAct::Relu, OutputAct::Linear, rng);
  CHECK_THROWS_AS(mlp_forward(p, std::vector<double>{1.0, 2.0}), ShapeError);
  std::vector<double> bad{1.0, std::nan(""), 0.0, 0.0};
  CHECK_THROWS_AS(mlp_forward(p, bad), NumericError);
}

TEST_CASE("sigmoid output stays inside the open unit interval") {
  MlpParams p = zero_mlp({1, 1}, HiddenAct::Relu, OutputAct::Sigmoid);
  p.weights[0] = {1.0};
  for (double x : {-900.0, -5.0, 0.0, 5.0, 900.0}) {
    const double y = mlp_forward(p, std::vector<double>{x})[0];
    CHECK(y > 0.0);
    CHECK(y < 1.0);
  }
}

TEST_CASE("zero output gradient backpropagates to zero everywhere") {
  Rng rng(2);
  MlpParams p = make_mlp({3, 5, 2}, HiddenAct::Tanh, OutputAct::Linear, rng);
  GradTape tape;
  mlp_forward(p, std::vector<double>{0.1, 0.2, 0.3}, &tape);
  MlpGrads g = MlpGrads::zeros_like(p);
  const auto in_grad = mlp_backward(p, tape, std::vector<double>{0.0, 0.0}, g);
  CHECK(g.max_abs() == 0.0);
  for (double v : in_grad) CHECK(v == 0.0);
}

TEST_CASE("identity layer chain rule: input grad and outer-product weight grad") {
  MlpParams p = zero_mlp({2, 2}, HiddenAct::LeakyRelu, OutputAct::Linear);
  p.weights[0] = {1.0, 0.0, 0.0, 1.0};
  const std::vector<double> x{0.5, -1.5};
  GradTape tape;
  mlp_forward(p, x, &tape);
  MlpGrads g = MlpGrads::zeros_like(p);
  const std::vector<double> og{2.0, 3.0};
  const auto in_grad = mlp_backward(p, tape, og, g);
  CHECK(in_grad[0] == 2.0);
  CHECK(in_grad[1] == 3.0);
  // weight grad = og (x) x
  CHECK(g.weights[0][0] == doctest::Approx(2.0 * 0.5));
  CHECK(g.weights[0][1] == doctest::Approx(2.0 * -1.5));
  CHECK(g.weights[0][2] == doctest::Approx(3.0 * 0.5));
  CHECK(g.weights[0][3] == doctest::Approx(3.0 * -1.5));
  CHECK(g.biases[0][0] == 2.0);
  CHECK(g.biases[0][1] == 3.0);
}

TEST_CASE("backward matches central finite differences on a seeded 3-layer net") {
  Rng rng(33);
  MlpParams p = make_mlp({4, 6, 5, 3}, HiddenAct::LeakyRelu, OutputAct::Linear, rng);
  std::vector<double> x(4), readout(3);
  for (double& v : x) v = rng.normal();
  for (double& v : readout) v = rng.normal();

  auto objective = [&](const MlpParams& q) {
    const auto y = mlp_forward(q, x);
    double s = 0.0;
    for (int i = 0; i < 3; ++i) s += readout[i] * y[i];
    return s;
  };

  GradTape tape;
  mlp_forward(p, x, &tape);
  MlpGrads g = MlpGrads::zeros_like(p);
  mlp_backward(p, tape, readout, g);

  const double h = 1e-5;
  double worst = 0.0;
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    for (std::size_t i = 0; i < p.weights[l].size(); ++i) {
      const double saved = p.weights[l][i];
      p.weights[l][i] = saved + h;
      const double up = objective(p);
      p.weights[l][i] = saved - h;
      const double down = objective(p);
      p.weights[l][i] = saved;
      const double fd = (up - down) / (2 * h);
      const double denom = std::max({std::abs(fd), std::abs(g.weights[l][i]), 1e-8});
      worst = std::max(worst, std::abs(fd - g.weights[l][i]) / denom);
    }
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("backward rejects mismatched tape") {
  Rng rng(3);
  MlpParams p = make_mlp({3, 2}, HiddenAct::Relu, OutputAct::Linear, rng);
  MlpParams q = make_mlp({3, 4, 2}, HiddenAct::Relu, OutputAct::Linear, rng);
  GradTape tape;
  mlp_forward(p, std::vector<double>{1.0, 2.0, 3.0}, &tape);
  MlpGrads g = MlpGrads::zeros_like(q);
  CHECK_THROWS_AS(mlp_backward(q, tape, std::vector<double>{1.0, 1.0}, g),
                  ShapeError);
}

TEST_CASE("grad_reverse flips sign and scales") {
  const auto a = grad_reverse(std::vector<double>{1.0, -2.0}, 1.0);
  CHECK(a[0] == -1.0);
  CHECK(a[1] == 2.0);

  const auto b = grad_reverse(std::vector<double>{3.0, -4.0, 5.0}, 0.0);
  for (double v : b) CHECK(v == 0.0);

  const auto c = grad_reverse(std::vector<double>{0.5}, 2.0);
  CHECK(c[0] == -1.0);
}

TEST_CASE("forward is deterministic and pure") {
  Rng rng(5);
  MlpParams p = make_mlp({6, 8, 4}, HiddenAct::LeakyRelu, OutputAct::Sigmoid, rng);
  std::vector<double> x(6);
  for (double& v : x) v = rng.normal();
  const auto y1 = mlp_forward(p, x);
  const auto y2 = mlp_forward(p, x);
  CHECK(y1 == y2);

  Rng rng_a(17), rng_b(17);
  MlpParams a = make_mlp({4, 4}, HiddenAct::Relu, OutputAct::Linear, rng_a);
  MlpParams b = make_mlp({4, 4}, HiddenAct::Relu, OutputAct::Linear, rng_b);
  CHECK(a.weights == b.weights);
}

TEST_CASE("dimension helpers") {
  const auto g = geometric_dims(256, 3, 2);
  CHECK(g.size() == 3);
  CHECK(g.front() == 256);
  CHECK(g.back() == 3);
  CHECK(g[1] > 3);
  CHECK(g[1] < 256);

  const auto c = constant_dims(160, 256, 256, 5);
  CHECK(c == std::vector<int>{160, 256, 256, 256, 256, 256});

  const auto f = funnel_dims(160, 256, 5);
  CHECK(f == std::vector<int>{160, 256, 128, 64, 32, 1});
}
