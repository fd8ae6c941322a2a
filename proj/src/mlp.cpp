#include "costyle/nn/mlp.hpp"

#include <algorithm>
#include <cmath>

namespace costyle::nn {

std::string to_string(HiddenAct a) {
  switch (a) {
    case HiddenAct::LeakyRelu: return "leaky_relu";
    case HiddenAct::Relu: return "relu";
    case HiddenAct::Tanh: return "tanh";
  }
  throw ConfigError("unknown hidden activation");
}

std::string to_string(OutputAct a) {
  switch (a) {
    case OutputAct::Linear: return "linear";
    case OutputAct::Sigmoid: return "sigmoid";
    case OutputAct::SoftmaxLogits: return "softmax_logits";
    case OutputAct::Tanh: return "tanh";
  }
  throw ConfigError("unknown output activation");
}

HiddenAct hidden_act_from_string(const std::string& s) {
  if (s == "leaky_relu") return HiddenAct::LeakyRelu;
  if (s == "relu") return HiddenAct::Relu;
  if (s == "tanh") return HiddenAct::Tanh;
  throw ConfigError("unknown hidden activation '" + s + "'");
}

OutputAct output_act_from_string(const std::string& s) {
  if (s == "linear") return OutputAct::Linear;
  if (s == "sigmoid") return OutputAct::Sigmoid;
  if (s == "softmax_logits") return OutputAct::SoftmaxLogits;
  if (s == "tanh") return OutputAct::Tanh;
  throw ConfigError("unknown output activation '" + s + "'");
}

std::size_t MlpParams::param_count() const {
  std::size_t n = 0;
  for (const auto& w : weights) n += w.size();
  for (const auto& b : biases) n += b.size();
  return n;
}

namespace {

void check_dims(const std::vector<int>& dims) {
  if (dims.size() < 2) throw ShapeError("mlp needs at least one layer");
  for (int d : dims) {
    if (d <= 0) throw ShapeError("layer dims must be positive");
  }
}

// Sigmoid clamped into the open interval so downstream logs stay finite.
constexpr double kSigmoidFloor = 1e-12;

double sigmoid(double x) {
  double y;
  if (x >= 0) {
    y = 1.0 / (1.0 + std::exp(-x));
  } else {
    const double e = std::exp(x);
    y = e / (1.0 + e);
  }
  return std::clamp(y, kSigmoidFloor, 1.0 - kSigmoidFloor);
}

}  // namespace

MlpParams make_mlp(std::vector<int> layer_dims, HiddenAct hidden,
                   OutputAct output, Rng& rng) {
  check_dims(layer_dims);
  MlpParams p;
  p.layer_dims = std::move(layer_dims);
  p.hidden_activation = hidden;
  p.output_activation = output;
  const int layers = p.num_layers();
  p.weights.resize(layers);
  p.biases.resize(layers);
  for (int l = 0; l < layers; ++l) {
    const int in = p.layer_dims[l];
    const int out = p.layer_dims[l + 1];
    const double bound = std::sqrt(6.0 / in);
    p.weights[l].resize(static_cast<std::size_t>(out) * in);
    for (double& w : p.weights[l]) w = rng.uniform(-bound, bound);
    p.biases[l].assign(out, 0.0);
  }
  return p;
}

MlpParams zero_mlp(std::vector<int> layer_dims, HiddenAct hidden,
                   OutputAct output) {
  check_dims(layer_dims);
  MlpParams p;
  p.layer_dims = std::move(layer_dims);
  p.hidden_activation = hidden;
  p.output_activation = output;
  const int layers = p.num_layers();
  p.weights.resize(layers);
  p.biases.resize(layers);
  for (int l = 0; l < layers; ++l) {
    p.weights[l].assign(
        static_cast<std::size_t>(p.layer_dims[l + 1]) * p.layer_dims[l], 0.0);
    p.biases[l].assign(p.layer_dims[l + 1], 0.0);
  }
  return p;
}

void validate_shapes(const MlpParams& p) {
  check_dims(p.layer_dims);
  const int layers = p.num_layers();
  if (static_cast<int>(p.weights.size()) != layers ||
      static_cast<int>(p.biases.size()) != layers) {
    throw ShapeError("mlp layer count mismatch");
  }
  for (int l = 0; l < layers; ++l) {
    const std::size_t expect =
        static_cast<std::size_t>(p.layer_dims[l + 1]) * p.layer_dims[l];
    if (p.weights[l].size() != expect) {
      throw ShapeError("weight shape mismatch at layer " + std::to_string(l));
    }
    if (p.biases[l].size() != static_cast<std::size_t>(p.layer_dims[l + 1])) {
      throw ShapeError("bias shape mismatch at layer " + std::to_string(l));
    }
  }
}

void require_finite(const MlpParams& p) {
  for (const auto& w : p.weights) {
    for (double v : w) {
      if (!std::isfinite(v)) throw NumericError("non-finite network weight");
    }
  }
  for (const auto& b : p.biases) {
    for (double v : b) {
      if (!std::isfinite(v)) throw NumericError("non-finite network bias");
    }
  }
}

std::vector<double> mlp_forward(const MlpParams& p, std::span<const double> input,
                                GradTape* tape) {
  const int layers = p.num_layers();
  if (static_cast<int>(input.size()) != p.input_dim()) {
    throw ShapeError("mlp_forward: input length " +
                     std::to_string(input.size()) + " != input dim " +
                     std::to_string(p.input_dim()));
  }
  for (double v : input) {
    if (!std::isfinite(v)) throw NumericError("mlp_forward: non-finite input");
  }

  std::vector<double> act(input.begin(), input.end());
  if (tape) {
    tape->pre.assign(layers, {});
    tape->act.assign(layers + 1, {});
    tape->act[0] = act;
  }

  for (int l = 0; l < layers; ++l) {
    const int in = p.layer_dims[l];
    const int out = p.layer_dims[l + 1];
    const double* w = p.weights[l].data();
    std::vector<double> pre(out);
    for (int o = 0; o < out; ++o) {
      const double* row = w + static_cast<std::size_t>(o) * in;
      double acc = p.biases[l][o];
      for (int i = 0; i < in; ++i) acc += row[i] * act[i];
      pre[o] = acc;
    }
    const bool last = (l == layers - 1);
    std::vector<double> next(out);
    if (!last) {
      switch (p.hidden_activation) {
        case HiddenAct::LeakyRelu:
          for (int o = 0; o < out; ++o)
            next[o] = pre[o] > 0 ? pre[o] : p.leaky_slope * pre[o];
          break;
        case HiddenAct::Relu:
          for (int o = 0; o < out; ++o) next[o] = pre[o] > 0 ? pre[o] : 0.0;
          break;
        case HiddenAct::Tanh:
          for (int o = 0; o < out; ++o) next[o] = std::tanh(pre[o]);
          break;
      }
    } else {
      switch (p.output_activation) {
        case OutputAct::Linear:
        case OutputAct::SoftmaxLogits:
          next = pre;
          break;
        case OutputAct::Sigmoid:
          for (int o = 0; o < out; ++o) next[o] = sigmoid(pre[o]);
          break;
        case OutputAct::Tanh:
          for (int o = 0; o < out; ++o) next[o] = std::tanh(pre[o]);
          break;
      }
    }
    if (tape) {
      tape->pre[l] = std::move(pre);
      tape->act[l + 1] = next;
    }
    act = std::move(next);
  }
  return act;
}

MlpGrads MlpGrads::zeros_like(const MlpParams& p) {
  MlpGrads g;
  g.weights.resize(p.weights.size());
  g.biases.resize(p.biases.size());
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    g.weights[l].assign(p.weights[l].size(), 0.0);
    g.biases[l].assign(p.biases[l].size(), 0.0);
  }
  return g;
}

void MlpGrads::zero() {
  for (auto& w : weights) std::fill(w.begin(), w.end(), 0.0);
  for (auto& b : biases) std::fill(b.begin(), b.end(), 0.0);
}

void MlpGrads::scale(double s) {
  for (auto& w : weights)
    for (double& v : w) v *= s;
  for (auto& b : biases)
    for (double& v : b) v *= s;
}

void MlpGrads::add_scaled(const MlpGrads& other, double s) {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    for (std::size_t i = 0; i < weights[l].size(); ++i)
      weights[l][i] += s * other.weights[l][i];
    for (std::size_t i = 0; i < biases[l].size(); ++i)
      biases[l][i] += s * other.biases[l][i];
  }
}

double MlpGrads::max_abs() const {
  double m = 0.0;
  for (const auto& w : weights)
    for (double v : w) m = std::max(m, std::abs(v));
  for (const auto& b : biases)
    for (double v : b) m = std::max(m, std::abs(v));
  return m;
}

std::vector<double> mlp_backward(const MlpParams& p, const GradTape& tape,
                                 std::span<const double> output_grad,
                                 MlpGrads& grads) {
  const int layers = p.num_layers();
  if (static_cast<int>(tape.pre.size()) != layers ||
      static_cast<int>(tape.act.size()) != layers + 1) {
    throw ShapeError("mlp_backward: tape does not match network");
  }
  if (static_cast<int>(output_grad.size()) != p.output_dim()) {
    throw ShapeError("mlp_backward: output grad length mismatch");
  }
  if (grads.weights.size() != p.weights.size()) {
    throw ShapeError("mlp_backward: grad accumulator mismatch");
  }

  std::vector<double> delta(output_grad.begin(), output_grad.end());
  for (int l = layers - 1; l >= 0; --l) {
    const int in = p.layer_dims[l];
    const int out = p.layer_dims[l + 1];
    if (static_cast<int>(tape.pre[l].size()) != out ||
        static_cast<int>(tape.act[l].size()) != in) {
      throw ShapeError("mlp_backward: tape shape mismatch at layer " +
                       std::to_string(l));
    }
    const bool last = (l == layers - 1);
    // delta currently holds dL/d(activation); convert to dL/d(pre).
    if (!last) {
      switch (p.hidden_activation) {
        case HiddenAct::LeakyRelu:
          for (int o = 0; o < out; ++o)
            delta[o] *= tape.pre[l][o] > 0 ? 1.0 : p.leaky_slope;
          break;
        case HiddenAct::Relu:
          for (int o = 0; o < out; ++o)
            delta[o] *= tape.pre[l][o] > 0 ? 1.0 : 0.0;
          break;
        case HiddenAct::Tanh:
          for (int o = 0; o < out; ++o) {
            const double y = tape.act[l + 1][o];
            delta[o] *= 1.0 - y * y;
          }
          break;
      }
    } else if (p.output_activation == OutputAct::Sigmoid) {
      for (int o = 0; o < out; ++o) {
        const double y = tape.act[l + 1][o];
        delta[o] *= y * (1.0 - y);
      }
    } else if (p.output_activation == OutputAct::Tanh) {
      for (int o = 0; o < out; ++o) {
        const double y = tape.act[l + 1][o];
        delta[o] *= 1.0 - y * y;
      }
    }

    const std::vector<double>& a = tape.act[l];
    double* gw = grads.weights[l].data();
    for (int o = 0; o < out; ++o) {
      const double d = delta[o];
      grads.biases[l][o] += d;
      double* row = gw + static_cast<std::size_t>(o) * in;
      for (int i = 0; i < in; ++i) row[i] += d * a[i];
    }

    std::vector<double> prev(in, 0.0);
    const double* w = p.weights[l].data();
    for (int o = 0; o < out; ++o) {
      const double d = delta[o];
      const double* row = w + static_cast<std::size_t>(o) * in;
      for (int i = 0; i < in; ++i) prev[i] += d * row[i];
    }
    delta = std::move(prev);
  }
  return delta;
}

std::vector<double> grad_reverse(std::span<const double> grad, double lambda) {
  std::vector<double> out(grad.size());
  for (std::size_t i = 0; i < grad.size(); ++i) out[i] = -lambda * grad[i];
  return out;
}

std::vector<int> geometric_dims(int in, int out, int n_layers) {
  if (n_layers < 1) throw ShapeError("need at least one layer");
  std::vector<int> dims(n_layers + 1);
  dims[0] = in;
  dims[n_layers] = out;
  const double ratio = std::log(static_cast<double>(out) / in) / n_layers;
  for (int l = 1; l < n_layers; ++l) {
    dims[l] = std::max(1, static_cast<int>(std::lround(in * std::exp(ratio * l))));
  }
  return dims;
}

std::vector<int> constant_dims(int in, int width, int out, int n_layers) {
  if (n_layers < 1) throw ShapeError("need at least one layer");
  std::vector<int> dims(n_layers + 1, width);
  dims[0] = in;
  dims[n_layers] = out;
  return dims;
}

std::vector<int> funnel_dims(int in, int top_width, int n_layers) {
  if (n_layers < 1) throw ShapeError("need at least one layer");
  std::vector<int> dims(n_layers + 1);
  dims[0] = in;
  int w = top_width;
  for (int l = 1; l < n_layers; ++l) {
    dims[l] = std::max(1, w);
    w /= 2;
  }
  dims[n_layers] = 1;
  return dims;
}

}  // namespace costyle::nn
