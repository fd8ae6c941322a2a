#pragma once

#include <span>
#include <string>
#include <vector>

#include "costyle/common.hpp"

namespace costyle::nn {

enum class HiddenAct { LeakyRelu, Relu, Tanh };
enum class OutputAct { Linear, Sigmoid, SoftmaxLogits, Tanh };

std::string to_string(HiddenAct a);
std::string to_string(OutputAct a);
HiddenAct hidden_act_from_string(const std::string& s);
OutputAct output_act_from_string(const std::string& s);

/// Dense network parameters. weights[l] is row-major with shape
/// (layer_dims[l+1] x layer_dims[l]); biases[l] has length layer_dims[l+1].
struct MlpParams {
  std::vector<int> layer_dims;
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;
  HiddenAct hidden_activation = HiddenAct::LeakyRelu;
  double leaky_slope = 0.01;
  OutputAct output_activation = OutputAct::Linear;

  int num_layers() const { return static_cast<int>(layer_dims.size()) - 1; }
  int input_dim() const { return layer_dims.front(); }
  int output_dim() const { return layer_dims.back(); }
  std::size_t param_count() const;
};

/// Kaiming-style fan-in uniform init: weights in +-sqrt(6/fan_in), zero biases.
MlpParams make_mlp(std::vector<int> layer_dims, HiddenAct hidden,
                   OutputAct output, Rng& rng);
MlpParams zero_mlp(std::vector<int> layer_dims, HiddenAct hidden,
                   OutputAct output);

void validate_shapes(const MlpParams& p);   // throws ShapeError
void require_finite(const MlpParams& p);    // throws NumericError

/// Per-layer caches from one forward pass, consumed by mlp_backward.
struct GradTape {
  std::vector<std::vector<double>> pre;  // pre-activation per layer
  std::vector<std::vector<double>> act;  // act[0] = input, act[l+1] = layer l output
};

std::vector<double> mlp_forward(const MlpParams& p, std::span<const double> input,
                                GradTape* tape = nullptr);

/// Gradient accumulator shaped like an MlpParams.
struct MlpGrads {
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;

  static MlpGrads zeros_like(const MlpParams& p);
  void zero();
  void scale(double s);
  void add_scaled(const MlpGrads& other, double s);
  double max_abs() const;
};

/// Backpropagates output_grad through the tape, accumulating parameter
/// gradients into `grads`. Returns the gradient w.r.t. the network input.
std::vector<double> mlp_backward(const MlpParams& p, const GradTape& tape,
                                 std::span<const double> output_grad,
                                 MlpGrads& grads);

/// Gradient reversal: identity forward, -lambda * upstream backward.
std::vector<double> grad_reverse(std::span<const double> grad, double lambda);

/// Geometric interpolation between two widths over n_layers linear layers.
std::vector<int> geometric_dims(int in, int out, int n_layers);
/// Constant-width hidden stack: [in, width, ..., width, out].
std::vector<int> constant_dims(int in, int width, int out, int n_layers);
/// Halving funnel for discriminators: [in, w, w/2, ..., 1].
std::vector<int> funnel_dims(int in, int top_width, int n_layers);

}  // namespace costyle::nn
