#include "costyle/nn/adamw.hpp"

#include <algorithm>
#include <cmath>

namespace costyle::nn {

AdamWState make_adamw_state(const MlpParams& params, const AdamWHyper& hyper) {
  AdamWState s;
  s.first_moment = MlpGrads::zeros_like(params);
  s.second_moment = MlpGrads::zeros_like(params);
  s.hyper = hyper;
  return s;
}

namespace {

void update_array(std::vector<double>& p, const std::vector<double>& g,
                  std::vector<double>& m, std::vector<double>& v,
                  const AdamWHyper& h, double bc1, double bc2) {
  if (p.size() != g.size()) throw ShapeError("adamw_step: grad shape mismatch");
  for (std::size_t i = 0; i < p.size(); ++i) {
    m[i] = h.beta1 * m[i] + (1.0 - h.beta1) * g[i];
    v[i] = h.beta2 * v[i] + (1.0 - h.beta2) * g[i] * g[i];
    const double m_hat = m[i] / bc1;
    const double v_hat = v[i] / bc2;
    p[i] -= h.lr * (m_hat / (std::sqrt(v_hat) + h.eps) + h.weight_decay * p[i]);
  }
}

}  // namespace

void adamw_step(MlpParams& params, const MlpGrads& grads, AdamWState& state) {
  if (grads.weights.size() != params.weights.size()) {
    throw ShapeError("adamw_step: layer count mismatch");
  }
  state.step_count += 1;
  const AdamWHyper& h = state.hyper;
  const double bc1 = 1.0 - std::pow(h.beta1, state.step_count);
  const double bc2 = 1.0 - std::pow(h.beta2, state.step_count);
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    update_array(params.weights[l], grads.weights[l], state.first_moment.weights[l],
                 state.second_moment.weights[l], h, bc1, bc2);
    update_array(params.biases[l], grads.biases[l], state.first_moment.biases[l],
                 state.second_moment.biases[l], h, bc1, bc2);
  }
}

void clip_weights(MlpParams& params, double c) {
  for (auto& w : params.weights)
    for (double& v : w) v = std::clamp(v, -c, c);
  for (auto& b : params.biases)
    for (double& v : b) v = std::clamp(v, -c, c);
}

}  // namespace costyle::nn
