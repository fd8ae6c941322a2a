#pragma once

#include "costyle/nn/mlp.hpp"

namespace costyle::nn {

struct AdamWHyper {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

struct AdamWState {
  long step_count = 0;
  MlpGrads first_moment;
  MlpGrads second_moment;
  AdamWHyper hyper;
};

AdamWState make_adamw_state(const MlpParams& params, const AdamWHyper& hyper);

/// Decoupled weight decay update:
///   m <- b1 m + (1-b1) g,  v <- b2 v + (1-b2) g^2
///   p <- p - lr * ( m_hat / (sqrt(v_hat) + eps) + wd * p )
void adamw_step(MlpParams& params, const MlpGrads& grads, AdamWState& state);

/// Clamps every weight and bias to [-c, c] (weight-clipped critic).
void clip_weights(MlpParams& params, double c);

}  // namespace costyle::nn
