#pragma once

#include <span>
#include <vector>

#include "costyle/common.hpp"

namespace costyle::nn {

/// Probabilities are clamped to [kProbEps, 1-kProbEps] before any log.
/// The clamp is a numeric guard only; gradients use the clamped value
/// but treat the clamp itself as identity.
inline constexpr double kProbEps = 1e-7;

struct CrossEntropyResult {
  double loss;
  std::vector<double> logit_grad;  // softmax(logits) - one_hot(label)
};

/// Stable log-sum-exp cross-entropy over raw logits.
CrossEntropyResult cross_entropy(std::span<const double> logits, int label);

struct DiscriminatorLoss {
  double loss;       // -log d_real - log(1 - d_fake)
  double grad_real;  // d loss / d d_real
  double grad_fake;  // d loss / d d_fake
};
DiscriminatorLoss gan_discriminator_loss(double d_real, double d_fake);

struct GeneratorLoss {
  double loss;       // -log d_fake
  double grad_fake;  // d loss / d d_fake
};
GeneratorLoss gan_generator_loss(double d_fake);

/// Critic objective for the weight-clipped Wasserstein baseline:
/// minimized loss = fake_score - real_score.
double wgan_critic_loss(double real_score, double fake_score);

}  // namespace costyle::nn
