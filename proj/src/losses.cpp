#include "costyle/nn/losses.hpp"

#include <algorithm>
#include <cmath>

namespace costyle::nn {

CrossEntropyResult cross_entropy(std::span<const double> logits, int label) {
  if (logits.empty()) throw ShapeError("cross_entropy: empty logits");
  if (label < 0 || label >= static_cast<int>(logits.size())) {
    throw ShapeError("cross_entropy: label out of range");
  }
  const double m = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double v : logits) sum += std::exp(v - m);
  const double log_sum = std::log(sum) + m;

  CrossEntropyResult r;
  r.loss = log_sum - logits[label];
  r.logit_grad.resize(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    r.logit_grad[i] = std::exp(logits[i] - log_sum);
  }
  r.logit_grad[label] -= 1.0;
  return r;
}

namespace {
double clamp_prob(double p) {
  return std::clamp(p, kProbEps, 1.0 - kProbEps);
}
}  // namespace

DiscriminatorLoss gan_discriminator_loss(double d_real, double d_fake) {
  const double pr = clamp_prob(d_real);
  const double pf = clamp_prob(d_fake);
  DiscriminatorLoss r;
  r.loss = -std::log(pr) - std::log(1.0 - pf);
  r.grad_real = -1.0 / pr;
  r.grad_fake = 1.0 / (1.0 - pf);
  return r;
}

GeneratorLoss gan_generator_loss(double d_fake) {
  const double pf = clamp_prob(d_fake);
  GeneratorLoss r;
  r.loss = -std::log(pf);
  r.grad_fake = -1.0 / pf;
  return r;
}

double wgan_critic_loss(double real_score, double fake_score) {
  return fake_score - real_score;
}

}  // namespace costyle::nn
