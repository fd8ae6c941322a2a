#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "costyle/imputer.hpp"

namespace costyle {

enum class PairwiseKind { CGan, WGan };

std::string to_string(PairwiseKind k);

struct PairwiseHyper {
  int epochs = 30000;
  double lr_g = 1e-3;
  double lr_d = 1e-5;
  double weight_decay = 0.01;
  int batch_size = 64;
  std::uint64_t seed = 0;
  int generator_layers = 13;
  int discriminator_layers = 5;
  int hidden_width = 256;
  // weight-clipped Wasserstein constants from the original recipe
  int wgan_critic_steps = 5;
  double wgan_clip = 0.01;
};

/// One direct source->target generator. The cGAN variant conditions both
/// networks on a one-hot class label; the WGAN variant uses a weight-clipped
/// linear-output critic.
struct PairwiseModel {
  int source = 0;
  int target = 0;
  PairwiseKind kind = PairwiseKind::CGan;
  nn::MlpParams generator;
  nn::MlpParams discriminator;  // critic for the WGAN variant
  PairwiseHyper hyper;
};

PairwiseModel train_pairwise_baseline(const data::Cohort& cohort, int source,
                                      int target, PairwiseKind kind,
                                      const PairwiseHyper& hyper);

/// All S^2 ordered pairs, seeded deterministically per pair.
struct PairwiseModelSet {
  PairwiseKind kind = PairwiseKind::CGan;
  int modality_count = 0;
  std::vector<PairwiseModel> models;  // index source * S + target

  const PairwiseModel& at(int source, int target) const;
};
PairwiseModelSet train_pairwise_set(const data::Cohort& cohort, PairwiseKind kind,
                                    const PairwiseHyper& hyper);

std::vector<double> pairwise_generate(const PairwiseModel& model,
                                      std::span<const double> x_source, int label,
                                      int label_count);

/// Plan-driven completion with the pairwise generators.
ImputationResult pairwise_impute(const data::Cohort& cohort,
                                 const PairwiseModelSet& set,
                                 const ImputationPlan& plan);

}  // namespace costyle
