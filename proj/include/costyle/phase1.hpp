#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "costyle/data/cohort.hpp"
#include "costyle/nn/adamw.hpp"
#include "costyle/nn/mlp.hpp"

namespace costyle {

struct Phase1Hyper {
  int epochs = 8000;
  double lr = 1e-3;
  double weight_decay = 0.01;
  int batch_size = 64;
  double grl_lambda = 1.0;
  std::uint64_t seed = 0;
  int embedding_dim = 256;
  int extractor_layers = 5;
  int head_layers = 2;
  int hidden_width = 0;    // 0 = embedding_dim
  bool full_batch = false;
  // When false the reversed domain gradient never reaches the extractor;
  // the heads still train. Exists to pin down the lambda = 0 contract.
  bool couple_domain = true;
};

struct Phase1EpochLog {
  double loss_label = 0.0;
  double loss_domain = 0.0;
  double label_acc = 0.0;
  double domain_acc = 0.0;
};

/// Content extractor with its label classifier and adversarial modality
/// classifier. The extractor maps a single modality's feature vector to a
/// modality-agnostic embedding.
struct ContentModel {
  nn::MlpParams extractor;    // P -> embedding
  nn::MlpParams label_head;   // embedding -> #labels
  nn::MlpParams domain_head;  // embedding -> #modalities
  Phase1Hyper hyper;
  std::vector<std::string> modalities;
  std::vector<std::string> labels;
  int roi_count = 0;
  std::optional<data::StandardizationStats> standardization;
  std::vector<Phase1EpochLog> training_log;

  int embedding_dim() const { return extractor.output_dim(); }
};

/// One present (subject, modality) training sample.
struct SampleRef {
  int subject = 0;
  int modality = 0;
};

std::vector<SampleRef> present_samples(const data::Cohort& cohort);

ContentModel train_content(const data::Cohort& cohort, const Phase1Hyper& hyper);

std::vector<double> embed(const ContentModel& model, std::span<const double> x);

struct Phase1Metrics {
  double label_acc = 0.0;
  double domain_acc = 0.0;
  std::vector<std::vector<long>> label_confusion;  // rows true, cols predicted
};

Phase1Metrics phase1_metrics(const ContentModel& model, const data::Cohort& holdout);

/// Batch losses and gradients exactly as one training step computes them.
/// Gradient accumulators must be zeroed and shaped like the three networks;
/// results are averaged over the batch. Exposed for direction/consistency
/// checks on frozen batches.
struct Phase1BatchLosses {
  double loss_label = 0.0;
  double loss_domain = 0.0;
};
Phase1BatchLosses phase1_batch_gradients(
    const ContentModel& model, const data::Cohort& cohort,
    std::span<const SampleRef> batch, nn::MlpGrads& extractor_grads,
    nn::MlpGrads& label_grads, nn::MlpGrads& domain_grads);

Phase1BatchLosses phase1_batch_losses(const ContentModel& model,
                                      const data::Cohort& cohort,
                                      std::span<const SampleRef> batch);

nlohmann::json content_model_to_json(const ContentModel& model);
ContentModel content_model_from_json(const nlohmann::json& doc);

}  // namespace costyle
