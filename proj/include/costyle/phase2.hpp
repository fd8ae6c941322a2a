#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include <json.hpp>

#include "costyle/phase1.hpp"

namespace costyle {

struct Phase2Hyper {
  int epochs = 30000;  // inner steps; 9 generator updates per discriminator update
  double lr_g = 1e-3;
  double lr_d = 1e-5;
  double weight_decay = 0.01;
  double alpha = 1.0;
  double beta = 100.0;
  int update_ratio = 9;
  bool ratio_inverted = false;  // alternate reading: 9 D updates per G update
  int batch_size = 64;
  std::uint64_t seed = 0;
  int generator_layers = 13;
  int discriminator_layers = 5;
  int hidden_width = 0;  // 0 = embedding_dim
};

struct Phase2EpochLog {
  double loss_g = 0.0;
  double loss_d = 0.0;
  double loss_content = 0.0;
  bool d_updated = false;
};

/// Generator/discriminator pair for one target modality. The generator maps
/// a content embedding to that modality's feature space.
struct StylePair {
  int target_modality = 0;
  std::string target_name;
  nn::MlpParams generator;      // embedding -> P
  nn::MlpParams discriminator;  // P -> (0,1)
  Phase2Hyper hyper;
  std::vector<Phase2EpochLog> training_log;
};

/// Euclidean distance between the embeddings of a source vector and a
/// generated vector under a frozen extractor.
double content_loss(const ContentModel& model, std::span<const double> x_src,
                    std::span<const double> x_gen);

double total_generator_loss(double l_g, double l_content, double alpha, double beta);

/// Whether inner step `step_index` updates the discriminator under the
/// configured ratio (the other steps update the generator).
bool is_discriminator_step(int step_index, int update_ratio, bool ratio_inverted);

/// Averaged generator-step losses and gradients on a batch of source
/// embeddings; discriminator and extractor stay fixed. Gradient of the
/// total objective is alpha * adversarial + beta * content by construction.
struct GeneratorBatchLosses {
  double loss_gan = 0.0;
  double loss_content = 0.0;
  double loss_total = 0.0;
};
GeneratorBatchLosses generator_batch_gradient(
    const ContentModel& model, const nn::MlpParams& generator,
    const nn::MlpParams& discriminator,
    const std::vector<std::vector<double>>& source_embeddings, double alpha,
    double beta, nn::MlpGrads& generator_grads);

/// Averaged discriminator-step loss and gradients on paired real/fake
/// batches (equal counts).
double discriminator_batch_gradient(
    const nn::MlpParams& generator, const nn::MlpParams& discriminator,
    const std::vector<std::vector<double>>& source_embeddings,
    const std::vector<std::vector<double>>& real_batch,
    nn::MlpGrads& discriminator_grads);

/// Step-at-a-time trainer so callers can observe per-step behaviour.
class StyleTrainer {
public:
  StyleTrainer(const data::Cohort& cohort, const ContentModel& model,
               int target_modality, const Phase2Hyper& hyper);

  void step();
  int steps_done() const { return steps_; }
  const StylePair& pair() const { return pair_; }
  StylePair take() && { return std::move(pair_); }

private:
  const ContentModel& model_;
  StylePair pair_;
  Phase2Hyper hyper_;
  Rng rng_;
  std::vector<std::vector<double>> source_embeddings_;  // all present samples
  std::vector<std::vector<double>> reals_;              // target modality samples
  nn::AdamWState opt_g_;
  nn::AdamWState opt_d_;
  nn::MlpGrads g_grads_;
  nn::MlpGrads d_grads_;
  int steps_ = 0;
  double last_g_ = 0.0;
  double last_d_ = 0.0;
  double last_content_ = 0.0;
};

StylePair train_style(const data::Cohort& cohort, const ContentModel& model,
                      int target_modality, const Phase2Hyper& hyper);

nlohmann::json style_pair_to_json(const StylePair& pair);
StylePair style_pair_from_json(const nlohmann::json& doc);

}  // namespace costyle
