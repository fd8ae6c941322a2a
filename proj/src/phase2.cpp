#include "costyle/phase2.hpp"

#include <cmath>

#include "costyle/nn/checkpoint.hpp"
#include "costyle/nn/losses.hpp"

namespace costyle {

using data::Cohort;
using namespace nn;

double content_loss(const ContentModel& model, std::span<const double> x_src,
                    std::span<const double> x_gen) {
  if (x_src.size() != x_gen.size()) {
    throw ShapeError("content_loss: vector length mismatch");
  }
  const auto e_src = embed(model, x_src);
  const auto e_gen = embed(model, x_gen);
  double s = 0.0;
  for (std::size_t i = 0; i < e_src.size(); ++i) {
    const double d = e_src[i] - e_gen[i];
    s += d * d;
  }
  return std::sqrt(s);
}

double total_generator_loss(double l_g, double l_content, double alpha,
                            double beta) {
  return alpha * l_g + beta * l_content;
}

bool is_discriminator_step(int step_index, int update_ratio, bool ratio_inverted) {
  const int window = update_ratio + 1;
  const bool minority = (step_index % window) == update_ratio;
  return ratio_inverted ? !minority : minority;
}

GeneratorBatchLosses generator_batch_gradient(
    const ContentModel& model, const MlpParams& generator,
    const MlpParams& discriminator,
    const std::vector<std::vector<double>>& source_embeddings, double alpha,
    double beta, MlpGrads& generator_grads) {
  if (source_embeddings.empty()) throw DataError("phase2: empty generator batch");
  GeneratorBatchLosses losses;
  MlpGrads d_sink = MlpGrads::zeros_like(discriminator);
  MlpGrads e_sink = MlpGrads::zeros_like(model.extractor);
  const int emb = generator.input_dim();

  for (const auto& e_src : source_embeddings) {
    GradTape tape_g, tape_d, tape_e;
    const auto x_gen = mlp_forward(generator, e_src, &tape_g);

    // adversarial path
    const double d_fake = mlp_forward(discriminator, x_gen, &tape_d)[0];
    const auto gan = gan_generator_loss(d_fake);
    auto into_gen = mlp_backward(
        discriminator, tape_d, std::vector<double>{alpha * gan.grad_fake}, d_sink);

    // embedding-preservation path through the frozen extractor
    const auto e_gen = mlp_forward(model.extractor, x_gen, &tape_e);
    double norm = 0.0;
    for (int i = 0; i < emb; ++i) {
      const double d = e_src[i] - e_gen[i];
      norm += d * d;
    }
    norm = std::sqrt(norm);
    if (beta != 0.0 && norm > 1e-12) {
      std::vector<double> d_egen(emb);
      for (int i = 0; i < emb; ++i) {
        d_egen[i] = beta * (e_gen[i] - e_src[i]) / norm;
      }
      const auto content_into_gen =
          mlp_backward(model.extractor, tape_e, d_egen, e_sink);
      for (std::size_t i = 0; i < into_gen.size(); ++i) {
        into_gen[i] += content_into_gen[i];
      }
    }
    mlp_backward(generator, tape_g, into_gen, generator_grads);

    losses.loss_gan += gan.loss;
    losses.loss_content += norm;
  }
  const double inv = 1.0 / static_cast<double>(source_embeddings.size());
  generator_grads.scale(inv);
  losses.loss_gan *= inv;
  losses.loss_content *= inv;
  losses.loss_total =
      total_generator_loss(losses.loss_gan, losses.loss_content, alpha, beta);
  return losses;
}

double discriminator_batch_gradient(
    const MlpParams& generator, const MlpParams& discriminator,
    const std::vector<std::vector<double>>& source_embeddings,
    const std::vector<std::vector<double>>& real_batch,
    MlpGrads& discriminator_grads) {
  if (source_embeddings.size() != real_batch.size() || real_batch.empty()) {
    throw ShapeError("phase2: discriminator batch must pair reals with fakes");
  }
  double loss = 0.0;
  for (std::size_t i = 0; i < real_batch.size(); ++i) {
    const auto x_fake = mlp_forward(generator, source_embeddings[i]);
    GradTape tape_real, tape_fake;
    const double d_real = mlp_forward(discriminator, real_batch[i], &tape_real)[0];
    const double d_fake = mlp_forward(discriminator, x_fake, &tape_fake)[0];
    const auto l = gan_discriminator_loss(d_real, d_fake);
    mlp_backward(discriminator, tape_real, std::vector<double>{l.grad_real},
                 discriminator_grads);
    mlp_backward(discriminator, tape_fake, std::vector<double>{l.grad_fake},
                 discriminator_grads);
    loss += l.loss;
  }
  const double inv = 1.0 / static_cast<double>(real_batch.size());
  discriminator_grads.scale(inv);
  return loss * inv;
}

StyleTrainer::StyleTrainer(const Cohort& cohort, const ContentModel& model,
                           int target_modality, const Phase2Hyper& hyper)
    : model_(model), hyper_(hyper), rng_(hyper.seed) {
  if (target_modality < 0 || target_modality >= cohort.modality_count()) {
    throw ConfigError("train_style: bad target modality index");
  }
  if (cohort.roi_count != model.roi_count) {
    throw ShapeError("train_style: cohort roi_count does not match model");
  }
  if (hyper.update_ratio < 1) throw ConfigError("train_style: update_ratio >= 1");

  // source pool: every present sample of every modality, target included
  for (const auto& subj : cohort.subjects) {
    for (int m = 0; m < cohort.modality_count(); ++m) {
      if (subj.has(m)) source_embeddings_.push_back(embed(model, *subj.features[m]));
    }
  }
  for (const auto& subj : cohort.subjects) {
    if (subj.has(target_modality)) reals_.push_back(*subj.features[target_modality]);
  }
  if (reals_.empty()) {
    throw DataError("train_style: modality '" +
                    cohort.modalities[target_modality] + "' has no real samples");
  }

  const int emb = model.embedding_dim();
  const int width = hyper.hidden_width > 0 ? hyper.hidden_width : emb;
  pair_.target_modality = target_modality;
  pair_.target_name = cohort.modalities[target_modality];
  pair_.hyper = hyper;
  pair_.generator =
      make_mlp(constant_dims(emb, width, cohort.roi_count, hyper.generator_layers),
               HiddenAct::LeakyRelu, OutputAct::Linear, rng_);
  pair_.discriminator =
      make_mlp(funnel_dims(cohort.roi_count, width, hyper.discriminator_layers),
               HiddenAct::LeakyRelu, OutputAct::Sigmoid, rng_);

  opt_g_ = make_adamw_state(pair_.generator,
                            {.lr = hyper.lr_g, .weight_decay = hyper.weight_decay});
  opt_d_ = make_adamw_state(pair_.discriminator,
                            {.lr = hyper.lr_d, .weight_decay = hyper.weight_decay});
  g_grads_ = MlpGrads::zeros_like(pair_.generator);
  d_grads_ = MlpGrads::zeros_like(pair_.discriminator);
}

void StyleTrainer::step() {
  const int batch = std::max(1, hyper_.batch_size);
  const bool d_step =
      is_discriminator_step(steps_, hyper_.update_ratio, hyper_.ratio_inverted);
  Phase2EpochLog log;

  if (d_step) {
    // equal real/fake counts, both drawn with replacement
    std::vector<std::vector<double>> sources(batch), reals(batch);
    for (int i = 0; i < batch; ++i) {
      sources[i] = source_embeddings_[rng_.below(source_embeddings_.size())];
      reals[i] = reals_[rng_.below(reals_.size())];
    }
    d_grads_.zero();
    last_d_ = discriminator_batch_gradient(pair_.generator, pair_.discriminator,
                                           sources, reals, d_grads_);
    adamw_step(pair_.discriminator, d_grads_, opt_d_);
    log.d_updated = true;
  } else {
    std::vector<std::vector<double>> sources(batch);
    for (int i = 0; i < batch; ++i) {
      sources[i] = source_embeddings_[rng_.below(source_embeddings_.size())];
    }
    g_grads_.zero();
    const auto losses =
        generator_batch_gradient(model_, pair_.generator, pair_.discriminator,
                                 sources, hyper_.alpha, hyper_.beta, g_grads_);
    // a null objective must leave the generator untouched
    if (hyper_.alpha != 0.0 || hyper_.beta != 0.0) {
      adamw_step(pair_.generator, g_grads_, opt_g_);
    }
    last_g_ = losses.loss_gan;
    last_content_ = losses.loss_content;
  }

  log.loss_g = last_g_;
  log.loss_d = last_d_;
  log.loss_content = last_content_;
  if (!std::isfinite(last_g_) || !std::isfinite(last_d_) ||
      !std::isfinite(last_content_)) {
    throw NumericError("train_style: non-finite loss at step " +
                       std::to_string(steps_));
  }
  pair_.training_log.push_back(log);
  ++steps_;
}

StylePair train_style(const Cohort& cohort, const ContentModel& model,
                      int target_modality, const Phase2Hyper& hyper) {
  StyleTrainer trainer(cohort, model, target_modality, hyper);
  for (int i = 0; i < hyper.epochs; ++i) trainer.step();
  StylePair pair = std::move(trainer).take();
  require_finite(pair.generator);
  require_finite(pair.discriminator);
  return pair;
}

using nlohmann::json;

json style_pair_to_json(const StylePair& pair) {
  json log = json::array();
  for (const auto& l : pair.training_log) {
    log.push_back(json{{"loss_g", l.loss_g},
                       {"loss_d", l.loss_d},
                       {"loss_content", l.loss_content},
                       {"d_updated", l.d_updated}});
  }
  return json{
      {"schema_version", kCheckpointSchemaVersion},
      {"kind", "style_pair"},
      {"target_modality", pair.target_modality},
      {"target_name", pair.target_name},
      {"networks",
       json{{"generator", mlp_to_json(pair.generator)},
            {"discriminator", mlp_to_json(pair.discriminator)}}},
      {"hyper",
       json{{"epochs", pair.hyper.epochs},
            {"lr_g", pair.hyper.lr_g},
            {"lr_d", pair.hyper.lr_d},
            {"weight_decay", pair.hyper.weight_decay},
            {"alpha", pair.hyper.alpha},
            {"beta", pair.hyper.beta},
            {"update_ratio", pair.hyper.update_ratio},
            {"ratio_inverted", pair.hyper.ratio_inverted},
            {"batch_size", pair.hyper.batch_size},
            {"seed", pair.hyper.seed},
            {"generator_layers", pair.hyper.generator_layers},
            {"discriminator_layers", pair.hyper.discriminator_layers},
            {"hidden_width", pair.hyper.hidden_width}}},
      {"training_log", std::move(log)},
  };
}

StylePair style_pair_from_json(const json& doc) {
  if (doc.value("kind", "") != "style_pair") {
    throw DataError("checkpoint is not a style pair");
  }
  StylePair pair;
  pair.target_modality = doc.at("target_modality").get<int>();
  pair.target_name = doc.at("target_name").get<std::string>();
  pair.generator = mlp_from_json(doc.at("networks").at("generator"));
  pair.discriminator = mlp_from_json(doc.at("networks").at("discriminator"));
  const json& h = doc.at("hyper");
  pair.hyper.epochs = h.at("epochs").get<int>();
  pair.hyper.lr_g = h.at("lr_g").get<double>();
  pair.hyper.lr_d = h.at("lr_d").get<double>();
  pair.hyper.weight_decay = h.at("weight_decay").get<double>();
  pair.hyper.alpha = h.at("alpha").get<double>();
  pair.hyper.beta = h.at("beta").get<double>();
  pair.hyper.update_ratio = h.at("update_ratio").get<int>();
  pair.hyper.ratio_inverted = h.at("ratio_inverted").get<bool>();
  pair.hyper.batch_size = h.at("batch_size").get<int>();
  pair.hyper.seed = h.at("seed").get<std::uint64_t>();
  pair.hyper.generator_layers = h.at("generator_layers").get<int>();
  pair.hyper.discriminator_layers = h.at("discriminator_layers").get<int>();
  pair.hyper.hidden_width = h.at("hidden_width").get<int>();
  if (doc.contains("training_log")) {
    for (const auto& l : doc["training_log"]) {
      pair.training_log.push_back({l.at("loss_g").get<double>(),
                                   l.at("loss_d").get<double>(),
                                   l.at("loss_content").get<double>(),
                                   l.at("d_updated").get<bool>()});
    }
  }
  return pair;
}

}  // namespace costyle
