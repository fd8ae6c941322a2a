#include "costyle/phase1.hpp"

#include <algorithm>
#include <cmath>

#include "costyle/nn/checkpoint.hpp"
#include "costyle/nn/losses.hpp"

namespace costyle {

using data::Cohort;
using namespace nn;

std::vector<SampleRef> present_samples(const Cohort& cohort) {
  std::vector<SampleRef> out;
  for (int k = 0; k < static_cast<int>(cohort.subjects.size()); ++k) {
    for (int m = 0; m < cohort.modality_count(); ++m) {
      if (cohort.subjects[k].has(m)) out.push_back({k, m});
    }
  }
  return out;
}

namespace {

struct SampleResult {
  double loss_label;
  double loss_domain;
  bool label_hit;
  bool domain_hit;
};

int argmax(const std::vector<double>& v) {
  return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

// Forward/backward for one sample. The extractor receives the label-head
// gradient plus the sign-flipped domain-head gradient (gradient reversal);
// with coupling off or lambda zero the domain term is skipped entirely so
// the extractor update is bit-identical to a label-only run.
SampleResult accumulate_sample(const ContentModel& model, const Cohort& cohort,
                               const SampleRef& s, MlpGrads& extractor_grads,
                               MlpGrads& label_grads, MlpGrads& domain_grads) {
  const auto& x = *cohort.subjects[s.subject].features[s.modality];
  const int y = cohort.subjects[s.subject].label;

  GradTape tape_e, tape_l, tape_d;
  const auto e = mlp_forward(model.extractor, x, &tape_e);
  const auto logits_label = mlp_forward(model.label_head, e, &tape_l);
  const auto logits_domain = mlp_forward(model.domain_head, e, &tape_d);

  const auto ce_label = cross_entropy(logits_label, y);
  const auto ce_domain = cross_entropy(logits_domain, s.modality);

  auto upstream =
      mlp_backward(model.label_head, tape_l, ce_label.logit_grad, label_grads);
  const auto into_extractor =
      mlp_backward(model.domain_head, tape_d, ce_domain.logit_grad, domain_grads);
  if (model.hyper.couple_domain && model.hyper.grl_lambda != 0.0) {
    const auto reversed = grad_reverse(into_extractor, model.hyper.grl_lambda);
    for (std::size_t i = 0; i < upstream.size(); ++i) upstream[i] += reversed[i];
  }
  mlp_backward(model.extractor, tape_e, upstream, extractor_grads);

  return {ce_label.loss, ce_domain.loss, argmax(logits_label) == y,
          argmax(logits_domain) == s.modality};
}

}  // namespace

Phase1BatchLosses phase1_batch_gradients(const ContentModel& model,
                                         const Cohort& cohort,
                                         std::span<const SampleRef> batch,
                                         MlpGrads& extractor_grads,
                                         MlpGrads& label_grads,
                                         MlpGrads& domain_grads) {
  if (batch.empty()) throw DataError("phase1: empty batch");
  Phase1BatchLosses losses;
  for (const auto& s : batch) {
    const auto r = accumulate_sample(model, cohort, s, extractor_grads,
                                     label_grads, domain_grads);
    losses.loss_label += r.loss_label;
    losses.loss_domain += r.loss_domain;
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  extractor_grads.scale(inv);
  label_grads.scale(inv);
  domain_grads.scale(inv);
  losses.loss_label *= inv;
  losses.loss_domain *= inv;
  return losses;
}

Phase1BatchLosses phase1_batch_losses(const ContentModel& model,
                                      const Cohort& cohort,
                                      std::span<const SampleRef> batch) {
  Phase1BatchLosses losses;
  for (const auto& s : batch) {
    const auto& x = *cohort.subjects[s.subject].features[s.modality];
    const auto e = mlp_forward(model.extractor, x);
    losses.loss_label +=
        cross_entropy(mlp_forward(model.label_head, e),
                      cohort.subjects[s.subject].label)
            .loss;
    losses.loss_domain +=
        cross_entropy(mlp_forward(model.domain_head, e), s.modality).loss;
  }
  losses.loss_label /= static_cast<double>(batch.size());
  losses.loss_domain /= static_cast<double>(batch.size());
  return losses;
}

ContentModel train_content(const Cohort& cohort, const Phase1Hyper& hyper) {
  if (cohort.subjects.empty()) throw DataError("train_content: empty cohort");
  for (int m = 0; m < cohort.modality_count(); ++m) {
    bool any = false;
    for (const auto& s : cohort.subjects) any = any || s.has(m);
    if (!any) {
      throw DataError("train_content: modality '" + cohort.modalities[m] +
                      "' has no present samples");
    }
  }
  if (hyper.epochs < 1) throw ConfigError("train_content: epochs must be >= 1");

  const int p = cohort.roi_count;
  const int width = hyper.hidden_width > 0 ? hyper.hidden_width : hyper.embedding_dim;

  Rng rng(hyper.seed);
  ContentModel model;
  model.hyper = hyper;
  model.modalities = cohort.modalities;
  model.labels = cohort.labels;
  model.roi_count = p;
  model.standardization = cohort.standardization;
  // tanh-bounded embedding: an unbounded output lets the extractor win the
  // adversarial game by inflating its scale, which also wrecks the phase-2
  // content target
  model.extractor =
      make_mlp(constant_dims(p, width, hyper.embedding_dim, hyper.extractor_layers),
               HiddenAct::LeakyRelu, OutputAct::Tanh, rng);
  model.label_head =
      make_mlp(geometric_dims(hyper.embedding_dim, cohort.label_count(), hyper.head_layers),
               HiddenAct::LeakyRelu, OutputAct::SoftmaxLogits, rng);
  model.domain_head =
      make_mlp(geometric_dims(hyper.embedding_dim, cohort.modality_count(), hyper.head_layers),
               HiddenAct::LeakyRelu, OutputAct::SoftmaxLogits, rng);

  const AdamWHyper opt{.lr = hyper.lr, .weight_decay = hyper.weight_decay};
  AdamWState opt_extractor = make_adamw_state(model.extractor, opt);
  AdamWState opt_label = make_adamw_state(model.label_head, opt);
  AdamWState opt_domain = make_adamw_state(model.domain_head, opt);

  auto samples = present_samples(cohort);
  const int batch_size = hyper.full_batch ? static_cast<int>(samples.size())
                                          : std::max(1, hyper.batch_size);

  MlpGrads g_extractor = MlpGrads::zeros_like(model.extractor);
  MlpGrads g_label = MlpGrads::zeros_like(model.label_head);
  MlpGrads g_domain = MlpGrads::zeros_like(model.domain_head);

  model.training_log.reserve(hyper.epochs);
  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    rng.shuffle(samples);
    Phase1EpochLog log;
    long label_hits = 0, domain_hits = 0;
    double loss_label_sum = 0.0, loss_domain_sum = 0.0;

    for (std::size_t start = 0; start < samples.size(); start += batch_size) {
      const std::size_t end = std::min(samples.size(), start + batch_size);
      g_extractor.zero();
      g_label.zero();
      g_domain.zero();
      for (std::size_t i = start; i < end; ++i) {
        const auto r = accumulate_sample(model, cohort, samples[i], g_extractor,
                                         g_label, g_domain);
        loss_label_sum += r.loss_label;
        loss_domain_sum += r.loss_domain;
        label_hits += r.label_hit;
        domain_hits += r.domain_hit;
      }
      const double inv = 1.0 / static_cast<double>(end - start);
      g_extractor.scale(inv);
      g_label.scale(inv);
      g_domain.scale(inv);
      // heads first, then the extractor; all gradients were taken at the
      // same pre-update parameters
      adamw_step(model.label_head, g_label, opt_label);
      adamw_step(model.domain_head, g_domain, opt_domain);
      adamw_step(model.extractor, g_extractor, opt_extractor);
    }

    const double n = static_cast<double>(samples.size());
    log.loss_label = loss_label_sum / n;
    log.loss_domain = loss_domain_sum / n;
    log.label_acc = label_hits / n;
    log.domain_acc = domain_hits / n;
    if (!std::isfinite(log.loss_label) || !std::isfinite(log.loss_domain)) {
      throw NumericError("train_content: non-finite loss at epoch " +
                         std::to_string(epoch) + " (label " +
                         std::to_string(log.loss_label) + ", domain " +
                         std::to_string(log.loss_domain) + ")");
    }
    model.training_log.push_back(log);
  }
  require_finite(model.extractor);
  require_finite(model.label_head);
  require_finite(model.domain_head);
  return model;
}

std::vector<double> embed(const ContentModel& model, std::span<const double> x) {
  if (static_cast<int>(x.size()) != model.roi_count) {
    throw ShapeError("embed: feature length " + std::to_string(x.size()) +
                     " != roi count " + std::to_string(model.roi_count));
  }
  return mlp_forward(model.extractor, x);
}

Phase1Metrics phase1_metrics(const ContentModel& model, const Cohort& holdout) {
  Phase1Metrics m;
  const int n_labels = static_cast<int>(model.labels.size());
  m.label_confusion.assign(n_labels, std::vector<long>(n_labels, 0));
  long label_hits = 0, domain_hits = 0, total = 0;
  for (const auto& subj : holdout.subjects) {
    for (int mod = 0; mod < holdout.modality_count(); ++mod) {
      if (!subj.has(mod)) continue;
      const auto e = embed(model, *subj.features[mod]);
      const auto logits_label = mlp_forward(model.label_head, e);
      const auto logits_domain = mlp_forward(model.domain_head, e);
      const int pred_label = static_cast<int>(
          std::max_element(logits_label.begin(), logits_label.end()) -
          logits_label.begin());
      const int pred_domain = static_cast<int>(
          std::max_element(logits_domain.begin(), logits_domain.end()) -
          logits_domain.begin());
      m.label_confusion[subj.label][pred_label] += 1;
      label_hits += pred_label == subj.label;
      domain_hits += pred_domain == mod;
      ++total;
    }
  }
  if (total == 0) throw DataError("phase1_metrics: no present samples");
  m.label_acc = static_cast<double>(label_hits) / total;
  m.domain_acc = static_cast<double>(domain_hits) / total;
  return m;
}

using nlohmann::json;

json content_model_to_json(const ContentModel& model) {
  json doc{
      {"schema_version", kCheckpointSchemaVersion},
      {"kind", "content_model"},
      {"networks",
       json{{"extractor", mlp_to_json(model.extractor)},
            {"label_head", mlp_to_json(model.label_head)},
            {"domain_head", mlp_to_json(model.domain_head)}}},
      {"hyper",
       json{{"epochs", model.hyper.epochs},
            {"lr", model.hyper.lr},
            {"weight_decay", model.hyper.weight_decay},
            {"batch_size", model.hyper.batch_size},
            {"grl_lambda", model.hyper.grl_lambda},
            {"seed", model.hyper.seed},
            {"embedding_dim", model.hyper.embedding_dim},
            {"extractor_layers", model.hyper.extractor_layers},
            {"head_layers", model.hyper.head_layers},
            {"hidden_width", model.hyper.hidden_width},
            {"full_batch", model.hyper.full_batch},
            {"couple_domain", model.hyper.couple_domain}}},
      {"modalities", model.modalities},
      {"labels", model.labels},
      {"roi_count", model.roi_count},
  };
  if (model.standardization) {
    doc["standardization"] = json{{"mean", model.standardization->mean},
                                  {"stddev", model.standardization->stddev}};
  }
  json log = json::array();
  for (const auto& l : model.training_log) {
    log.push_back(json{{"loss_label", l.loss_label},
                       {"loss_domain", l.loss_domain},
                       {"label_acc", l.label_acc},
                       {"domain_acc", l.domain_acc}});
  }
  doc["training_log"] = std::move(log);
  return doc;
}

ContentModel content_model_from_json(const json& doc) {
  if (doc.value("kind", "") != "content_model") {
    throw DataError("checkpoint is not a content model");
  }
  ContentModel model;
  const json& nets = doc.at("networks");
  model.extractor = mlp_from_json(nets.at("extractor"));
  model.label_head = mlp_from_json(nets.at("label_head"));
  model.domain_head = mlp_from_json(nets.at("domain_head"));
  const json& h = doc.at("hyper");
  model.hyper.epochs = h.at("epochs").get<int>();
  model.hyper.lr = h.at("lr").get<double>();
  model.hyper.weight_decay = h.at("weight_decay").get<double>();
  model.hyper.batch_size = h.at("batch_size").get<int>();
  model.hyper.grl_lambda = h.at("grl_lambda").get<double>();
  model.hyper.seed = h.at("seed").get<std::uint64_t>();
  model.hyper.embedding_dim = h.at("embedding_dim").get<int>();
  model.hyper.extractor_layers = h.at("extractor_layers").get<int>();
  model.hyper.head_layers = h.at("head_layers").get<int>();
  model.hyper.hidden_width = h.at("hidden_width").get<int>();
  model.hyper.full_batch = h.at("full_batch").get<bool>();
  model.hyper.couple_domain = h.at("couple_domain").get<bool>();
  model.modalities = doc.at("modalities").get<std::vector<std::string>>();
  model.labels = doc.at("labels").get<std::vector<std::string>>();
  model.roi_count = doc.at("roi_count").get<int>();
  if (doc.contains("standardization")) {
    data::StandardizationStats stats;
    stats.mean =
        doc["standardization"].at("mean").get<std::vector<std::vector<double>>>();
    stats.stddev =
        doc["standardization"].at("stddev").get<std::vector<std::vector<double>>>();
    model.standardization = std::move(stats);
  }
  if (doc.contains("training_log")) {
    for (const auto& l : doc["training_log"]) {
      model.training_log.push_back({l.at("loss_label").get<double>(),
                                    l.at("loss_domain").get<double>(),
                                    l.at("label_acc").get<double>(),
                                    l.at("domain_acc").get<double>()});
    }
  }
  if (model.extractor.input_dim() != model.roi_count) {
    throw ShapeError("content model extractor does not match roi_count");
  }
  return model;
}

}  // namespace costyle
