#include "costyle/baselines.hpp"

#include <cmath>

#include "costyle/nn/losses.hpp"

namespace costyle {

using data::Cohort;
using namespace nn;

std::string to_string(PairwiseKind k) {
  return k == PairwiseKind::CGan ? "cgan" : "wgan";
}

namespace {

std::vector<double> with_onehot(std::span<const double> x, int label,
                                int label_count) {
  std::vector<double> out(x.begin(), x.end());
  out.resize(x.size() + label_count, 0.0);
  out[x.size() + label] = 1.0;
  return out;
}

struct LabelledVec {
  const std::vector<double>* x;
  int label;
};

}  // namespace

PairwiseModel train_pairwise_baseline(const Cohort& cohort, int source, int target,
                                      PairwiseKind kind, const PairwiseHyper& hyper) {
  if (source < 0 || source >= cohort.modality_count() || target < 0 ||
      target >= cohort.modality_count()) {
    throw ConfigError("train_pairwise_baseline: bad modality index");
  }
  std::vector<LabelledVec> sources, reals;
  for (const auto& subj : cohort.subjects) {
    if (subj.has(source)) sources.push_back({&*subj.features[source], subj.label});
    if (subj.has(target)) reals.push_back({&*subj.features[target], subj.label});
  }
  if (sources.empty() || reals.empty()) {
    throw DataError("train_pairwise_baseline: empty modality pool for pair (" +
                    cohort.modalities[source] + ", " + cohort.modalities[target] + ")");
  }

  const int p = cohort.roi_count;
  const int n_labels = cohort.label_count();
  const bool conditioned = kind == PairwiseKind::CGan;
  const int g_in = conditioned ? p + n_labels : p;
  const int d_in = conditioned ? p + n_labels : p;

  Rng rng(hyper.seed);
  PairwiseModel model;
  model.source = source;
  model.target = target;
  model.kind = kind;
  model.hyper = hyper;
  model.generator =
      make_mlp(constant_dims(g_in, hyper.hidden_width, p, hyper.generator_layers),
               HiddenAct::LeakyRelu, OutputAct::Linear, rng);
  model.discriminator =
      make_mlp(funnel_dims(d_in, hyper.hidden_width, hyper.discriminator_layers),
               HiddenAct::LeakyRelu,
               conditioned ? OutputAct::Sigmoid : OutputAct::Linear, rng);

  AdamWState opt_g = make_adamw_state(
      model.generator, {.lr = hyper.lr_g, .weight_decay = hyper.weight_decay});
  AdamWState opt_d = make_adamw_state(
      model.discriminator, {.lr = hyper.lr_d, .weight_decay = hyper.weight_decay});
  MlpGrads g_grads = MlpGrads::zeros_like(model.generator);
  MlpGrads d_grads = MlpGrads::zeros_like(model.discriminator);

  const int batch = std::max(1, hyper.batch_size);
  // cGAN keeps the restrained-discriminator schedule; the Wasserstein
  // recipe instead runs several critic steps per generator step.
  const int d_per_window = kind == PairwiseKind::WGan ? hyper.wgan_critic_steps : 1;
  const int window = kind == PairwiseKind::WGan ? hyper.wgan_critic_steps + 1 : 10;

  auto gen_input = [&](const LabelledVec& s) {
    return conditioned ? with_onehot(*s.x, s.label, n_labels)
                       : std::vector<double>(*s.x);
  };

  for (int step = 0; step < hyper.epochs; ++step) {
    const int phase = step % window;
    const bool d_step = phase < d_per_window;

    if (d_step) {
      d_grads.zero();
      double unused_loss = 0.0;
      for (int i = 0; i < batch; ++i) {
        const auto& real = reals[rng.below(reals.size())];
        const auto& src = sources[rng.below(sources.size())];
        const auto fake = mlp_forward(model.generator, gen_input(src));
        GradTape tape_r, tape_f;
        if (conditioned) {
          const double d_real =
              mlp_forward(model.discriminator,
                          with_onehot(*real.x, real.label, n_labels), &tape_r)[0];
          const double d_fake =
              mlp_forward(model.discriminator,
                          with_onehot(fake, src.label, n_labels), &tape_f)[0];
          const auto l = gan_discriminator_loss(d_real, d_fake);
          mlp_backward(model.discriminator, tape_r,
                       std::vector<double>{l.grad_real}, d_grads);
          mlp_backward(model.discriminator, tape_f,
                       std::vector<double>{l.grad_fake}, d_grads);
          unused_loss += l.loss;
        } else {
          mlp_forward(model.discriminator, *real.x, &tape_r);
          mlp_forward(model.discriminator, fake, &tape_f);
          // d(fake - real)/d(critic outputs)
          mlp_backward(model.discriminator, tape_r, std::vector<double>{-1.0},
                       d_grads);
          mlp_backward(model.discriminator, tape_f, std::vector<double>{1.0},
                       d_grads);
        }
      }
      d_grads.scale(1.0 / batch);
      adamw_step(model.discriminator, d_grads, opt_d);
      if (kind == PairwiseKind::WGan) clip_weights(model.discriminator, hyper.wgan_clip);
      (void)unused_loss;
    } else {
      g_grads.zero();
      for (int i = 0; i < batch; ++i) {
        const auto& src = sources[rng.below(sources.size())];
        GradTape tape_g, tape_d;
        const auto fake = mlp_forward(model.generator, gen_input(src), &tape_g);
        MlpGrads d_sink = MlpGrads::zeros_like(model.discriminator);
        std::vector<double> into_d;
        if (conditioned) {
          const double d_fake =
              mlp_forward(model.discriminator,
                          with_onehot(fake, src.label, n_labels), &tape_d)[0];
          into_d = mlp_backward(
              model.discriminator, tape_d,
              std::vector<double>{gan_generator_loss(d_fake).grad_fake}, d_sink);
          into_d.resize(p);  // drop the one-hot slots
        } else {
          mlp_forward(model.discriminator, fake, &tape_d);
          into_d = mlp_backward(model.discriminator, tape_d,
                                std::vector<double>{-1.0}, d_sink);
        }
        mlp_backward(model.generator, tape_g, into_d, g_grads);
      }
      g_grads.scale(1.0 / batch);
      adamw_step(model.generator, g_grads, opt_g);
    }
  }
  require_finite(model.generator);
  require_finite(model.discriminator);
  return model;
}

const PairwiseModel& PairwiseModelSet::at(int source, int target) const {
  return models.at(static_cast<std::size_t>(source) * modality_count + target);
}

PairwiseModelSet train_pairwise_set(const Cohort& cohort, PairwiseKind kind,
                                    const PairwiseHyper& hyper) {
  PairwiseModelSet set;
  set.kind = kind;
  set.modality_count = cohort.modality_count();
  for (int s = 0; s < set.modality_count; ++s) {
    for (int t = 0; t < set.modality_count; ++t) {
      PairwiseHyper h = hyper;
      h.seed = hyper.seed + static_cast<std::uint64_t>(s) * set.modality_count + t;
      set.models.push_back(train_pairwise_baseline(cohort, s, t, kind, h));
    }
  }
  return set;
}

std::vector<double> pairwise_generate(const PairwiseModel& model,
                                      std::span<const double> x_source, int label,
                                      int label_count) {
  std::vector<double> input =
      model.kind == PairwiseKind::CGan
          ? with_onehot(x_source, label, label_count)
          : std::vector<double>(x_source.begin(), x_source.end());
  return mlp_forward(model.generator, input);
}

ImputationResult pairwise_impute(const Cohort& cohort, const PairwiseModelSet& set,
                                 const ImputationPlan& plan) {
  if (set.modality_count != cohort.modality_count()) {
    throw ShapeError("pairwise_impute: model set does not match cohort");
  }
  ImputationResult result;
  result.completed = cohort;
  for (auto& subj : result.completed.subjects) {
    if (subj.observed_count() == 0) {
      throw DataError("subject '" + subj.subject_id + "' has no observed modalities");
    }
    for (int t = 0; t < cohort.modality_count(); ++t) {
      if (subj.has(t)) continue;
      Provenance prov;
      prov.subject_id = subj.subject_id;
      prov.target = t;
      prov.strategy = plan.strategy;
      std::vector<double> fill;
      if (plan.strategy == FillStrategy::FirstAvailable) {
        int source = -1;
        for (int m : plan.priority) {
          if (subj.has(m)) {
            source = m;
            break;
          }
        }
        fill = pairwise_generate(set.at(source, t), *subj.features[source],
                                 subj.label, cohort.label_count());
        prov.sources = {source};
      } else {
        fill.assign(cohort.roi_count, 0.0);
        for (int m : plan.priority) {
          if (!subj.has(m)) continue;
          const auto one = pairwise_generate(set.at(m, t), *subj.features[m],
                                             subj.label, cohort.label_count());
          for (int r = 0; r < cohort.roi_count; ++r) fill[r] += one[r];
          prov.sources.push_back(m);
        }
        for (double& v : fill) v /= static_cast<double>(prov.sources.size());
      }
      subj.features[t] = std::move(fill);
      result.filled.push_back(std::move(prov));
    }
  }
  return result;
}

}  // namespace costyle
