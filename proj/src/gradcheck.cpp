#include "costyle/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "costyle/nn/losses.hpp"
#include "costyle/nn/mlp.hpp"

namespace costyle::nn {

namespace {

constexpr double kStep = 1e-5;
constexpr double kTolerance = 1e-4;
constexpr double kAbsFloor = 1e-8;

// Relative error with an absolute-difference floor: a mismatch below
// kAbsFloor passes outright (it is FD roundoff, not a wrong gradient),
// which makes the effective denominator floor kAbsFloor / kTolerance.
double rel_err(double analytic, double numeric) {
  const double denom = std::max(
      {std::abs(analytic), std::abs(numeric), kAbsFloor / kTolerance});
  return std::abs(analytic - numeric) / denom;
}

// Compares analytic parameter gradients against central differences of a
// scalar objective re-evaluated from scratch at perturbed parameters.
GradCheckResult check_net(std::string name, MlpParams params,
                          const std::function<double(const MlpParams&)>& loss,
                          const std::function<void(const MlpParams&, MlpGrads&)>& analytic) {
  MlpGrads grads = MlpGrads::zeros_like(params);
  analytic(params, grads);

  GradCheckResult result{std::move(name), 0.0, 0, 0.0, 0.0};
  auto probe = [&](std::vector<double>& arr, std::size_t i, double g) {
    const double saved = arr[i];
    arr[i] = saved + kStep;
    const double up = loss(params);
    arr[i] = saved - kStep;
    const double down = loss(params);
    arr[i] = saved;
    const double fd = (up - down) / (2.0 * kStep);
    const double e = rel_err(g, fd);
    if (e > result.max_rel_err) {
      result.max_rel_err = e;
      result.worst_analytic = g;
      result.worst_fd = fd;
    }
    ++result.checked_params;
  };
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    for (std::size_t i = 0; i < params.weights[l].size(); ++i)
      probe(params.weights[l], i, grads.weights[l][i]);
    for (std::size_t i = 0; i < params.biases[l].size(); ++i)
      probe(params.biases[l], i, grads.biases[l][i]);
  }
  return result;
}

std::vector<double> random_vec(int n, Rng& rng, double scale = 1.0) {
  std::vector<double> v(n);
  for (double& x : v) x = scale * rng.normal();
  return v;
}

double l2_norm_diff(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

}  // namespace

std::vector<GradCheckResult> run_gradcheck(std::uint64_t seed) {
  Rng rng(seed);
  std::vector<GradCheckResult> out;

  // Reduced-width stand-ins for the production architectures: the layer
  // counts match (5/2/2/13/5), only the widths shrink.
  const int roi = 11;
  const int emb = 8;
  const int n_labels = 3;
  const int n_modalities = 4;
  const auto extractor_dims = constant_dims(roi, 9, emb, 5);
  const auto label_dims = geometric_dims(emb, n_labels, 2);
  const auto domain_dims = geometric_dims(emb, n_modalities, 2);
  const auto generator_dims = constant_dims(emb, 9, roi, 13);
  const auto disc_dims = funnel_dims(roi, 8, 5);

  MlpParams extractor = make_mlp(extractor_dims, HiddenAct::LeakyRelu,
                                 OutputAct::Tanh, rng);
  MlpParams label_head = make_mlp(label_dims, HiddenAct::LeakyRelu,
                                  OutputAct::SoftmaxLogits, rng);
  MlpParams domain_head = make_mlp(domain_dims, HiddenAct::LeakyRelu,
                                   OutputAct::SoftmaxLogits, rng);
  MlpParams generator = make_mlp(generator_dims, HiddenAct::LeakyRelu,
                                 OutputAct::Linear, rng);
  MlpParams disc = make_mlp(disc_dims, HiddenAct::LeakyRelu,
                            OutputAct::Sigmoid, rng);
  MlpParams critic = make_mlp(disc_dims, HiddenAct::LeakyRelu,
                              OutputAct::Linear, rng);

  const std::vector<double> x = random_vec(roi, rng);
  const std::vector<double> x_real = random_vec(roi, rng);
  const std::vector<double> e_src = random_vec(emb, rng);
  const std::vector<double> probe_dir = random_vec(emb, rng);

  // 1. Extractor under a fixed linear readout.
  out.push_back(check_net(
      "extractor/linear_readout", extractor,
      [&](const MlpParams& p) {
        const auto y = mlp_forward(p, x);
        double s = 0.0;
        for (int i = 0; i < emb; ++i) s += probe_dir[i] * y[i];
        return s;
      },
      [&](const MlpParams& p, MlpGrads& g) {
        GradTape tape;
        mlp_forward(p, x, &tape);
        mlp_backward(p, tape, probe_dir, g);
      }));

  // 2/3. Classifier heads under cross-entropy.
  auto head_case = [&](std::string name, const MlpParams& net, int label) {
    return check_net(
        std::move(name), net,
        [&, label](const MlpParams& p) {
          return cross_entropy(mlp_forward(p, e_src), label).loss;
        },
        [&, label](const MlpParams& p, MlpGrads& g) {
          GradTape tape;
          const auto logits = mlp_forward(p, e_src, &tape);
          mlp_backward(p, tape, cross_entropy(logits, label).logit_grad, g);
        });
  };
  out.push_back(head_case("label_head/cross_entropy", label_head, 1));
  out.push_back(head_case("domain_head/cross_entropy", domain_head, 2));

  // 4. Adversarial extractor objective: L_label - lambda * L_domain,
  //    the combination applied to the extractor via gradient reversal.
  const double lambda = 1.3;
  out.push_back(check_net(
      "extractor/adversarial_combination", extractor,
      [&](const MlpParams& p) {
        const auto e = mlp_forward(p, x);
        const double l_label = cross_entropy(mlp_forward(label_head, e), 0).loss;
        const double l_domain = cross_entropy(mlp_forward(domain_head, e), 1).loss;
        return l_label - lambda * l_domain;
      },
      [&](const MlpParams& p, MlpGrads& g) {
        GradTape tape_e, tape_l, tape_d;
        const auto e = mlp_forward(p, x, &tape_e);
        const auto logits_l = mlp_forward(label_head, e, &tape_l);
        const auto logits_d = mlp_forward(domain_head, e, &tape_d);
        MlpGrads sink_l = MlpGrads::zeros_like(label_head);
        MlpGrads sink_d = MlpGrads::zeros_like(domain_head);
        auto up = mlp_backward(label_head, tape_l,
                               cross_entropy(logits_l, 0).logit_grad, sink_l);
        const auto down = mlp_backward(
            domain_head, tape_d, cross_entropy(logits_d, 1).logit_grad, sink_d);
        const auto reversed = grad_reverse(down, lambda);
        for (int i = 0; i < emb; ++i) up[i] += reversed[i];
        mlp_backward(p, tape_e, up, g);
      }));

  // 5. Discriminator under the paired real/fake loss.
  const std::vector<double> x_fake = mlp_forward(generator, e_src);
  out.push_back(check_net(
      "discriminator/gan_loss", disc,
      [&](const MlpParams& p) {
        const double d_real = mlp_forward(p, x_real)[0];
        const double d_fake = mlp_forward(p, x_fake)[0];
        return gan_discriminator_loss(d_real, d_fake).loss;
      },
      [&](const MlpParams& p, MlpGrads& g) {
        GradTape tr, tf;
        const double d_real = mlp_forward(p, x_real, &tr)[0];
        const double d_fake = mlp_forward(p, x_fake, &tf)[0];
        const auto loss = gan_discriminator_loss(d_real, d_fake);
        mlp_backward(p, tr, std::vector<double>{loss.grad_real}, g);
        mlp_backward(p, tf, std::vector<double>{loss.grad_fake}, g);
      }));

  // 6. Generator under the adversarial loss (discriminator frozen).
  out.push_back(check_net(
      "generator/gan_loss", generator,
      [&](const MlpParams& p) {
        const double d_fake = mlp_forward(disc, mlp_forward(p, e_src))[0];
        return gan_generator_loss(d_fake).loss;
      },
      [&](const MlpParams& p, MlpGrads& g) {
        GradTape tg, td;
        const auto gen = mlp_forward(p, e_src, &tg);
        const double d_fake = mlp_forward(disc, gen, &td)[0];
        MlpGrads sink = MlpGrads::zeros_like(disc);
        const auto into_gen = mlp_backward(
            disc, td, std::vector<double>{gan_generator_loss(d_fake).grad_fake},
            sink);
        mlp_backward(p, tg, into_gen, g);
      }));

  // 7. Generator under the embedding-preservation loss (extractor frozen).
  auto content_objective = [&](const MlpParams& p) {
    const auto gen = mlp_forward(p, e_src);
    const auto e_gen = mlp_forward(extractor, gen);
    return l2_norm_diff(e_src, e_gen);
  };
  auto content_gradient = [&](const MlpParams& p, MlpGrads& g, double beta) {
    GradTape tg, te;
    const auto gen = mlp_forward(p, e_src, &tg);
    const auto e_gen = mlp_forward(extractor, gen, &te);
    const double norm = l2_norm_diff(e_src, e_gen);
    if (norm <= 0.0) return;
    std::vector<double> d_egen(emb);
    for (int i = 0; i < emb; ++i)
      d_egen[i] = beta * (e_gen[i] - e_src[i]) / norm;
    MlpGrads sink = MlpGrads::zeros_like(extractor);
    const auto into_gen = mlp_backward(extractor, te, d_egen, sink);
    mlp_backward(p, tg, into_gen, g);
  };
  out.push_back(check_net(
      "generator/content_loss", generator, content_objective,
      [&](const MlpParams& p, MlpGrads& g) { content_gradient(p, g, 1.0); }));

  // 8. Generator under the full weighted objective.
  const double alpha = 1.0, beta = 100.0;
  out.push_back(check_net(
      "generator/total_loss", generator,
      [&](const MlpParams& p) {
        const auto gen = mlp_forward(p, e_src);
        const double d_fake = mlp_forward(disc, gen)[0];
        const auto e_gen = mlp_forward(extractor, gen);
        return alpha * gan_generator_loss(d_fake).loss +
               beta * l2_norm_diff(e_src, e_gen);
      },
      [&](const MlpParams& p, MlpGrads& g) {
        GradTape tg, td;
        const auto gen = mlp_forward(p, e_src, &tg);
        const double d_fake = mlp_forward(disc, gen, &td)[0];
        MlpGrads sink = MlpGrads::zeros_like(disc);
        auto into_gen = mlp_backward(
            disc, td,
            std::vector<double>{alpha * gan_generator_loss(d_fake).grad_fake},
            sink);
        MlpGrads content_part = MlpGrads::zeros_like(p);
        content_gradient(p, content_part, beta);
        mlp_backward(p, tg, into_gen, g);
        g.add_scaled(content_part, 1.0);
      }));

  // 9. Weight-clipped critic objective (linear output).
  out.push_back(check_net(
      "critic/wasserstein_loss", critic,
      [&](const MlpParams& p) {
        return wgan_critic_loss(mlp_forward(p, x_real)[0],
                                mlp_forward(p, x_fake)[0]);
      },
      [&](const MlpParams& p, MlpGrads& g) {
        GradTape tr, tf;
        mlp_forward(p, x_real, &tr);
        mlp_forward(p, x_fake, &tf);
        mlp_backward(p, tr, std::vector<double>{-1.0}, g);
        mlp_backward(p, tf, std::vector<double>{1.0}, g);
      }));

  return out;
}

double max_rel_error(const std::vector<GradCheckResult>& results) {
  double m = 0.0;
  for (const auto& r : results) m = std::max(m, r.max_rel_err);
  return m;
}

}  // namespace costyle::nn
