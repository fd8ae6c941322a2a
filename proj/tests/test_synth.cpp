#include <doctest.h>

#include <cmath>

#include "costyle/data/synth.hpp"

using namespace costyle;
using namespace costyle::data;

TEST_CASE("zero missingness gives fully observed cohorts") {
  SynthSpec spec;
  spec.subjects_per_class = {5, 5, 5};
  spec.roi_count = 8;
  spec.content_dim = 4;
  spec.missingness = {0.0, 0.0, 0.0, 0.0};
  const auto [cohort, truth] = synth_cohort(spec);
  CHECK(cohort.fully_observed());
  CHECK(cohort.subjects.size() == 15);
  CHECK(truth.content.size() == 15);
}

TEST_CASE("noise-free identity styles make modalities affine-equal") {
  SynthSpec spec;
  spec.modalities = {"A", "B"};
  spec.labels = {"x", "y"};
  spec.subjects_per_class = {4, 4};
  spec.roi_count = 5;
  spec.content_dim = 5;
  StyleParams ident;
  ident.scale.assign(25, 0.0);
  for (int i = 0; i < 5; ++i) ident.scale[i * 5 + i] = 1.0;
  ident.offset.assign(5, 0.0);
  ident.noise_sd = 0.0;
  StyleParams shifted = ident;
  shifted.offset.assign(5, 2.5);
  spec.styles = {ident, shifted};
  const auto [cohort, truth] = synth_cohort(spec);
  for (const auto& s : cohort.subjects) {
    for (int r = 0; r < 5; ++r) {
      CHECK((*s.features[1])[r] - 2.5 ==
            doctest::Approx((*s.features[0])[r]).epsilon(1e-12));
    }
  }
}

TEST_CASE("class mean separation matches the label effect") {
  SynthSpec spec;
  spec.labels = {"CN", "EMCI"};
  spec.subjects_per_class = {500, 500};
  spec.modalities = {"A", "B"};
  spec.roi_count = 6;
  spec.content_dim = 4;
  spec.disease_dims = 4;
  spec.label_effect = 1.5;
  spec.seed = 2024;
  const auto [cohort, truth] = synth_cohort(spec);

  for (int m = 0; m < 2; ++m) {
    const auto mean0 = synth_class_mean(truth, spec, m, 0);
    const auto mean1 = synth_class_mean(truth, spec, m, 1);
    // analytic separation direction
    std::vector<double> dir(spec.roi_count);
    double norm = 0.0;
    for (int r = 0; r < spec.roi_count; ++r) {
      dir[r] = mean1[r] - mean0[r];
      norm += dir[r] * dir[r];
    }
    norm = std::sqrt(norm);
    REQUIRE(norm > 0.0);
    for (double& v : dir) v /= norm;

    // empirical projected separation vs analytic, within 3 stderr
    auto projected = [&](int cls) {
      std::vector<double> vals;
      for (const auto& s : cohort.subjects) {
        if (s.label != cls) continue;
        double p = 0.0;
        for (int r = 0; r < spec.roi_count; ++r) p += dir[r] * (*s.features[m])[r];
        vals.push_back(p);
      }
      return vals;
    };
    auto mean_var = [](const std::vector<double>& v) {
      double m = 0.0;
      for (double x : v) m += x;
      m /= v.size();
      double ss = 0.0;
      for (double x : v) ss += (x - m) * (x - m);
      return std::pair<double, double>{m, ss / (v.size() - 1)};
    };
    const auto [m0, v0] = mean_var(projected(0));
    const auto [m1, v1] = mean_var(projected(1));
    const double sep = m1 - m0;
    const double stderr_sep = std::sqrt(v0 / 500 + v1 / 500);
    CHECK(std::abs(sep - norm) < 3.0 * stderr_sep);
  }
}

TEST_CASE("identical seeds are bit-identical, different seeds differ") {
  SynthSpec spec;
  spec.subjects_per_class = {6, 5, 4};
  spec.roi_count = 7;
  spec.content_dim = 3;
  spec.missingness = {0.3, 0.1, 0.0, 0.2};
  spec.seed = 9;
  const auto [a, ta] = synth_cohort(spec);
  const auto [b, tb] = synth_cohort(spec);
  REQUIRE(a.subjects.size() == b.subjects.size());
  for (std::size_t i = 0; i < a.subjects.size(); ++i) {
    CHECK(a.subjects[i].features == b.subjects[i].features);
  }
  spec.seed = 10;
  const auto [c, tc] = synth_cohort(spec);
  bool any_diff = false;
  for (std::size_t i = 0; i < a.subjects.size() && !any_diff; ++i) {
    any_diff = a.subjects[i].features != c.subjects[i].features;
  }
  CHECK(any_diff);
}

TEST_CASE("every subject keeps at least one modality under heavy missingness") {
  SynthSpec spec;
  spec.subjects_per_class = {30, 30, 30};
  spec.roi_count = 4;
  spec.content_dim = 2;
  spec.missingness = {0.95, 0.95, 0.95, 0.95};
  spec.seed = 4;
  const auto [cohort, truth] = synth_cohort(spec);
  for (const auto& s : cohort.subjects) CHECK(s.observed_count() >= 1);
}

TEST_CASE("spec json round-trip") {
  SynthSpec spec;
  spec.subjects_per_class = {3, 3, 3};
  spec.roi_count = 5;
  spec.missingness = {0.1, 0.2, 0.3, 0.4};
  spec.label_effect = 2.5;
  const SynthSpec back = synth_spec_from_json(synth_spec_to_json(spec));
  CHECK(back.subjects_per_class == spec.subjects_per_class);
  CHECK(back.roi_count == spec.roi_count);
  CHECK(back.missingness == spec.missingness);
  CHECK(back.label_effect == spec.label_effect);
}

TEST_CASE("invalid specs are rejected") {
  SynthSpec spec;
  spec.missingness = {1.5, 0.0, 0.0, 0.0};
  CHECK_THROWS_AS(synth_cohort(spec), ConfigError);

  SynthSpec bad_dims;
  bad_dims.content_dim = 50;
  bad_dims.roi_count = 10;
  CHECK_THROWS_AS(synth_cohort(bad_dims), ConfigError);

  SynthSpec bad_counts;
  bad_counts.subjects_per_class = {5, 5};
  CHECK_THROWS_AS(synth_cohort(bad_counts), ConfigError);
}
