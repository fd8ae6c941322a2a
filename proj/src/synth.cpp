#include "costyle/data/synth.hpp"

#include <cmath>
#include <cstdio>

namespace costyle::data {

namespace {

void check_spec(const SynthSpec& spec) {
  const int s_count = static_cast<int>(spec.modalities.size());
  if (s_count < 2) throw ConfigError("synth spec needs at least 2 modalities");
  if (spec.labels.empty()) throw ConfigError("synth spec needs labels");
  if (spec.subjects_per_class.size() != spec.labels.size()) {
    throw ConfigError("subjects_per_class must match label count");
  }
  for (int n : spec.subjects_per_class) {
    if (n <= 0) throw ConfigError("subjects_per_class entries must be positive");
  }
  if (spec.content_dim <= 0 || spec.roi_count <= 0) {
    throw ConfigError("content_dim and roi_count must be positive");
  }
  if (spec.content_dim > spec.roi_count) {
    throw ConfigError("content_dim cannot exceed roi_count");
  }
  if (!spec.missingness.empty()) {
    if (static_cast<int>(spec.missingness.size()) != s_count) {
      throw ConfigError("missingness must have one entry per modality");
    }
    for (double p : spec.missingness) {
      if (p < 0.0 || p > 1.0) throw ConfigError("missingness must be in [0,1]");
    }
  }
  if (!spec.styles.empty()) {
    if (static_cast<int>(spec.styles.size()) != s_count) {
      throw ConfigError("styles must have one entry per modality");
    }
    const std::size_t pp = static_cast<std::size_t>(spec.roi_count) * spec.roi_count;
    for (const auto& st : spec.styles) {
      if (st.scale.size() != pp ||
          st.offset.size() != static_cast<std::size_t>(spec.roi_count)) {
        throw ConfigError("style scale/offset shape mismatch");
      }
    }
  }
  if (!spec.class_shift.empty()) {
    if (spec.class_shift.size() != spec.labels.size()) {
      throw ConfigError("class_shift must have one entry per class");
    }
    for (const auto& sh : spec.class_shift) {
      if (sh.size() != static_cast<std::size_t>(spec.content_dim)) {
        throw ConfigError("class_shift dimension mismatch");
      }
    }
  }
  if (spec.disease_dims > spec.content_dim) {
    throw ConfigError("disease_dims must be at most content_dim");
  }
}

std::vector<StyleParams> generate_styles(const SynthSpec& spec, Rng& rng) {
  const int p = spec.roi_count;
  std::vector<StyleParams> styles(spec.modalities.size());
  for (auto& st : styles) {
    const double gain =
        1.0 + spec.style_gain_spread * (2.0 * rng.uniform() - 1.0);
    st.scale.assign(static_cast<std::size_t>(p) * p, 0.0);
    const double mix = spec.style_mix / std::sqrt(static_cast<double>(p));
    for (int r = 0; r < p; ++r) {
      for (int c = 0; c < p; ++c) {
        double v = mix * rng.normal();
        if (r == c) v += 1.0;
        st.scale[static_cast<std::size_t>(r) * p + c] = gain * v;
      }
    }
    st.offset.resize(p);
    for (double& v : st.offset) v = spec.offset_scale * rng.normal();
    st.noise_sd = spec.noise_sd;
  }
  return styles;
}

std::vector<std::vector<double>> generate_class_shift(const SynthSpec& spec,
                                                      Rng& rng) {
  const int affected =
      spec.disease_dims < 0 ? spec.content_dim : spec.disease_dims;
  std::vector<std::vector<double>> shift(spec.labels.size());
  for (auto& sh : shift) {
    sh.assign(spec.content_dim, 0.0);
    for (int d = 0; d < affected; ++d) {
      sh[d] = spec.label_effect * rng.normal();
    }
  }
  return shift;
}

}  // namespace

std::pair<Cohort, SynthTruth> synth_cohort(const SynthSpec& spec) {
  check_spec(spec);
  const int s_count = static_cast<int>(spec.modalities.size());
  const int p = spec.roi_count;

  Rng rng(spec.seed);
  SynthTruth truth;
  truth.seed = spec.seed;
  truth.styles = spec.styles.empty() ? generate_styles(spec, rng) : spec.styles;
  truth.class_shift =
      spec.class_shift.empty() ? generate_class_shift(spec, rng) : spec.class_shift;

  std::vector<double> missingness = spec.missingness;
  if (missingness.empty()) missingness.assign(s_count, 0.0);

  Cohort cohort;
  cohort.modalities = spec.modalities;
  cohort.labels = spec.labels;
  cohort.roi_count = p;

  int subject_no = 0;
  for (std::size_t c = 0; c < spec.labels.size(); ++c) {
    for (int i = 0; i < spec.subjects_per_class[c]; ++i) {
      std::vector<double> z(spec.content_dim);
      for (int d = 0; d < spec.content_dim; ++d) {
        z[d] = truth.class_shift[c][d] + rng.normal();
      }

      std::vector<bool> present(s_count);
      bool any = false;
      int attempts = 0;
      do {
        if (++attempts > 100) {
          throw DataError("synth_cohort: could not draw a mask with at least "
                          "one present modality in 100 attempts");
        }
        any = false;
        for (int m = 0; m < s_count; ++m) {
          present[m] = rng.uniform() >= missingness[m];
          any = any || present[m];
        }
      } while (!any);

      SubjectRecord rec;
      char buf[16];
      std::snprintf(buf, sizeof(buf), "s%04d", subject_no++);
      rec.subject_id = buf;
      rec.label = static_cast<int>(c);
      rec.features.assign(s_count, std::nullopt);
      for (int m = 0; m < s_count; ++m) {
        if (!present[m]) continue;
        const StyleParams& st = truth.styles[m];
        std::vector<double> x(p);
        for (int r = 0; r < p; ++r) {
          double acc = st.offset[r];
          const double* row = st.scale.data() + static_cast<std::size_t>(r) * p;
          for (int d = 0; d < spec.content_dim; ++d) acc += row[d] * z[d];
          x[r] = acc;
        }
        if (st.noise_sd > 0.0) {
          for (double& v : x) v += st.noise_sd * rng.normal();
        }
        rec.features[m] = std::move(x);
      }
      cohort.subjects.push_back(std::move(rec));
      truth.content.push_back(std::move(z));
    }
  }
  cohort.validate();
  return {std::move(cohort), std::move(truth)};
}

std::vector<double> synth_class_mean(const SynthTruth& truth, const SynthSpec& spec,
                                     int modality, int cls) {
  const int p = spec.roi_count;
  const StyleParams& st = truth.styles.at(modality);
  const auto& shift = truth.class_shift.at(cls);
  std::vector<double> mean(p);
  for (int r = 0; r < p; ++r) {
    double acc = st.offset[r];
    const double* row = st.scale.data() + static_cast<std::size_t>(r) * p;
    for (int d = 0; d < spec.content_dim; ++d) acc += row[d] * shift[d];
    mean[r] = acc;
  }
  return mean;
}

using nlohmann::json;

SynthSpec synth_spec_from_json(const json& doc) {
  SynthSpec spec;
  try {
    if (doc.contains("modalities"))
      spec.modalities = doc["modalities"].get<std::vector<std::string>>();
    if (doc.contains("labels"))
      spec.labels = doc["labels"].get<std::vector<std::string>>();
    if (doc.contains("subjects_per_class"))
      spec.subjects_per_class = doc["subjects_per_class"].get<std::vector<int>>();
    spec.content_dim = doc.value("content_dim", spec.content_dim);
    spec.roi_count = doc.value("roi_count", spec.roi_count);
    if (doc.contains("missingness"))
      spec.missingness = doc["missingness"].get<std::vector<double>>();
    spec.seed = doc.value("seed", spec.seed);
    spec.style_mix = doc.value("style_mix", spec.style_mix);
    spec.style_gain_spread = doc.value("style_gain_spread", spec.style_gain_spread);
    spec.offset_scale = doc.value("offset_scale", spec.offset_scale);
    spec.noise_sd = doc.value("noise_sd", spec.noise_sd);
    spec.label_effect = doc.value("label_effect", spec.label_effect);
    spec.disease_dims = doc.value("disease_dims", spec.disease_dims);
    if (doc.contains("styles")) {
      for (const auto& s : doc["styles"]) {
        StyleParams st;
        st.scale = s.at("scale").get<std::vector<double>>();
        st.offset = s.at("offset").get<std::vector<double>>();
        st.noise_sd = s.value("noise_sd", 0.0);
        spec.styles.push_back(std::move(st));
      }
    }
    if (doc.contains("class_shift"))
      spec.class_shift =
          doc["class_shift"].get<std::vector<std::vector<double>>>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid synth spec: ") + e.what());
  }
  return spec;
}

json synth_spec_to_json(const SynthSpec& spec) {
  json doc{{"modalities", spec.modalities},
           {"labels", spec.labels},
           {"subjects_per_class", spec.subjects_per_class},
           {"content_dim", spec.content_dim},
           {"roi_count", spec.roi_count},
           {"missingness", spec.missingness},
           {"seed", spec.seed},
           {"style_mix", spec.style_mix},
           {"style_gain_spread", spec.style_gain_spread},
           {"offset_scale", spec.offset_scale},
           {"noise_sd", spec.noise_sd},
           {"label_effect", spec.label_effect},
           {"disease_dims", spec.disease_dims}};
  if (!spec.styles.empty()) {
    json styles = json::array();
    for (const auto& st : spec.styles) {
      styles.push_back(json{{"scale", st.scale},
                            {"offset", st.offset},
                            {"noise_sd", st.noise_sd}});
    }
    doc["styles"] = std::move(styles);
  }
  if (!spec.class_shift.empty()) doc["class_shift"] = spec.class_shift;
  return doc;
}

json synth_truth_to_json(const SynthTruth& truth) {
  json styles = json::array();
  for (const auto& st : truth.styles) {
    styles.push_back(json{
        {"scale", st.scale}, {"offset", st.offset}, {"noise_sd", st.noise_sd}});
  }
  return json{{"seed", truth.seed},
              {"content", truth.content},
              {"styles", std::move(styles)},
              {"class_shift", truth.class_shift}};
}

}  // namespace costyle::data
