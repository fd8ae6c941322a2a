#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "costyle/data/cohort.hpp"

namespace costyle::data {

/// Per-modality affine style: x = scale * pad(z) + offset + noise.
/// scale is P x P row-major; pad(z) zero-extends the content vector to P.
struct StyleParams {
  std::vector<double> scale;
  std::vector<double> offset;
  double noise_sd = 0.05;
};

struct SynthSpec {
  std::vector<std::string> modalities{"CT", "Tau", "FDG", "Abeta"};
  std::vector<std::string> labels{"CN", "EMCI", "LMCI"};
  std::vector<int> subjects_per_class{97, 87, 38};
  int content_dim = 16;
  int roi_count = 160;
  std::vector<double> missingness;               // per modality; empty = all 0
  std::vector<StyleParams> styles;               // empty = generated from seed
  std::vector<std::vector<double>> class_shift;  // empty = generated from seed
  std::uint64_t seed = 0;

  // knobs for the generated styles / shifts
  double style_mix = 0.5;         // off-diagonal mixing strength
  double style_gain_spread = 0.4; // per-modality gain variation
  double offset_scale = 1.0;
  double noise_sd = 0.05;         // used when styles are generated
  double label_effect = 2.0;      // class shift magnitude
  int disease_dims = -1;          // content dims carrying the label effect; -1 = all
};

/// Generative ground truth kept out of the cohort, for tests and audits.
struct SynthTruth {
  std::vector<std::vector<double>> content;  // per subject
  std::vector<StyleParams> styles;
  std::vector<std::vector<double>> class_shift;
  std::uint64_t seed = 0;
};

std::pair<Cohort, SynthTruth> synth_cohort(const SynthSpec& spec);

/// Analytic mean of modality m features for class c under the spec.
std::vector<double> synth_class_mean(const SynthTruth& truth, const SynthSpec& spec,
                                     int modality, int cls);

SynthSpec synth_spec_from_json(const nlohmann::json& doc);
nlohmann::json synth_spec_to_json(const SynthSpec& spec);
nlohmann::json synth_truth_to_json(const SynthTruth& truth);

}  // namespace costyle::data
