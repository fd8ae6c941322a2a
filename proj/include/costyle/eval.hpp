#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "costyle/baselines.hpp"
#include "costyle/imputer.hpp"

namespace costyle {

/// Signed standardized mean difference with pooled sample variance.
double cohens_d(std::span<const double> sample_a, std::span<const double> sample_b);

/// One generated target-modality vector attributed to its source modality.
struct GeneratedCell {
  int subject = 0;  // index into the actual cohort
  int cls = 0;
  int source = 0;
  int target = 0;
  std::vector<double> values;
};

/// Full-cross generation: for every ordered (source, target) pair, one
/// generated vector per subject with the source observed. This is the
/// distribution-comparison protocol; the diagonal pairs are included.
std::vector<GeneratedCell> cross_generate(const data::Cohort& cohort,
                                          const ContentModel& model,
                                          const std::vector<StylePair>& styles);
std::vector<GeneratedCell> cross_generate_pairwise(const data::Cohort& cohort,
                                                   const PairwiseModelSet& set);
/// Adapter from a plan-completed cohort plus its provenance records.
std::vector<GeneratedCell> generated_from_completion(
    const data::Cohort& completed, const std::vector<Provenance>& filled);

struct EffectSizeEntry {
  int source = 0;
  int target = 0;
  int cls = 0;
  bool valid = false;  // false when a stratum lacks samples or variance
  std::vector<double> abs_d;  // per ROI
  double mean_abs_d = 0.0;
};

struct EffectSizeTable {
  std::vector<EffectSizeEntry> entries;  // all S*S*C strata, fixed order
  /// Mean over valid entries; nullopt when none are valid.
  std::optional<double> overall_mean() const;
};

/// Per-(source, target, class) per-ROI |d| between generated values and the
/// real target-modality distribution of that class in the actual cohort.
EffectSizeTable effect_size_table(const data::Cohort& actual,
                                  const std::vector<GeneratedCell>& generated);

struct WeightedMetrics {
  double precision = 0.0;
  double recall = 0.0;
  bool zero_division = false;  // some class was never predicted
};
WeightedMetrics weighted_precision_recall(
    const std::vector<std::vector<long>>& confusion);

double accuracy_from_confusion(const std::vector<std::vector<long>>& confusion);

struct ClassifierHyper {
  int epochs = 500;
  double lr = 1e-3;
  double weight_decay = 0.01;
  int batch_size = 64;
};

struct ClassificationReport {
  std::string method;
  int depth = 0;
  int folds = 0;
  int generator_count = 0;
  std::vector<double> fold_accuracy;
  std::vector<double> fold_precision;
  std::vector<double> fold_recall;
  double accuracy_mean = 0.0, accuracy_std = 0.0;
  double precision_mean = 0.0, precision_std = 0.0;
  double recall_mean = 0.0, recall_std = 0.0;
};

/// Stratified k-fold CV of an MLP classifier on the concatenated modality
/// vectors of a fully observed cohort. `depth` counts all linear layers.
/// Metrics are snapshotted at the epoch with the best held-out loss.
ClassificationReport downstream_classify(const data::Cohort& completed, int depth,
                                         int k, std::uint64_t seed,
                                         const ClassifierHyper& hyper = {});

/// Classifier training on explicit train/eval splits of (possibly different)
/// completed cohorts; used by the benchmark driver. Returns the confusion
/// matrix on the eval set at the best-eval-loss epoch.
std::vector<std::vector<long>> train_eval_classifier(
    const data::Cohort& train, const data::Cohort& eval_set, int depth,
    std::uint64_t seed, const ClassifierHyper& hyper);

/// Writes effect_sizes.csv, classification.json and one per-ROI map CSV per
/// valid stratum. Returns the number of files written.
int emit_reports(const EffectSizeTable& table,
                 const std::vector<ClassificationReport>& reports,
                 const data::Cohort& cohort, const std::filesystem::path& out_dir);

nlohmann::json classification_report_to_json(const ClassificationReport& r);

}  // namespace costyle
