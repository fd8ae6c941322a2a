#include "costyle/benchmark.hpp"

#include <algorithm>
#include <cmath>

#include "costyle/data/kfold.hpp"

namespace costyle {

using data::Cohort;
using data::StandardizationStats;

namespace {

struct SeedArtifacts {
  // everything an imputation method produced for one seed
  std::optional<Cohort> completed_incomplete;  // raw space
  std::vector<GeneratedCell> generated;        // standardized space
};

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace

BenchmarkReport run_benchmark(const Cohort& raw, const BenchmarkOptions& options) {
  raw.validate();
  for (const auto& m : options.methods) {
    if (m != "none" && m != "mean" && m != "cgan" && m != "wgan" && m != "ours") {
      throw ConfigError("unknown benchmark method '" + m + "'");
    }
  }
  if (options.seeds.empty()) throw ConfigError("benchmark needs at least one seed");

  const int s_count = raw.modality_count();
  const auto complete_idx = raw.complete_subjects();
  const auto incomplete_idx = raw.incomplete_subjects();

  const bool any_imputing =
      std::any_of(options.methods.begin(), options.methods.end(),
                  [](const std::string& m) { return m != "none"; });
  if (any_imputing && incomplete_idx.empty()) {
    throw DataError("benchmark: no incomplete subjects to fit imputers on");
  }
  if (options.classification && complete_idx.empty()) {
    throw DataError("benchmark: no complete subjects to evaluate on");
  }

  ImputationPlan plan;
  plan.strategy = options.strategy;
  plan.priority = options.priority.empty() ? default_plan(raw).priority
                                           : options.priority;

  const Cohort complete_raw = raw.subset(complete_idx);
  const Cohort incomplete_raw =
      incomplete_idx.empty() ? Cohort{} : raw.subset(incomplete_idx);

  BenchmarkReport report;
  report.modality_count = s_count;
  report.k = options.k;
  report.seeds = options.seeds;

  for (const auto& method : options.methods) {
    MethodBenchmark mb;
    mb.method = method;
    mb.generator_count =
        method == "ours" ? s_count
                         : (method == "cgan" || method == "wgan") ? s_count * s_count
                                                                  : 0;
    using Confusion = std::vector<std::vector<long>>;
    std::vector<std::vector<Confusion>> confusions_per_depth(options.depths.size());

    for (const std::uint64_t seed : options.seeds) {
      SeedArtifacts artifacts;

      if (method != "none") {
        // standardization and all generator training see only the
        // incomplete subjects
        const auto [incomplete_std, stats] = standardize(incomplete_raw);

        if (method == "mean") {
          const auto means = fit_class_means(incomplete_raw);
          artifacts.completed_incomplete =
              mean_impute(incomplete_raw, means).completed;
        } else if (method == "ours") {
          Phase1Hyper p1 = options.phase1;
          p1.seed = seed;
          const ContentModel content = train_content(incomplete_std, p1);
          std::vector<StylePair> styles;
          for (int t = 0; t < s_count; ++t) {
            Phase2Hyper p2 = options.phase2;
            p2.seed = seed + 101 * static_cast<std::uint64_t>(t + 1);
            styles.push_back(train_style(incomplete_std, content, t, p2));
          }
          artifacts.completed_incomplete = merge_fills_into_raw(
              incomplete_raw, impute_cohort(incomplete_std, content, styles, plan).completed,
              stats);
          if (options.effect_sizes) {
            const Cohort all_std = apply_standardization(raw, stats);
            artifacts.generated = cross_generate(all_std, content, styles);
            const auto table = effect_size_table(all_std, artifacts.generated);
            const auto overall = table.overall_mean();
            if (overall) mb.mean_abs_d_per_seed.push_back(*overall);
          }
        } else {  // cgan / wgan
          PairwiseHyper ph = options.pairwise;
          ph.seed = seed;
          const PairwiseModelSet set = train_pairwise_set(
              incomplete_std,
              method == "cgan" ? PairwiseKind::CGan : PairwiseKind::WGan, ph);
          artifacts.completed_incomplete = merge_fills_into_raw(
              incomplete_raw, pairwise_impute(incomplete_std, set, plan).completed,
              stats);
          if (options.effect_sizes) {
            const Cohort all_std = apply_standardization(raw, stats);
            artifacts.generated = cross_generate_pairwise(all_std, set);
            const auto table = effect_size_table(all_std, artifacts.generated);
            const auto overall = table.overall_mean();
            if (overall) mb.mean_abs_d_per_seed.push_back(*overall);
          }
        }
      }

      if (!options.classification) continue;
      const auto folds = data::kfold_split(complete_raw, options.k, seed);
      for (std::size_t di = 0; di < options.depths.size(); ++di) {
        for (int f = 0; f < options.k; ++f) {
          std::vector<int> train_idx;
          for (int g = 0; g < options.k; ++g) {
            if (g == f) continue;
            train_idx.insert(train_idx.end(), folds[g].begin(), folds[g].end());
          }
          Cohort train_cohort = complete_raw.subset(train_idx);
          if (artifacts.completed_incomplete) {
            for (const auto& subj : artifacts.completed_incomplete->subjects) {
              train_cohort.subjects.push_back(subj);
            }
          }
          const auto confusion = train_eval_classifier(
              train_cohort, complete_raw.subset(folds[f]), options.depths[di],
              seed + 1000 * static_cast<std::uint64_t>(f + 1) +
                  static_cast<std::uint64_t>(options.depths[di]),
              options.classifier);
          confusions_per_depth[di].push_back(confusion);
        }
      }
    }

    if (!mb.mean_abs_d_per_seed.empty()) {
      mb.mean_abs_d = mean_of(mb.mean_abs_d_per_seed);
    }
    for (std::size_t di = 0; di < options.depths.size(); ++di) {
      if (confusions_per_depth[di].empty()) continue;
      ClassificationReport r;
      r.method = method;
      r.depth = options.depths[di];
      r.folds = options.k;
      r.generator_count = mb.generator_count;
      for (const auto& confusion : confusions_per_depth[di]) {
        const auto metrics = weighted_precision_recall(confusion);
        r.fold_accuracy.push_back(accuracy_from_confusion(confusion));
        r.fold_precision.push_back(metrics.precision);
        r.fold_recall.push_back(metrics.recall);
      }
      r.accuracy_mean = mean_of(r.fold_accuracy);
      r.accuracy_std = std_of(r.fold_accuracy);
      r.precision_mean = mean_of(r.fold_precision);
      r.precision_std = std_of(r.fold_precision);
      r.recall_mean = mean_of(r.fold_recall);
      r.recall_std = std_of(r.fold_recall);
      mb.by_depth.push_back(std::move(r));
    }
    report.methods.push_back(std::move(mb));
  }
  return report;
}

using nlohmann::json;

json benchmark_report_to_json(const BenchmarkReport& report) {
  json methods = json::array();
  for (const auto& m : report.methods) {
    json entry{{"method", m.method},
               {"generator_count", m.generator_count},
               {"classification", json::array()}};
    if (m.mean_abs_d) {
      entry["mean_abs_cohens_d"] = *m.mean_abs_d;
      entry["mean_abs_cohens_d_per_seed"] = m.mean_abs_d_per_seed;
    }
    for (const auto& r : m.by_depth) {
      entry["classification"].push_back(classification_report_to_json(r));
    }
    methods.push_back(std::move(entry));
  }
  return json{{"modality_count", report.modality_count},
              {"k", report.k},
              {"seeds", report.seeds},
              {"methods", std::move(methods)}};
}

}  // namespace costyle
