#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "costyle/eval.hpp"

namespace costyle {

/// End-to-end comparison protocol:
///   - imputation models (content/style, pairwise GANs, class means) are fit
///     on the incomplete subjects only, so the downstream test data never
///     trains a generator;
///   - classification runs stratified k-fold CV over the complete subjects,
///     with each method's completed incomplete subjects added to the
///     training side;
///   - effect sizes compare full-cross generated distributions against the
///     real per-class distributions.
struct BenchmarkOptions {
  // any of: none, mean, cgan, wgan, ours
  std::vector<std::string> methods{"none", "mean", "cgan", "wgan", "ours"};
  std::vector<int> depths{2, 3, 4};
  int k = 5;
  std::vector<std::uint64_t> seeds{0};
  bool effect_sizes = true;
  bool classification = true;
  Phase1Hyper phase1;
  Phase2Hyper phase2;
  PairwiseHyper pairwise;
  ClassifierHyper classifier;
  FillStrategy strategy = FillStrategy::FirstAvailable;
  std::vector<int> priority;  // empty = cohort order
};

struct MethodBenchmark {
  std::string method;
  int generator_count = 0;
  std::vector<double> mean_abs_d_per_seed;
  std::optional<double> mean_abs_d;              // averaged over seeds
  std::vector<ClassificationReport> by_depth;    // folds pooled across seeds
};

struct BenchmarkReport {
  std::vector<MethodBenchmark> methods;
  int modality_count = 0;
  int k = 0;
  std::vector<std::uint64_t> seeds;
};

BenchmarkReport run_benchmark(const data::Cohort& raw, const BenchmarkOptions& options);

nlohmann::json benchmark_report_to_json(const BenchmarkReport& report);

}  // namespace costyle
