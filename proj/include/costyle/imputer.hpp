#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "costyle/phase2.hpp"

namespace costyle {

enum class FillStrategy { FirstAvailable, AverageOverSources };

std::string to_string(FillStrategy s);
FillStrategy fill_strategy_from_string(const std::string& s);

struct ImputationPlan {
  FillStrategy strategy = FillStrategy::FirstAvailable;
  // permutation of cohort modality indices, highest priority first
  std::vector<int> priority;
};

ImputationPlan default_plan(const data::Cohort& cohort);

/// One record per filled cell.
struct Provenance {
  std::string subject_id;
  int target = 0;
  FillStrategy strategy = FillStrategy::FirstAvailable;
  std::vector<int> sources;  // one entry for FirstAvailable, all observed otherwise
};

struct ImputationResult {
  data::Cohort completed;
  std::vector<Provenance> filled;
};

/// x_hat = G_t(E(x_source)).
std::vector<double> impute_one(const ContentModel& model, const StylePair& style,
                               std::span<const double> x_source);

/// Fills every missing cell; observed cells are copied bit-exactly.
ImputationResult impute_cohort(const data::Cohort& cohort, const ContentModel& model,
                               const std::vector<StylePair>& styles,
                               const ImputationPlan& plan);

/// Class-conditional per-ROI means, fit on a training cohort.
struct ClassMeans {
  // [class][modality][roi]
  std::vector<std::vector<std::vector<double>>> mean;
};
ClassMeans fit_class_means(const data::Cohort& training);
ImputationResult mean_impute(const data::Cohort& cohort, const ClassMeans& means);
ImputationResult mean_impute(const data::Cohort& cohort);

/// Copies the cells that were missing in `raw` out of the standardized
/// completion `filled_std`, mapped back to raw units; observed cells stay
/// bit-identical to `raw`.
data::Cohort merge_imputed_cells(const data::Cohort& raw,
                                 const data::Cohort& filled_std,
                                 const data::StandardizationStats& stats);

void save_provenance(const std::vector<Provenance>& filled,
                     const data::Cohort& cohort, const std::filesystem::path& path);
std::vector<Provenance> load_provenance(const std::filesystem::path& path,
                                        const data::Cohort& cohort);

}  // namespace costyle
