#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "costyle/common.hpp"

namespace costyle::data {

struct SubjectRecord {
  std::string subject_id;
  int label = 0;
  // one optional feature vector per modality; nullopt marks a skipped scan
  std::vector<std::optional<std::vector<double>>> features;

  bool has(int modality) const { return features[modality].has_value(); }
  int observed_count() const;
};

struct StandardizationStats {
  // per (modality, roi); stddev == 0 marks a constant column
  std::vector<std::vector<double>> mean;
  std::vector<std::vector<double>> stddev;
};

struct Cohort {
  std::vector<std::string> modalities;
  std::vector<std::string> labels;
  int roi_count = 0;
  std::vector<SubjectRecord> subjects;
  std::optional<StandardizationStats> standardization;

  int modality_count() const { return static_cast<int>(modalities.size()); }
  int label_count() const { return static_cast<int>(labels.size()); }
  int modality_index(const std::string& name) const;  // -1 when absent
  int label_index(const std::string& name) const;
  std::vector<int> class_counts() const;
  bool fully_observed() const;

  /// Subjects with every modality present.
  std::vector<int> complete_subjects() const;
  /// Subjects with at least one missing modality.
  std::vector<int> incomplete_subjects() const;
  /// Copy restricted to the given subject indices (order preserved).
  Cohort subset(const std::vector<int>& subject_indices) const;

  void validate() const;
};

struct CsvOptions {
  // declared schemas; empty lists mean "discover in file order"
  std::vector<std::string> modalities;
  std::vector<std::string> labels;
};

/// Long-format CSV, one row per (subject, modality):
///   subject_id,label,modality,f000,...,f{P-1}
/// Missing modalities are absent rows. Values round-trip bit-exactly.
Cohort load_cohort(const std::filesystem::path& path, const CsvOptions& options = {});
void save_cohort(const Cohort& cohort, const std::filesystem::path& path);

/// Per-(modality, ROI) z-score over present values. Constant columns map to
/// zero and record a stddev of 0. Requires >= 2 present values per column.
std::pair<Cohort, StandardizationStats> standardize(const Cohort& cohort);
/// Applies previously computed stats (e.g. to held-out data).
Cohort apply_standardization(const Cohort& cohort, const StandardizationStats& stats);
Cohort inverse_standardize(const Cohort& cohort, const StandardizationStats& stats);

/// Shortest round-trip-exact decimal rendering used by all CSV writers.
std::string format_double(double v);

}  // namespace costyle::data
