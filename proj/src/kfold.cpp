#include "costyle/data/kfold.hpp"

namespace costyle::data {

std::vector<std::vector<int>> kfold_split(const Cohort& cohort, int k,
                                          std::uint64_t seed,
                                          bool stratify_by_label) {
  if (k < 2) throw ConfigError("kfold_split: k must be at least 2");
  const int n = static_cast<int>(cohort.subjects.size());
  if (n < k) throw DataError("kfold_split: fewer subjects than folds");

  Rng rng(seed);
  std::vector<std::vector<int>> groups;
  if (stratify_by_label) {
    const auto counts = cohort.class_counts();
    for (int c = 0; c < cohort.label_count(); ++c) {
      if (counts[c] > 0 && counts[c] < k) {
        throw DataError("kfold_split: class '" + cohort.labels[c] + "' has " +
                        std::to_string(counts[c]) + " subjects, need at least " +
                        std::to_string(k));
      }
    }
    groups.assign(cohort.label_count(), {});
    for (int i = 0; i < n; ++i) groups[cohort.subjects[i].label].push_back(i);
  } else {
    groups.emplace_back(n);
    for (int i = 0; i < n; ++i) groups[0][i] = i;
  }

  // Shuffle within each group, then deal with a running fold cursor so both
  // per-class and total fold sizes differ by at most one.
  std::vector<std::vector<int>> folds(k);
  int cursor = 0;
  for (auto& g : groups) {
    rng.shuffle(g);
    for (int idx : g) {
      folds[cursor % k].push_back(idx);
      ++cursor;
    }
  }
  return folds;
}

}  // namespace costyle::data
