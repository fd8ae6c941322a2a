#pragma once

#include <cstdint>
#include <vector>

#include "costyle/data/cohort.hpp"

namespace costyle::data {

/// Deterministic k-fold partition of subject indices. With stratification,
/// per-fold class counts differ from exact proportionality by at most one
/// subject.
std::vector<std::vector<int>> kfold_split(const Cohort& cohort, int k,
                                          std::uint64_t seed,
                                          bool stratify_by_label = true);

}  // namespace costyle::data
