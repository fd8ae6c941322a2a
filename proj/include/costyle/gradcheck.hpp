#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace costyle::nn {

struct GradCheckResult {
  std::string name;
  double max_rel_err = 0.0;
  std::size_t checked_params = 0;
  // worst component, for diagnostics
  double worst_analytic = 0.0;
  double worst_fd = 0.0;
};

/// Central finite-difference check of every analytic gradient path used in
/// training, over reduced-width versions of the five network architectures
/// (extractor, label head, domain head, generator, discriminator).
/// Relative error uses an absolute floor of 1e-8.
std::vector<GradCheckResult> run_gradcheck(std::uint64_t seed = 7);

double max_rel_error(const std::vector<GradCheckResult>& results);

}  // namespace costyle::nn
