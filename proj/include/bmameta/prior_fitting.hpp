#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "bmameta/distributions.hpp"

namespace bmameta {

enum class FitTarget { EffectFamily, HeterogeneityFamily };
FitTarget parse_fit_target(std::string_view text);

struct FitInput {
  std::vector<double> values;
  FitTarget target = FitTarget::EffectFamily;
  double tau_floor = 0.01;
  std::size_t dropped = 0;
};

struct FitResult {
  PriorSpec spec;
  double log_likelihood = 0.0;
  std::size_t n_used = 0;
  bool converged = false;
  // Student-t fits whose df ran into the upper bound.
  bool normal_equivalent = false;
};

// Drops values <= floor (heterogeneity estimates that indicate a fixed effect).
FitInput filter_tau_estimates(const std::vector<double>& values, double floor = 0.01);

// Maximum likelihood fit. Effect targets take Normal or StudentT (both
// centred at 0); heterogeneity targets take HalfNormal, Gamma or InvGamma.
// Throws InsufficientDataError for fewer than 10 values and InvalidPriorError
// for a family that does not match the target. Non-convergence is reported
// through FitResult::converged rather than thrown; fit_family_strict throws
// NonConvergenceError instead.
FitResult fit_family(const FitInput& input, Family family);
FitResult fit_family_strict(const FitInput& input, Family family);

// Sum of log densities.
double log_likelihood(const PriorSpec& spec, const std::vector<double>& values);

inline constexpr double kMinStudentDf = 0.5;
inline constexpr double kMaxStudentDf = 100.0;

}  // namespace bmameta
