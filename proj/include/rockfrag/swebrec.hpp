#pragma once

#include <array>
#include <span>

#include "rockfrag/distribution.hpp"

namespace rockfrag {

/// Swebrec curve P(<x) = 1 / (1 + [ln(x_max/x) / ln(x_max/x_50)]^b).
struct SwebrecParams {
  double x_max = 0.0;
  double x_50 = 0.0;
  double b = 0.0;

  bool valid() const noexcept { return x_50 > 0.0 && x_max > x_50 && b > 0.0; }
  void validate() const;  // throws InputError
  bool operator==(const SwebrecParams&) const = default;
};

struct FitResult {
  SwebrecParams params;
  double residual_rms = 0.0;  // passing-fraction units
  int iterations = 0;
  bool converged = false;
};

struct FitOptions {
  int max_iterations = 500;
  double step_tolerance = 1e-10;
  double residual_tolerance = 1e-12;
};

namespace swebrec {

/// Passing fraction at x; exactly 1 for x >= x_max.
double evaluate(const SwebrecParams& params, double x_mm);

/// Size at passing fraction p in (0, 1).
double invert(const SwebrecParams& params, double p);

/// Size below which a uniformly chosen unit of mass lies, for u in (0, 1).
double sample_size(const SwebrecParams& params, double u);

/// Unconstrained coordinates (log(x_max - x_50), log(x_50), log(b)).
std::array<double, 3> to_unconstrained(const SwebrecParams& params);
SwebrecParams from_unconstrained(const std::array<double, 3>& u);

/// d evaluate / d(unconstrained coordinates) at x.
std::array<double, 3> gradient(const SwebrecParams& params, double x_mm);

/// Least-squares fit in passing-fraction space. Throws InputError on fewer
/// than three distinct sizes or constant passing. Non-convergence is
/// reported through FitResult::converged.
FitResult fit(std::span<const SizePoint> points, const FitOptions& options = {});

/// Fit to the points of a distribution whose passing lies in (0, 1].
FitResult fit(const SizeDistribution& dist, const FitOptions& options = {});

CharacteristicSizes characteristic_sizes(const SwebrecParams& params);

}  // namespace swebrec
}  // namespace rockfrag
