#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace grdme {

struct MeanEstimate {
  double mean = 0;
  double stderr_ = 0;
  double variance = 0;  // unbiased sample variance
  std::size_t n = 0;
};

MeanEstimate estimate_mean(std::span<const double> samples);

// Two-sample z statistic |m1 - m2| / sqrt(se1^2 + se2^2).
double z_score(const MeanEstimate& a, const MeanEstimate& b);

struct SurvivalCurve {
  std::vector<double> t;
  std::vector<double> S;
  std::vector<double> stderr_;
};

// Fraction of samples strictly greater than each grid time, with binomial
// standard errors.
SurvivalCurve survival_curve(std::span<const double> samples, std::span<const double> grid);

// n points log-spaced on [t_min, t_max].
std::vector<double> log_grid(double t_min, double t_max, std::size_t n);
std::vector<double> linear_grid(double t_min, double t_max, std::size_t n);

}  // namespace grdme
