#include "grdme/stats.hpp"

#include <algorithm>
#include <cmath>

#include "grdme/errors.hpp"

namespace grdme {

MeanEstimate estimate_mean(std::span<const double> samples) {
  MeanEstimate e;
  e.n = samples.size();
  if (e.n == 0) return e;
  // Welford
  double mean = 0, m2 = 0;
  std::size_t k = 0;
  for (double x : samples) {
    ++k;
    const double delta = x - mean;
    mean += delta / static_cast<double>(k);
    m2 += delta * (x - mean);
  }
  e.mean = mean;
  if (e.n > 1) {
    e.variance = m2 / static_cast<double>(e.n - 1);
    e.stderr_ = std::sqrt(e.variance / static_cast<double>(e.n));
  }
  return e;
}

double z_score(const MeanEstimate& a, const MeanEstimate& b) {
  const double se = std::sqrt(a.stderr_ * a.stderr_ + b.stderr_ * b.stderr_);
  const double diff = std::abs(a.mean - b.mean);
  if (se == 0) return diff == 0 ? 0 : INFINITY;
  return diff / se;
}

SurvivalCurve survival_curve(std::span<const double> samples, std::span<const double> grid) {
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  SurvivalCurve c;
  const double n = static_cast<double>(sorted.size());
  for (double t : grid) {
    const auto above = sorted.end() - std::upper_bound(sorted.begin(), sorted.end(), t);
    const double S = n > 0 ? static_cast<double>(above) / n : 1.0;
    c.t.push_back(t);
    c.S.push_back(S);
    c.stderr_.push_back(n > 0 ? std::sqrt(S * (1 - S) / n) : 0.0);
  }
  return c;
}

std::vector<double> log_grid(double t_min, double t_max, std::size_t n) {
  if (!(t_min > 0) || !(t_max > t_min)) throw ConfigError("log grid needs 0 < t_min < t_max");
  std::vector<double> g(n);
  if (n == 1) {
    g[0] = t_min;
    return g;
  }
  const double a = std::log(t_min), b = std::log(t_max);
  for (std::size_t i = 0; i < n; ++i)
    g[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
  g.front() = t_min;
  g.back() = t_max;
  return g;
}

std::vector<double> linear_grid(double t_min, double t_max, std::size_t n) {
  if (!(t_max >= t_min)) throw ConfigError("linear grid needs t_min <= t_max");
  std::vector<double> g(n);
  if (n == 1) {
    g[0] = t_min;
    return g;
  }
  for (std::size_t i = 0; i < n; ++i)
    g[i] = t_min + (t_max - t_min) * static_cast<double>(i) / static_cast<double>(n - 1);
  return g;
}

}  // namespace grdme
