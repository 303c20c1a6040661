#include "grdme/micro_oracle.hpp"

#include <algorithm>
#include <array>
#include <boost/math/special_functions/bessel.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "grdme/errors.hpp"
#include "grdme/parallel.hpp"

namespace grdme {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();
constexpr double pi = std::numbers::pi;
constexpr int kSeriesTerms = 400;
constexpr std::size_t kGridPoints = 20001;
constexpr double kGridStart = 0.002;
constexpr double kCapFactor = 1e3;

MicroParams micro_of(const BdConfig& c) {
  if (std::isinf(c.k_a)) return MicroParams::infinite(c.sigma, c.D);
  return MicroParams::finite(c.sigma, c.D, c.k_a);
}

double ball_volume(double sigma, int d) {
  return d == 2 ? pi * sigma * sigma : 4.0 / 3.0 * pi * sigma * sigma * sigma;
}

// Intensity whose large-volume effective rate equals the reactive-boundary
// rate in 3D; the 2D start is the small-intensity limit.
double initial_lambda(const MicroParams& micro, int d) {
  if (d == 2) return micro.k_a / ball_volume(micro.sigma, d);
  const double q = micro.k_a / (4 * pi * micro.sigma * micro.D + micro.k_a);
  double lo = 1e-8, hi = 1e8;
  for (int i = 0; i < 200; ++i) {
    const double x = std::sqrt(lo * hi);
    (std::tanh(x) / x > 1 - q ? lo : hi) = x;
  }
  const double x = std::sqrt(lo * hi);
  return micro.D * x * x / (micro.sigma * micro.sigma);
}

using Vec = std::array<double, 3>;

double norm(const Vec& y, int d) {
  double s = 0;
  for (int i = 0; i < d; ++i) s += y[i] * y[i];
  return std::sqrt(s);
}

void random_direction(Vec& u, int d, std::normal_distribution<double>& g, Rng& rng) {
  for (;;) {
    for (int i = 0; i < d; ++i) u[i] = g(rng);
    const double n = norm(u, d);
    if (n > 1e-300) {
      for (int i = 0; i < d; ++i) u[i] /= n;
      return;
    }
  }
}

struct Outcome {
  double t = 0;
  bool reacted = false;
};

// Runs the separation from y until reaction, or in free space (L = 0)
// until it first reaches R.
Outcome simulate(const BdConfig& c, Vec y, double R, double t_cap, Rng& rng) {
  const int d = c.d;
  const bool periodic = R <= 0;
  const auto& exit_time = BallExitTime::get(d);
  std::normal_distribution<double> gauss;
  const double sd = std::sqrt(2 * c.D * c.dt);
  const double shell = c.shell_factor * sd;
  const double half = 0.5 * c.L;
  const double max_radius = 0.49 * c.L;
  Vec u{};
  auto wrap = [&] {
    if (!periodic) return;
    for (int i = 0; i < d; ++i) {
      if (y[i] >= half)
        y[i] -= c.L;
      else if (y[i] < -half)
        y[i] += c.L;
    }
  };
  double t = 0;
  for (;;) {
    const double r = norm(y, d);
    if (!periodic && R - r <= 1e-9 * R) return {t, false};
    const double gap = r - c.sigma;
    if (gap >= shell) {
      double rho = gap;
      if (periodic)
        rho = std::min(rho, max_radius);
      else
        rho = std::min(rho, R - r);
      t += rho * rho / c.D * exit_time.sample(rng);
      random_direction(u, d, gauss, rng);
      for (int i = 0; i < d; ++i) y[i] += rho * u[i];
      wrap();
    } else {
      if (r < c.sigma) {
        if (std::isinf(c.lambda_doi)) return {t, true};
        const double tau = exponential(rng, c.lambda_doi);
        if (tau < c.dt) return {t + tau, true};
      }
      for (int i = 0; i < d; ++i) y[i] += sd * gauss(rng);
      t += c.dt;
      wrap();
    }
    if (t > t_cap) {
      std::ostringstream os;
      os << "Brownian dynamics sample exceeded the cap of " << t_cap << " s";
      throw RuntimeCapError(os.str());
    }
  }
}

}  // namespace

BallExitTime::BallExitTime(int d) : d_(d) {
  check_dimension(d);
  for (int k = 1; k <= kSeriesTerms; ++k) {
    if (d == 3) {
      coef_.push_back(k % 2 ? 2.0 : -2.0);
      decay_.push_back(k * k * pi * pi);
    } else {
      const double j = boost::math::cyl_bessel_j_zero(0.0, k);
      coef_.push_back(2.0 / (j * std::cyl_bessel_j(1.0, j)));
      decay_.push_back(j * j);
    }
  }
  // beyond t_end the leading term alone is exact to double precision
  const double t_end = std::log(1e17 * std::abs(coef_[1] / coef_[0])) / (decay_[1] - decay_[0]);
  grid_.resize(kGridPoints);
  log_s_.resize(kGridPoints);
  for (std::size_t i = 0; i < kGridPoints; ++i) {
    grid_[i] = kGridStart + (t_end - kGridStart) * static_cast<double>(i) / (kGridPoints - 1);
    log_s_[i] = std::log(survival(grid_[i]));
    if (i > 0) log_s_[i] = std::min(log_s_[i], log_s_[i - 1]);
  }
}

double BallExitTime::survival(double t) const {
  if (t <= 0) return 1;
  double s = 0;
  for (std::size_t k = 0; k < coef_.size(); ++k) {
    const double e = decay_[k] * t;
    if (e > 745) break;
    s += coef_[k] * std::exp(-e);
  }
  return std::clamp(s, 0.0, 1.0);
}

double BallExitTime::sample(Rng& rng) const {
  const double ls = std::log1p(-uniform01(rng));
  if (ls <= log_s_.back()) return (std::log(coef_[0]) - ls) / decay_[0];
  if (ls >= log_s_.front()) return grid_.front();
  // log_s_ is nonincreasing
  const auto it = std::lower_bound(log_s_.begin(), log_s_.end(), ls, [](double a, double b) { return a > b; });
  const std::size_t i = static_cast<std::size_t>(it - log_s_.begin());
  const double l0 = log_s_[i - 1], l1 = log_s_[i];
  if (l0 == l1) return grid_[i];
  return grid_[i - 1] + (grid_[i] - grid_[i - 1]) * (l0 - ls) / (l0 - l1);
}

const BallExitTime& BallExitTime::get(int d) {
  static const BallExitTime two(2), three(3);
  check_dimension(d);
  return d == 2 ? two : three;
}

double max_bd_step(double sigma, double D) { return sigma * sigma / (100 * D); }

BdConfig BdConfig::make(const MicroParams& micro, double L, int d, double dt, double lambda_doi) {
  micro.validate();
  BdConfig c;
  c.d = d;
  c.L = L;
  c.sigma = micro.sigma;
  c.D = micro.D;
  c.k_a = micro.diffusion_limited ? inf : micro.k_a;
  c.dt = dt;
  c.lambda_doi = lambda_doi;
  c.validate();
  return c;
}

void BdConfig::validate() const {
  check_dimension(d);
  if (!(sigma > 0) || !(D > 0)) throw ConfigError("sigma and D must be positive");
  if (!(L > 2 * sigma)) throw ConfigError("L must exceed the contact diameter");
  if (!(k_a >= 0)) throw ConfigError("k_a must be >= 0");
  if (!(dt > 0)) throw ConfigError("dt must be positive");
  if (dt > max_bd_step(sigma, D) * (1 + 1e-12)) {
    std::ostringstream os;
    os << "dt: must be <= sigma^2/(100 D) = " << max_bd_step(sigma, D);
    throw ConfigError(os.str());
  }
  if (!(lambda_doi >= 0)) throw ConfigError("lambda_doi must be >= 0");
  if (!(shell_factor > 0)) throw ConfigError("shell_factor must be positive");
}

double sample_binding_time(const BdConfig& cfg, BdStart start, Rng& rng) {
  if (cfg.lambda_doi == 0) throw RuntimeCapError("zero reaction intensity: the pair never reacts");
  const double cap = kCapFactor * tau_micro(micro_of(cfg), cfg.L, cfg.d);
  Vec y{};
  if (start == BdStart::uniform) {
    for (int i = 0; i < cfg.d; ++i) y[i] = (uniform01(rng) - 0.5) * cfg.L;
  } else {
    std::normal_distribution<double> g;
    random_direction(y, cfg.d, g, rng);
    for (int i = 0; i < cfg.d; ++i) y[i] *= cfg.sigma;
  }
  return simulate(cfg, y, 0, cap, rng).t;
}

double sample_binding_time(const BdConfig& cfg, BdStart start, std::uint64_t seed) {
  Rng rng = make_stream(seed, 0);
  return sample_binding_time(cfg, start, rng);
}

std::vector<double> sample_binding_times(const BdConfig& cfg, BdStart start, std::size_t n, std::uint64_t seed,
                                         unsigned threads) {
  cfg.validate();
  std::vector<double> out(n);
  parallel_for(n, threads, [&](std::size_t i) {
    Rng rng = make_stream(seed, i);
    out[i] = sample_binding_time(cfg, start, rng);
  });
  return out;
}

bool reacts_before_escape(const BdConfig& cfg, double R, Rng& rng) {
  if (!(R > cfg.sigma)) throw ConfigError("escape radius must exceed sigma");
  Vec y{};
  std::normal_distribution<double> g;
  random_direction(y, cfg.d, g, rng);
  for (int i = 0; i < cfg.d; ++i) y[i] *= cfg.sigma;
  return simulate(cfg, y, R, inf, rng).reacted;
}

double contact_reaction_probability(const BdConfig& cfg, double R, std::size_t n, std::uint64_t seed,
                                    unsigned threads) {
  cfg.validate();
  if (n == 0) throw ConfigError("need at least one sample");
  std::vector<char> hit(n);
  parallel_for(n, threads, [&](std::size_t i) {
    Rng rng = make_stream(seed, i);
    hit[i] = reacts_before_escape(cfg, R, rng);
  });
  return static_cast<double>(std::count(hit.begin(), hit.end(), 1)) / static_cast<double>(n);
}

double robin_contact_reaction_probability(const MicroParams& micro, double R, int d) {
  micro.validate();
  check_dimension(d);
  if (!(R > micro.sigma)) throw ConfigError("escape radius must exceed sigma");
  if (micro.diffusion_limited) return 1;
  if (d == 3) {
    const double g = 1 / micro.sigma - 1 / R;
    return micro.k_a * g / (4 * pi * micro.D + micro.k_a * g);
  }
  const double g = std::log(R / micro.sigma);
  return micro.k_a * g / (2 * pi * micro.D + micro.k_a * g);
}

DoiCalibration calibrate_doi(const MicroParams& micro, double L, int d, double dt,
                             const DoiCalibrationOptions& options) {
  micro.validate();
  DoiCalibration out;
  if (micro.diffusion_limited) {
    out.lambda = inf;
    return out;
  }
  if (micro.k_a == 0) return out;
  if (options.samples < 100000) throw ConfigError("Doi rate calibration needs >= 1e5 samples per evaluation");
  BdConfig cfg = BdConfig::make(micro, L, d, dt);
  const bool binding = options.target == DoiTarget::binding_time;
  const double R = options.far_radius_factor * micro.sigma;
  // matched quantity: mean binding time, or the escape probability
  out.target = binding ? tau_micro(micro, L, d) : 1 - robin_contact_reaction_probability(micro, R, d);

  // residual increasing in lambda; the same streams at every lambda make
  // the estimate monotone
  double last = 0;
  auto residual = [&](double lambda, double& value) {
    cfg.lambda_doi = lambda;
    last = lambda;
    ++out.evaluations;
    if (binding) {
      const auto t = sample_binding_times(cfg, BdStart::uniform, options.samples, options.seed, options.threads);
      value = estimate_mean(t).mean;
      return out.target - value;
    }
    value = 1 - contact_reaction_probability(cfg, R, options.samples, options.seed, options.threads);
    return out.target - value;
  };
  auto converged = [&](double value) { return std::abs(value - out.target) <= options.tolerance * out.target; };

  double lo = initial_lambda(micro, d), hi = lo;
  double value = 0;
  double g = residual(lo, value);
  if (converged(value)) {
    out.lambda = lo;
    out.achieved = value;
    return out;
  }
  const double stiff = 1e3 / dt;
  if (g < 0) {
    do {
      lo = hi;
      hi *= 2;
      if (hi > stiff) {
        std::ostringstream os;
        os << "no bracketing Doi rate found: k_a is too large for dt = " << dt << "; use a smaller dt";
        throw ConfigError(os.str());
      }
      g = residual(hi, value);
    } while (g < 0 && !converged(value));
  } else {
    int steps = 0;
    do {
      hi = lo;
      lo /= 2;
      if (++steps > 80) throw ConfigError("no bracketing Doi rate found below the initial guess");
      g = residual(lo, value);
    } while (g > 0 && !converged(value));
  }
  if (converged(value)) {
    out.lambda = last;
    out.achieved = value;
    return out;
  }
  for (int it = 0; it < 60 && hi / lo > 1 + 1e-9; ++it) {
    const double mid = std::sqrt(lo * hi);
    g = residual(mid, value);
    out.lambda = mid;
    out.achieved = value;
    if (converged(value)) return out;
    (g < 0 ? lo : hi) = mid;
  }
  std::ostringstream os;
  os << "Doi rate calibration did not reach " << options.tolerance << " relative agreement (best "
     << out.achieved << " vs " << out.target << ")";
  throw Error(os.str());
}

double calibrate_doi_rate(const MicroParams& micro, double L, int d, double dt, const DoiCalibrationOptions& options) {
  return calibrate_doi(micro, L, d, dt, options).lambda;
}

SurvivalCurve rebinding_survival(const BdConfig& cfg, std::size_t n, std::span<const double> time_grid,
                                 std::uint64_t seed, unsigned threads) {
  if (n < 10000) throw ConfigError("rebinding survival needs n >= 1e4 samples");
  const auto samples = sample_binding_times(cfg, BdStart::contact, n, seed, threads);
  return survival_curve(samples, time_grid);
}

}  // namespace grdme
