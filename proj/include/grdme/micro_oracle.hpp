#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "grdme/calibration.hpp"
#include "grdme/random.hpp"
#include "grdme/stats.hpp"

namespace grdme {

// Brownian dynamics of the separation vector of one A-B pair on a periodic
// box of width L. The pair reacts with intensity lambda_doi while the
// separation is below sigma.
struct BdConfig {
  int d = 3;
  double L = 0;
  double sigma = 0;
  double D = 0;
  double k_a = 0;
  double dt = 0;
  double lambda_doi = 0;  // +inf: react on the first step found inside
  // Gaussian steps are taken only within shell_factor*sqrt(2 D dt) of
  // contact; farther out the walker jumps to the boundary of the largest
  // ball that avoids the reactive region.
  double shell_factor = 5;

  static BdConfig make(const MicroParams& micro, double L, int d, double dt, double lambda_doi = 0);
  void validate() const;
};

// Largest step allowed by the contact geometry, sigma^2/(100 D).
double max_bd_step(double sigma, double D);

enum class BdStart { uniform, contact };

double sample_binding_time(const BdConfig& cfg, BdStart start, Rng& rng);
double sample_binding_time(const BdConfig& cfg, BdStart start, std::uint64_t seed);
std::vector<double> sample_binding_times(const BdConfig& cfg, BdStart start, std::size_t n, std::uint64_t seed,
                                         unsigned threads = 1);

// Contact start in free space: does the pair react before the separation
// first reaches R?
bool reacts_before_escape(const BdConfig& cfg, double R, Rng& rng);
double contact_reaction_probability(const BdConfig& cfg, double R, std::size_t n, std::uint64_t seed,
                                    unsigned threads = 1);
// The same probability for the reactive-boundary model.
double robin_contact_reaction_probability(const MicroParams& micro, double R, int d);

enum class DoiTarget {
  binding_time,    // uniform-start mean equals tau_micro
  contact_escape,  // reaction probability before 10 sigma matches the boundary model
};

struct DoiCalibrationOptions {
  DoiTarget target = DoiTarget::binding_time;
  std::size_t samples = 100000;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  double far_radius_factor = 10;
  double tolerance = 0.01;  // relative
};

struct DoiCalibration {
  double lambda = 0;
  double target = 0;
  double achieved = 0;
  int evaluations = 0;
};

DoiCalibration calibrate_doi(const MicroParams& micro, double L, int d, double dt,
                             const DoiCalibrationOptions& options = {});
double calibrate_doi_rate(const MicroParams& micro, double L, int d, double dt,
                          const DoiCalibrationOptions& options = {});

// Contact-start survival on time_grid; n >= 1e4.
SurvivalCurve rebinding_survival(const BdConfig& cfg, std::size_t n, std::span<const double> time_grid,
                                 std::uint64_t seed, unsigned threads = 1);

// Exit time from the unit ball of a standard (D = 1) Brownian motion
// started at the center.
class BallExitTime {
 public:
  explicit BallExitTime(int d);
  double survival(double t) const;
  double sample(Rng& rng) const;
  static const BallExitTime& get(int d);

 private:
  int d_;
  std::vector<double> coef_;
  std::vector<double> decay_;
  std::vector<double> grid_;
  std::vector<double> log_s_;
};

}  // namespace grdme
