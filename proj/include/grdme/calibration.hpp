#pragma once

#include <cstdint>
#include <optional>

namespace grdme {

// Lattice constants of the random-walk return problem, to the precision
// they are commonly quoted.
inline constexpr double kC2 = 0.1951;
inline constexpr double kC3 = 1.5164;

// Relative tolerance used when comparing h against the critical sizes.
inline constexpr double kBoundaryTolerance = 1e-12;

void check_dimension(int d);

// Microscopic description of one A+B pair in relative coordinates.
struct MicroParams {
  double sigma = 0;  // sum of reaction radii (m)
  double D = 0;      // sum of diffusion constants (m^2/s)
  double k_a = 0;    // association rate (m^d/s); ignored when diffusion_limited
  double k_d = 0;    // dissociation rate (1/s)
  bool diffusion_limited = false;

  static MicroParams finite(double sigma, double D, double k_a, double k_d = 0);
  static MicroParams infinite(double sigma, double D, double k_d = 0);

  void validate() const;
};

// Cubic periodic mesh: side voxels of width h per dimension.
class MeshSpec {
 public:
  // L must be an integer multiple (>= 3) of h, within 1e-9 relative.
  static MeshSpec from_width(int d, double L, double h);
  static MeshSpec from_side(int d, double h, int side);

  int d() const { return d_; }
  double h() const { return h_; }
  double L() const { return h_ * side_; }
  int side() const { return side_; }
  std::int64_t voxels() const { return voxels_; }
  double N() const { return static_cast<double>(voxels_); }
  double voxel_volume() const;
  // Mean time between jumps of a walker with diffusivity D.
  double jump_time(double D) const;

 private:
  MeshSpec(int d, double h, int side);
  int d_;
  double h_;
  int side_;
  std::int64_t voxels_;
};

enum class Regime { standard, generalized, unresolvable };

const char* regime_name(Regime regime);

// Mesoscopic rates of one bimolecular reaction on a given mesh.
//
// same_voxel and neighbor are the per-pair channel intensities
// (1-2dr)k and r*k. They are stored explicitly because in the
// diffusion-limited limit k_a_meso is infinite and r vanishes while the
// neighbor intensity stays finite.
struct MesoRates {
  Regime regime = Regime::standard;
  double k_a_meso = 0;
  double r = 0;
  double k_d_meso = 0;
  std::optional<double> Q;
  double same_voxel = 0;
  double neighbor = 0;
  bool unresolvable_warning = false;
  // Set when the mean time to leave the reactive voxel is not small
  // compared to the neighbor-start reaction time.
  bool fast_rebinding_warning = false;

  // Rates from a total intensity and neighbor fraction.
  static MesoRates split(int d, double k_a_meso, double r, double k_d_meso = 0);
  // Same-voxel-only rates with an instantaneous reaction.
  static MesoRates instantaneous(double k_d_meso = 0);
};

struct DerivedTimescales {
  double t_j = 0;
  double p0 = 0;  // +inf when the same-voxel channel is off
  double p1 = 0;  // +inf when the neighbor channel is off
  double te0 = 0;
  double te1 = 0;
};

struct TauMicroTerms {
  double lambda = 0;   // sqrt(pi) sigma / L
  double alpha = 0;    // k_a/(2 pi D), 2D only
  double F_lambda = 0; // 2D geometry factor
  double k_CK = 0;     // Collins-Kimball rate, 3D only
  double tau = 0;
  bool well_separated = true;  // L/sigma >= 20
};

double green_correction(double h, double sigma, int d);
double rho_standard(const MicroParams& micro, const MeshSpec& mesh);
double h_star_inf(double sigma, int d);
double h_star_inf_g(double sigma, int d);

TauMicroTerms tau_micro_terms(const MicroParams& micro, double L, int d);
double tau_micro(const MicroParams& micro, double L, int d);
// Diffusion-limited mean binding time in the small-lambda form used to
// define the critical mesh sizes.
double tau_micro_limit(double sigma, double D, double L, int d);
double tau_micro_rebind(const MicroParams& micro, double L, int d);

double q_factor(double h, double sigma, int d);
Regime regime_for(double h, double sigma, int d);

MesoRates calibrate(const MicroParams& micro, const MeshSpec& mesh);
// Two-channel rates for a given Q >= 1, without any regime check.
MesoRates generalized_rates(const MicroParams& micro, const MeshSpec& mesh, double Q);

DerivedTimescales derived_timescales(const MesoRates& rates, const MeshSpec& mesh, double D);
// Approximate mean reaction time from a d1 voxel.
double tau1_predicted(const MesoRates& rates, const MeshSpec& mesh, double D);
double tau_meso_predicted(const MesoRates& rates, const MeshSpec& mesh, double D);
double tau_meso_rebind_predicted(const MesoRates& rates, const MeshSpec& mesh, double D);
// Mean number of jumps to reach the reactive voxel (d0) or its
// neighborhood (d1) from a uniform start, leading asymptotic terms.
double transit_steps_d0(const MeshSpec& mesh);
double transit_steps_d1(const MeshSpec& mesh);

double resolution_error(const MicroParams& micro, const MeshSpec& mesh);

}  // namespace grdme
