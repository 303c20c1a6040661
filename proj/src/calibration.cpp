#include "grdme/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>

#include "grdme/errors.hpp"

namespace grdme {

namespace {

constexpr double pi = std::numbers::pi;
constexpr double inf = std::numeric_limits<double>::infinity();

double ipow(double x, int d) {
  double v = 1;
  for (int i = 0; i < d; ++i) v *= x;
  return v;
}

void require_positive(double v, const char* name) {
  if (!(v > 0) || !std::isfinite(v)) {
    std::ostringstream os;
    os << name << " must be positive and finite (got " << v << ")";
    throw ConfigError(os.str());
  }
}

bool near(double a, double b) { return std::abs(a - b) <= kBoundaryTolerance * std::abs(b); }

}  // namespace

void check_dimension(int d) {
  if (d != 2 && d != 3)
    throw ConfigError("dimension must be 2 or 3 (got " + std::to_string(d) + ")");
}

MicroParams MicroParams::finite(double sigma, double D, double k_a, double k_d) {
  MicroParams m{sigma, D, k_a, k_d, false};
  m.validate();
  return m;
}

MicroParams MicroParams::infinite(double sigma, double D, double k_d) {
  MicroParams m{sigma, D, 0, k_d, true};
  m.validate();
  return m;
}

void MicroParams::validate() const {
  require_positive(sigma, "sigma");
  require_positive(D, "D");
  if (!diffusion_limited && (!(k_a >= 0) || !std::isfinite(k_a)))
    throw ConfigError("k_a must be finite and >= 0; use the diffusion-limited flag for k_a = inf");
  if (!(k_d >= 0) || !std::isfinite(k_d)) throw ConfigError("k_d must be finite and >= 0");
}

MeshSpec::MeshSpec(int d, double h, int side) : d_(d), h_(h), side_(side) {
  voxels_ = 1;
  for (int i = 0; i < d; ++i) voxels_ *= side;
}

MeshSpec MeshSpec::from_side(int d, double h, int side) {
  check_dimension(d);
  require_positive(h, "h");
  if (side < 3) throw ConfigError("h: L/h must be an integer >= 3 (got " + std::to_string(side) + ")");
  return MeshSpec(d, h, side);
}

MeshSpec MeshSpec::from_width(int d, double L, double h) {
  check_dimension(d);
  require_positive(L, "L");
  require_positive(h, "h");
  const double ratio = L / h;
  const double rounded = std::round(ratio);
  if (std::abs(ratio - rounded) > 1e-9 * ratio || rounded > 2e9) {
    std::ostringstream os;
    os << "h: L/h = " << ratio << " is not an integer";
    throw ConfigError(os.str());
  }
  return from_side(d, h, static_cast<int>(rounded));
}

double MeshSpec::voxel_volume() const { return ipow(h_, d_); }

double MeshSpec::jump_time(double D) const { return h_ * h_ / (2.0 * d_ * D); }

const char* regime_name(Regime regime) {
  switch (regime) {
    case Regime::standard: return "Standard";
    case Regime::generalized: return "Generalized";
    case Regime::unresolvable: return "Unresolvable";
  }
  return "?";
}

MesoRates MesoRates::split(int d, double k_a_meso, double r, double k_d_meso) {
  check_dimension(d);
  if (!(k_a_meso >= 0)) throw ConfigError("k_a_meso must be >= 0");
  if (!(r >= 0) || r > 1.0 / (2 * d) * (1 + 1e-15)) throw ConfigError("r must lie in [0, 1/(2d)]");
  MesoRates m;
  m.k_a_meso = k_a_meso;
  m.r = r;
  m.k_d_meso = k_d_meso;
  m.regime = r > 0 ? Regime::generalized : Regime::standard;
  const double same_frac = std::max(0.0, 1 - 2 * d * r);
  m.same_voxel = same_frac == 0 ? 0 : same_frac * k_a_meso;
  m.neighbor = r == 0 ? 0 : r * k_a_meso;
  return m;
}

MesoRates MesoRates::instantaneous(double k_d_meso) {
  MesoRates m;
  m.k_a_meso = inf;
  m.same_voxel = inf;
  m.k_d_meso = k_d_meso;
  return m;
}

double green_correction(double h, double sigma, int d) {
  check_dimension(d);
  require_positive(h, "h");
  require_positive(sigma, "sigma");
  if (d == 2)
    return std::log(h / (std::sqrt(pi) * sigma)) / (2 * pi) - 0.25 * (3 / (2 * pi) + kC2);
  return 1 / (4 * pi * sigma) - kC3 / (6 * h);
}

double rho_standard(const MicroParams& micro, const MeshSpec& mesh) {
  micro.validate();
  const double hd = mesh.voxel_volume();
  const double G = green_correction(mesh.h(), micro.sigma, mesh.d());
  if (micro.diffusion_limited) {
    if (!(G > 0) || near(mesh.h(), h_star_inf(micro.sigma, mesh.d())))
      throw RegimeError("diffusion-limited rate undefined below h*_inf");
    return micro.D / (hd * G);
  }
  if (micro.k_a == 0) return 0;
  const double bracket = 1 + micro.k_a / micro.D * G;
  if (!(bracket > 0)) {
    std::ostringstream os;
    os << "standard mesoscopic rate undefined at h = " << mesh.h()
       << " (1 + k_a G / D = " << bracket << " <= 0)";
    throw RegimeError(os.str());
  }
  return micro.k_a / hd / bracket;
}

double h_star_inf(double sigma, int d) {
  check_dimension(d);
  require_positive(sigma, "sigma");
  if (d == 2) return std::sqrt(pi) * std::exp((3 + 2 * pi * kC2) / 4) * sigma;
  return 2.0 / 3.0 * pi * kC3 * sigma;
}

double h_star_inf_g(double sigma, int d) {
  check_dimension(d);
  require_positive(sigma, "sigma");
  if (d == 2) return std::sqrt(pi) * std::exp((3 + 2 * pi * (kC2 - 1)) / 4) * sigma;
  return 2.0 / 3.0 * (kC3 - 1) * pi * sigma;
}

TauMicroTerms tau_micro_terms(const MicroParams& micro, double L, int d) {
  micro.validate();
  check_dimension(d);
  require_positive(L, "L");
  TauMicroTerms t;
  t.lambda = std::sqrt(pi) * micro.sigma / L;
  t.well_separated = L / micro.sigma >= 20;
  if (d == 2) {
    const double lam = t.lambda;
    if (lam >= 1) throw ConfigError("L too small for sigma: sqrt(pi) sigma / L >= 1");
    const double l2 = lam * lam;
    t.F_lambda = std::log(1 / lam) / ((1 - l2) * (1 - l2)) - (3 - l2) / (4 * (1 - l2));
    const double diffusive = t.F_lambda * L * L / (2 * pi * micro.D);
    if (micro.diffusion_limited) {
      t.alpha = inf;
      t.tau = diffusive;
    } else {
      t.alpha = micro.k_a / (2 * pi * micro.D);
      t.tau = micro.k_a == 0 ? inf : L * L / micro.k_a + diffusive;
    }
  } else {
    const double smol = 4 * pi * micro.sigma * micro.D;
    const double L3 = L * L * L;
    if (micro.diffusion_limited) {
      t.k_CK = smol;
      t.tau = L3 / smol;
    } else {
      t.k_CK = smol * micro.k_a / (smol + micro.k_a);
      t.tau = micro.k_a == 0 ? inf : L3 / micro.k_a + L3 / smol;
    }
  }
  return t;
}

double tau_micro(const MicroParams& micro, double L, int d) { return tau_micro_terms(micro, L, d).tau; }

double tau_micro_limit(double sigma, double D, double L, int d) {
  check_dimension(d);
  if (d == 2) return (std::log(L / (std::sqrt(pi) * sigma)) - 0.75) * L * L / (2 * pi * D);
  return L * L * L / (4 * pi * sigma * D);
}

double tau_micro_rebind(const MicroParams& micro, double L, int d) {
  micro.validate();
  check_dimension(d);
  require_positive(L, "L");
  if (micro.diffusion_limited) return 0;
  if (micro.k_a == 0) return inf;
  return ipow(L, d) / micro.k_a;
}

double q_factor(double h, double sigma, int d) {
  const double hg = h_star_inf_g(sigma, d);
  const double hs = h_star_inf(sigma, d);
  require_positive(h, "h");
  if (h <= hg * (1 + kBoundaryTolerance) || h > hs * (1 + kBoundaryTolerance)) {
    std::ostringstream os;
    os << "Q is defined only for h*_inf,g < h <= h*_inf (h = " << h << ", range (" << hg << ", "
       << hs << "])";
    throw RegimeError(os.str());
  }
  if (near(h, hs)) return 1;
  if (d == 2) return 1 / (2 / pi * std::log(h / hg));
  return 1 / ((kC3 - 1) * (h / hg - 1));
}

Regime regime_for(double h, double sigma, int d) {
  const double hs = h_star_inf(sigma, d);
  const double hg = h_star_inf_g(sigma, d);
  if (h >= hs || near(h, hs)) return Regime::standard;
  if (h >= hg || near(h, hg)) return Regime::generalized;
  return Regime::unresolvable;
}

namespace {

void set_fast_rebinding_flag(MesoRates& rates, const MeshSpec& mesh, double D) {
  const auto ts = derived_timescales(rates, mesh, D);
  const double tau1 = tau1_predicted(rates, mesh, D);
  rates.fast_rebinding_warning = std::isfinite(tau1) && ts.te0 >= 0.01 * tau1;
}

// r = 1/(2d) and k = k_a/h^d: the closed form at h*_inf,g.
MesoRates lower_bound_rates(const MicroParams& micro, const MeshSpec& mesh, Regime regime) {
  const int d = mesh.d();
  MesoRates m;
  m.regime = regime;
  m.r = 1.0 / (2 * d);
  m.k_d_meso = micro.k_d;
  m.same_voxel = 0;
  if (micro.diffusion_limited) {
    m.k_a_meso = inf;
    m.neighbor = inf;
  } else {
    m.k_a_meso = micro.k_a / mesh.voxel_volume();
    m.neighbor = m.k_a_meso / (2 * d);
  }
  return m;
}

}  // namespace

MesoRates generalized_rates(const MicroParams& micro, const MeshSpec& mesh, double Q) {
  micro.validate();
  if (!(Q >= 1) || !std::isfinite(Q)) throw RegimeError("Q must be finite and >= 1");
  const int d = mesh.d();
  const double h = mesh.h();
  const double D = micro.D;
  MesoRates m;
  m.regime = Regime::generalized;
  m.Q = Q;
  m.k_d_meso = micro.k_d;
  if (micro.diffusion_limited) {
    m.k_a_meso = inf;
    m.same_voxel = inf;
    m.neighbor = D * (Q - 1) / (h * h);
    return m;
  }
  const double K = micro.k_a / mesh.voxel_volume();
  const double A = K * h * h;             // k_a / h^(d-2)
  const double kj = 2 * d * D / (h * h);  // jump intensity
  m.r = D * Q * (Q - 1) / (2 * d * D * Q * Q + A);
  m.k_a_meso = (kj * Q * Q + K) / (kj * Q * Q + Q * K) * K;
  m.same_voxel = (1 - 2 * d * m.r) * m.k_a_meso;
  m.neighbor = m.r * m.k_a_meso;
  return m;
}

MesoRates calibrate(const MicroParams& micro, const MeshSpec& mesh) {
  micro.validate();
  const int d = mesh.d();
  const double h = mesh.h();
  const double hd = mesh.voxel_volume();
  const Regime regime = regime_for(h, micro.sigma, d);
  MesoRates m;
  m.regime = regime;

  if (!micro.diffusion_limited && micro.k_a == 0) {
    m.k_d_meso = micro.k_d;
    m.unresolvable_warning = regime == Regime::unresolvable;
    return m;
  }

  switch (regime) {
    case Regime::standard:
      if (micro.diffusion_limited) {
        m.k_a_meso = near(h, h_star_inf(micro.sigma, d)) ? inf : rho_standard(micro, mesh);
        m.k_d_meso = 0;
      } else {
        m.k_a_meso = rho_standard(micro, mesh);
        m.k_d_meso = hd * micro.k_d * m.k_a_meso / micro.k_a;
      }
      m.same_voxel = m.k_a_meso;
      break;
    case Regime::generalized:
      if (near(h, h_star_inf_g(micro.sigma, d)))
        m = lower_bound_rates(micro, mesh, regime);
      else
        m = generalized_rates(micro, mesh, q_factor(h, micro.sigma, d));
      break;
    case Regime::unresolvable:
      m = lower_bound_rates(micro, mesh, regime);
      m.unresolvable_warning = true;
      break;
  }
  set_fast_rebinding_flag(m, mesh, micro.D);
  return m;
}

DerivedTimescales derived_timescales(const MesoRates& rates, const MeshSpec& mesh, double D) {
  require_positive(D, "D");
  DerivedTimescales t;
  t.t_j = mesh.jump_time(D);
  t.p0 = rates.same_voxel > 0 ? 1 / rates.same_voxel : inf;
  t.p1 = rates.neighbor > 0 ? 1 / rates.neighbor : inf;
  t.te0 = 1 / (rates.same_voxel + 1 / t.t_j);
  t.te1 = 1 / (rates.neighbor + 1 / t.t_j);
  return t;
}

// N (1 + t_j k0) / (k0 + 2d k1 (1 + t_j k0)) with k0, k1 the same-voxel and
// per-neighbor intensities; equals ((p0 + t_j)/(p0 + 2d r t_j)) N/k.
double tau1_predicted(const MesoRates& rates, const MeshSpec& mesh, double D) {
  const double tj = mesh.jump_time(D);
  const double N = mesh.N();
  const int d = mesh.d();
  const double k0 = rates.same_voxel;
  const double k1 = rates.neighbor;
  if (std::isinf(k1)) return 0;
  if (std::isinf(k0)) return N * tj / (1 + 2 * d * tj * k1);
  const double den = k0 + 2 * d * k1 * (1 + tj * k0);
  if (den == 0) return inf;
  return N * (1 + tj * k0) / den;
}

double transit_steps_d0(const MeshSpec& mesh) {
  const double N = mesh.N();
  if (mesh.d() == 2) return N * std::log(N) / pi + kC2 * N;
  return kC3 * N;
}

double transit_steps_d1(const MeshSpec& mesh) { return transit_steps_d0(mesh) - mesh.N(); }

double tau_meso_predicted(const MesoRates& rates, const MeshSpec& mesh, double D) {
  return transit_steps_d1(mesh) * mesh.jump_time(D) + tau1_predicted(rates, mesh, D);
}

double tau_meso_rebind_predicted(const MesoRates& rates, const MeshSpec& mesh, double D) {
  const double tj = mesh.jump_time(D);
  const int d = mesh.d();
  const double k0 = rates.same_voxel;
  const double k1 = rates.neighbor;
  if (std::isinf(k0) || std::isinf(k1)) return 0;
  const double te0 = 1 / (k0 + 1 / tj);
  const double den = k0 + 2 * d * k1 * (1 + tj * k0);
  if (den == 0) return inf;
  return te0 + mesh.N() / den;
}

double resolution_error(const MicroParams& micro, const MeshSpec& mesh) {
  micro.validate();
  const double tj = mesh.jump_time(micro.D);
  const Regime regime = regime_for(mesh.h(), micro.sigma, mesh.d());
  const double steps = regime == Regime::standard ? transit_steps_d0(mesh) : transit_steps_d1(mesh);
  return std::abs(steps * tj - tau_micro_limit(micro.sigma, micro.D, mesh.L(), mesh.d()));
}

}  // namespace grdme
