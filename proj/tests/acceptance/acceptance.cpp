// Acceptance checks, one per criterion. Usage: acceptance [criterion] [realizations]
// Prints one PASS/FAIL line per criterion; exit status is nonzero on any FAIL.

#include <algorithm>
#include <cstdarg>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <string>
#include <vector>

#include "grdme/calibration.hpp"
#include "grdme/experiments.hpp"
#include "grdme/lattice_fpt.hpp"
#include "grdme/meso_engine.hpp"
#include "grdme/micro_oracle.hpp"
#include "grdme/stats.hpp"

using namespace grdme;

namespace {

struct Outcome {
  bool pass = true;

  void require(bool ok, const char* fmt, ...) __attribute__((format(printf, 3, 4)));
};

void Outcome::require(bool ok, const char* fmt, ...) {
  char buf[512];
  va_list args;
  va_start(args, fmt);
  std::vsnprintf(buf, sizeof buf, fmt, args);
  va_end(args);
  if (!ok) pass = false;
  std::printf("  %s %s\n", ok ? "ok  " : "FAIL", buf);
  std::fflush(stdout);
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

double joint_se(double a, double b) { return std::sqrt(a * a + b * b); }

MeshSpec mesh_in_regime(int d, double sigma, double fraction, int side) {
  // fraction 0 -> h*_inf, 1 -> h*_inf,g, log-spaced in between
  const double hs = h_star_inf(sigma, d), hg = h_star_inf_g(sigma, d);
  return MeshSpec::from_side(d, hs * std::pow(hg / hs, fraction), side);
}

double exact_uniform(const TorusLattice& lattice, const MesoRates& rates, double D, double h) {
  return mean_reaction_time_exact(lattice, rates, D, h, uniform_distribution(lattice));
}

// 1. Critical mesh constants.
Outcome critical_constants() {
  Outcome o;
  const double a = h_star_inf(1, 2), b = h_star_inf(1, 3), c = h_star_inf_g(1, 2), e = h_star_inf_g(1, 3);
  o.require(a >= 5.09 && a <= 5.11, "h*_inf(1,2) = %.6f in [5.09, 5.11]", a);
  o.require(b >= 3.17 && b <= 3.19, "h*_inf(1,3) = %.6f in [3.17, 3.19]", b);
  o.require(std::abs(c - 1.0599) <= 5e-4, "h*_inf,g(1,2) = %.6f, 1.0599 +- 5e-4", c);
  o.require(std::abs(e - 1.0815) <= 5e-4, "h*_inf,g(1,3) = %.6f, 1.0815 +- 5e-4", e);
  return o;
}

// 2. Zero of G and continuity of the two calibration branches.
Outcome branch_continuity() {
  Outcome o;
  for (int d : {2, 3}) {
    const double G = green_correction(h_star_inf(1, d), 1, d);
    o.require(std::abs(G) <= 1e-12, "d=%d G(h*_inf, 1) = %.3e", d, G);
    for (double ka : {d == 3 ? 1e-19 : 1e-11, d == 3 ? 1e-17 : 1e-9}) {
      const double sigma = 1e-9, D = 1e-12;
      const auto micro = MicroParams::finite(sigma, D, ka);
      const auto mesh = MeshSpec::from_side(d, h_star_inf(sigma, d), 16);
      const auto standard = calibrate(micro, mesh);
      const auto generalized = generalized_rates(micro, mesh, q_factor(mesh.h(), sigma, d));
      o.require(standard.regime == Regime::standard && rel(generalized.k_a_meso, standard.k_a_meso) <= 1e-9 &&
                    generalized.r < 1e-12,
                "d=%d k_a=%g: standard %.12e generalized %.12e (rel %.1e), r = %.1e", d, ka, standard.k_a_meso,
                generalized.k_a_meso, rel(generalized.k_a_meso, standard.k_a_meso), generalized.r);
      // approached from inside the generalized regime
      const auto below = MeshSpec::from_side(d, h_star_inf(sigma, d) * (1 - 1e-11), 16);
      const auto limit = calibrate(micro, below);
      o.require(limit.regime == Regime::generalized && rel(limit.k_a_meso, standard.k_a_meso) <= 1e-9 &&
                    limit.r < 1e-12,
                "d=%d k_a=%g at h*_inf(1 - 1e-11): k_a_meso rel %.1e, r = %.1e", d, ka,
                rel(limit.k_a_meso, standard.k_a_meso), limit.r);
    }
  }
  return o;
}

// 3. Mean return steps equal N.
Outcome kac_identity() {
  Outcome o;
  for (auto [d, side] : {std::pair{2, 64}, std::pair{3, 16}}) {
    const auto lattice = build_torus(d, side);
    const double N = static_cast<double>(lattice.N);
    const double m = mean_return_steps(lattice, 0);
    o.require(rel(m, N) <= 1e-9, "d=%d side=%d: return steps %.12f vs N=%g (rel %.1e)", d, side, m, N, rel(m, N));
  }
  return o;
}

// 4. Uniform-start hitting steps to d0 and d1 against their asymptotic forms.
Outcome hitting_asymptotics() {
  Outcome o;
  for (int side : {32, 64, 128}) {
    const auto lattice = build_torus(2, side);
    const auto mesh = MeshSpec::from_side(2, 1, side);
    const auto uniform = uniform_distribution(lattice);
    const std::int32_t origin[] = {0};
    const double n0 = mean_hitting_steps(lattice, uniform, origin);
    const double n1 = mean_hitting_steps(lattice, uniform, voxels_at_distance(lattice, 0, 1));
    const double r0 = n0 - transit_steps_d0(mesh), r1 = n1 - transit_steps_d1(mesh);
    o.require(std::abs(r0) <= 5 && std::abs(r1) <= 5, "2D N=%d: remainder d0 %.3f, d1 %.3f (<= 5)", side * side, r0,
              r1);
  }
  std::vector<double> scaled;
  for (int side : {8, 12, 16}) {
    const auto lattice = build_torus(3, side);
    const auto mesh = MeshSpec::from_side(3, 1, side);
    const auto uniform = uniform_distribution(lattice);
    const std::int32_t origin[] = {0};
    const double N = mesh.N();
    const double r0 = mean_hitting_steps(lattice, uniform, origin) - transit_steps_d0(mesh);
    const double r1 = mean_hitting_steps(lattice, uniform, voxels_at_distance(lattice, 0, 1)) - transit_steps_d1(mesh);
    scaled.push_back(std::abs(r0) / std::sqrt(N));
    scaled.push_back(std::abs(r1) / std::sqrt(N));
    std::printf("  info 3D N=%g: remainder/sqrt(N) d0 %.4f, d1 %.4f; remainder/N^(2/3) d0 %.4f\n", N,
                r0 / std::sqrt(N), r1 / std::sqrt(N), r0 / std::cbrt(N * N));
  }
  // bounded: the scaled remainder must not grow from the smallest to the largest side
  const bool not_growing = scaled[4] <= 1.05 * scaled[0] && scaled[5] <= 1.05 * scaled[1];
  o.require(not_growing, "3D |remainder|/sqrt(N) from N=512 to N=4096: d0 %.3f -> %.3f, d1 %.3f -> %.3f",
            scaled[0], scaled[4], scaled[1], scaled[5]);
  return o;
}

// 5. Exact mean binding and rebinding against the closed-form predictions.
Outcome tau_theorems() {
  Outcome o;
  const double sigma = 1e-9, D = 1e-12;
  struct Case {
    int d;
    double ka;
    double fraction;  // < 0: standard regime at 1.5 h*_inf
  };
  const Case cases[] = {{2, 1e-11, -1}, {2, 1e-9, -1}, {2, 1e-11, 0.5}, {2, 1e-9, 0.8},
                        {3, 1e-21, -1}, {3, 1e-20, -1}, {3, 1e-21, 0.5}, {3, 1e-20, 0.8}};
  for (const auto& c : cases) {
    const int side = 64;
    const auto mesh = c.fraction < 0 ? MeshSpec::from_side(c.d, 1.5 * h_star_inf(sigma, c.d), side)
                                     : mesh_in_regime(c.d, sigma, c.fraction, side);
    const auto rates = calibrate(MicroParams::finite(sigma, D, c.ka), mesh);
    const auto lattice = build_torus(c.d, side);
    const auto tau = reaction_times(lattice, rates, D, mesh.h());
    double uni = 0;
    for (double t : tau) uni += t;
    uni /= static_cast<double>(tau.size());
    const double pu = tau_meso_predicted(rates, mesh, D), p0 = tau_meso_rebind_predicted(rates, mesh, D);
    o.require(rel(uni, pu) <= 0.02 && rel(tau[0], p0) <= 0.02,
              "d=%d N=%lld k_a=%g %s: uniform %.5g vs %.5g (%.2f%%), same-voxel %.5g vs %.5g (%.2f%%)", c.d,
              static_cast<long long>(mesh.voxels()), c.ka, regime_name(rates.regime), uni, pu, 100 * rel(uni, pu),
              tau[0], p0, 100 * rel(tau[0], p0));
  }
  // Diffusion-dominated 3D pair: the deviation shrinks like h/L.
  for (int side : {32, 64}) {
    const auto mesh = mesh_in_regime(3, sigma, 0.5, side);
    const auto rates = calibrate(MicroParams::finite(sigma, D, 1e-19), mesh);
    const double uni = exact_uniform(build_torus(3, side), rates, D, mesh.h());
    std::printf("  info d=3 N=%d^3 k_a=1e-19 Generalized: uniform deviation %.2f%%\n", side,
                100 * rel(uni, tau_meso_predicted(rates, mesh, D)));
  }
  return o;
}

// 6. Calibrated rates reproduce the microscopic binding and rebinding means.
Outcome calibration_constraints() {
  Outcome o;
  const double sigma = 1e-9, D = 1e-12;
  for (int d : {2, 3}) {
    const double ka = d == 3 ? 1e-20 : 1e-11;
    const int side = d == 2 ? 128 : 64;
    const auto micro = MicroParams::finite(sigma, D, ka);
    const auto lattice = build_torus(d, side);
    for (int i = 0; i < 5; ++i) {
      const auto mesh = mesh_in_regime(d, sigma, 0.1 + 0.2 * i, side);
      const auto rates = calibrate(micro, mesh);
      const auto tau = reaction_times(lattice, rates, D, mesh.h());
      double uni = 0;
      for (double t : tau) uni += t;
      uni /= static_cast<double>(tau.size());
      const double tm = tau_micro(micro, mesh.L(), d), tr = tau_micro_rebind(micro, mesh.L(), d);
      o.require(rates.regime == Regime::generalized && rel(uni, tm) <= 0.02 && rel(tau[0], tr) <= 0.02,
                "d=%d h=%.4g: binding %.5g vs tau_micro %.5g (%.2f%%), rebinding %.5g vs L^d/k_a %.5g (%.2f%%)", d,
                mesh.h(), uni, tm, 100 * rel(uni, tm), tau[0], tr, 100 * rel(tau[0], tr));
    }
  }
  return o;
}

// 7. Simulated means agree with the exact solver.
Outcome ssa_exactness() {
  Outcome o;
  struct Case {
    int d, side;
    double h_factor;
    RateModel model;
    Placement placement;
  };
  const Case cases[] = {{2, 8, 0.6, RateModel::generalized, Placement::uniform_pair},
                        {2, 8, 1.5, RateModel::standard, Placement::same_voxel_pair},
                        {3, 5, 0.6, RateModel::generalized, Placement::same_voxel_pair},
                        {3, 5, 1.5, RateModel::standard, Placement::uniform_pair}};
  std::uint64_t seed = 700;
  for (const auto& c : cases) {
    const double sigma = 1e-9, D = 1e-12, ka = c.d == 3 ? 1e-19 : 1e-10;
    const auto mesh = MeshSpec::from_side(c.d, c.h_factor * h_star_inf(sigma, c.d), c.side);
    const auto sys = pair_system(MicroParams::finite(sigma, D, ka), mesh, c.model);
    const auto lattice = build_torus(c.d, c.side);
    const auto& rates = sys.bimolecular[0].rates;
    const double exact = c.placement == Placement::uniform_pair ? exact_uniform(lattice, rates, D, mesh.h())
                                                                : reaction_times(lattice, rates, D, mesh.h())[0];
    const auto est = estimate_mean(
        sample_first_binding_ensemble(sys, c.placement, 100000, ++seed, 1, FirstBindingMethod::full_engine));
    const double z = (est.mean - exact) / est.stderr_;
    o.require(std::abs(z) <= 3, "d=%d %s %s start: %.5g +- %.2g vs exact %.5g (z = %.2f)", c.d,
              regime_name(rates.regime), c.placement == Placement::uniform_pair ? "uniform" : "same-voxel", est.mean,
              est.stderr_, exact, z);
  }
  return o;
}

// 8. Rebinding with the 3D and 2D rebinding parameter sets.
Outcome rebinding() {
  Outcome o;
  struct Set {
    int d;
    double sigma, D, L, ka;
    int gen_side, coarse_side, std_side;
  };
  const Set sets[] = {{3, 2e-9, 2e-12, 5.145e-7, 1e-18, 100, 90, 82}, {2, 2e-9, 2e-14, 5.2e-7, 1e-12, 100, 60, 52}};
  std::uint64_t seed = 800;
  for (const auto& s : sets) {
    const auto micro = MicroParams::finite(s.sigma, s.D, s.ka);
    const double target = tau_micro_rebind(micro, s.L, s.d);

    // (a) two meshes inside the generalized regime
    for (int side : {s.gen_side, s.coarse_side}) {
      const auto mesh = MeshSpec::from_side(s.d, s.L / side, side);
      const auto sys = pair_system(micro, mesh, RateModel::generalized);
      const auto est =
          estimate_mean(sample_first_binding_ensemble(sys, Placement::same_voxel_pair, 100000, ++seed));
      const double z = (est.mean - target) / est.stderr_;
      o.require(sys.bimolecular[0].rates.regime == Regime::generalized && std::abs(z) <= 3,
                "(a) d=%d h=%.4g %s: gRDME rebinding %.5g +- %.2g vs L^d/k_a %.5g (z = %.2f)", s.d, mesh.h(),
                regime_name(sys.bimolecular[0].rates.regime), est.mean, est.stderr_, target, z);
    }

    // (b) standard model below h*_inf: finite rate and beyond its pole
    for (int side : {s.std_side, s.gen_side}) {
      const auto mesh = MeshSpec::from_side(s.d, s.L / side, side);
      const auto sys = pair_system(micro, mesh, RateModel::standard);
      const auto est =
          estimate_mean(sample_first_binding_ensemble(sys, Placement::same_voxel_pair, 100000, ++seed));
      const double deficit = target - est.mean;
      o.require(mesh.h() < h_star_inf(s.sigma, s.d) && deficit > 3 * est.stderr_,
                "(b) d=%d h=%.4g < h*_inf=%.4g%s: sRDME rebinding %.5g +- %.2g below %.5g by %.1f SE", s.d, mesh.h(),
                h_star_inf(s.sigma, s.d), sys.bimolecular[0].beyond_standard_pole ? " (beyond pole)" : "", est.mean,
                est.stderr_, target, est.stderr_ > 0 ? deficit / est.stderr_ : INFINITY);
    }

    // (c) particle model, contact start
    const double dt = max_bd_step(s.sigma, s.D) / 4;
    DoiCalibrationOptions opt;
    opt.target = DoiTarget::contact_escape;
    opt.seed = ++seed;
    opt.tolerance = 0.003;
    const auto cal = calibrate_doi(micro, s.L, s.d, dt, opt);
    const auto cfg = BdConfig::make(micro, s.L, s.d, dt, cal.lambda);
    const auto est = estimate_mean(sample_binding_times(cfg, BdStart::contact, 100000, ++seed));
    o.require(rel(est.mean, target) <= 0.05,
              "(c) d=%d Brownian dynamics (lambda=%.4g, dt=%.3g): contact-start mean %.5g +- %.2g vs %.5g (%.2f%%)",
              s.d, cal.lambda, dt, est.mean, est.stderr_, target, 100 * (est.mean / target - 1));
  }
  return o;
}

// 9. Convergence of the two-step cascade.
Outcome convergence(std::size_t realizations) {
  Outcome o;
  const CascadeParams params;
  const auto w = cascade_widths(params);
  // agreement to four significant digits: within half a unit of the fourth
  auto four_digits = [](double x, double ref) {
    const double unit = std::pow(10.0, std::floor(std::log10(std::abs(ref))) - 3);
    return std::abs(x - ref) <= 0.5 * unit;
  };
  o.require(four_digits(w.h1, 5.0815e-9), "h1 = %.6g (5.0815e-9)", w.h1);
  o.require(four_digits(w.h2, 1.1433e-8), "h2 = %.6g (1.1433e-8)", w.h2);
  o.require(four_digits(w.h2g, 3.8934e-9), "h2g = %.6g (3.8934e-9)", w.h2g);

  ConvergenceStudySpec spec;
  spec.params = params;
  for (double target : {1.25 * w.h2, w.h2, 0.75 * w.h2, 0.5 * w.h2, w.h1}) {
    // nearest width dividing L, kept >= h1 at the fine end
    int side = static_cast<int>(std::lround(params.L / target));
    if (params.L / side < w.h1) --side;
    spec.h_list.push_back(params.L / side);
  }
  spec.reference_h = params.L / std::floor(params.L / w.h2g);
  spec.n_realizations = realizations;
  spec.sample_times = default_sample_times();
  const auto t0 = std::chrono::steady_clock::now();
  const auto table = convergence_study(spec, 2024);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("  info %zu realizations per h, reference h=%.4g, %.0f s\n", realizations, table.reference.h, secs);
  for (std::size_t i = 0; i < table.generalized.size(); ++i)
    std::printf("  info h=%.4g  gRDME E=%.3f +- %.3f  sRDME E=%.3f +- %.3f\n", table.generalized[i].h,
                table.generalized[i].E, table.generalized[i].E_stderr, table.standard[i].E, table.standard[i].E_stderr);
  o.require(table.conservation_violations == 0, "conservation violations: %zu", table.conservation_violations);

  const auto& g = table.generalized;
  bool monotone = true;
  for (std::size_t i = 1; i < g.size(); ++i)
    monotone = monotone && g[i].E <= g[i - 1].E + 2 * joint_se(g[i].E_stderr, g[i - 1].E_stderr);
  o.require(monotone && g.back().E < g.front().E, "gRDME E(h) non-increasing within 2 joint SE as h decreases");

  const auto& s = table.standard;
  std::size_t k = 0;
  for (std::size_t i = 1; i < s.size(); ++i)
    if (s[i].E < s[k].E) k = i;
  const bool interior = k > 0 && k + 1 < s.size();
  const double rise = s.back().E - s[k].E;
  const double rise_se = joint_se(s.back().E_stderr, s[k].E_stderr);
  o.require(interior && rise > 2 * rise_se,
            "sRDME E(h) turns: minimum at h=%.4g (index %zu), rises by %.3f (%.1f joint SE) at the finest h",
            s[k].h, k, rise, rise_se > 0 ? rise / rise_se : 0.0);
  return o;
}

// 10. Above h*_inf the two models produce the same binding-time ensembles.
Outcome reduction() {
  Outcome o;
  std::uint64_t seed = 1000;
  for (int d : {2, 3}) {
    const double sigma = 1e-9, D = 1e-12, ka = d == 3 ? 1e-19 : 1e-10;
    const auto micro = MicroParams::finite(sigma, D, ka);
    for (double factor : {1.0, 1.5}) {
      const int side = d == 2 ? 20 : 10;
      const auto mesh = MeshSpec::from_side(d, factor * h_star_inf(sigma, d), side);
      const auto g = pair_system(micro, mesh, RateModel::generalized);
      const auto s = pair_system(micro, mesh, RateModel::standard);
      for (auto placement : {Placement::uniform_pair, Placement::same_voxel_pair}) {
        const auto eg = estimate_mean(sample_first_binding_ensemble(g, placement, 100000, ++seed));
        const auto es = estimate_mean(sample_first_binding_ensemble(s, placement, 100000, ++seed));
        const double z = z_score(eg, es);
        o.require(z <= 3, "d=%d h=%.2f h*_inf %s: gRDME %.5g +- %.2g, sRDME %.5g +- %.2g (z = %.2f)", d, factor,
                  placement == Placement::uniform_pair ? "uniform" : "same-voxel", eg.mean, eg.stderr_, es.mean,
                  es.stderr_, z);
      }
    }
  }
  return o;
}

const char* kNames[] = {"",
                        "critical mesh constants",
                        "zero of G and branch continuity",
                        "mean return steps equal N",
                        "hitting-step asymptotics",
                        "exact times match closed-form predictions",
                        "calibration reproduces microscopic means",
                        "simulated means match exact solver",
                        "rebinding study",
                        "convergence study",
                        "reduction above h*_inf"};

}  // namespace

int main(int argc, char** argv) {
  int only = argc > 1 ? std::atoi(argv[1]) : 0;
  const std::size_t realizations = argc > 2 ? std::strtoull(argv[2], nullptr, 10) : 48;
  const std::vector<std::function<Outcome()>> checks = {
      critical_constants, branch_continuity, kac_identity, hitting_asymptotics, tau_theorems,
      calibration_constraints, ssa_exactness, rebinding, [=] { return convergence(realizations); }, reduction};
  bool all = true;
  for (int i = 1; i <= 10; ++i) {
    if (only && i != only) continue;
    std::printf("criterion %d: %s\n", i, kNames[i]);
    std::fflush(stdout);
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = checks[i - 1]();
    } catch (const std::exception& e) {
      out.pass = false;
      std::printf("  FAIL exception: %s\n", e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s criterion %d: %s (%.1f s)\n", out.pass ? "PASS" : "FAIL", i, kNames[i], secs);
    std::fflush(stdout);
    all = all && out.pass;
  }
  return all ? 0 : 1;
}
