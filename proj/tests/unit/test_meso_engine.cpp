#include <doctest.h>

#include <cmath>
#include <numeric>

#include "grdme/errors.hpp"
#include "grdme/lattice_fpt.hpp"
#include "grdme/meso_engine.hpp"
#include "grdme/network.hpp"
#include "grdme/stats.hpp"

using namespace grdme;

namespace {

CompiledSystem small_cascade(int side, RateModel model) {
  CascadeParams p;
  p.initial_S1 = 20;
  const auto mesh = MeshSpec::from_width(3, p.L, p.L / side);
  return compile(cascade_network(p), mesh, {model, true});
}

VoxelState cascade_start(const CompiledSystem& sys, Rng& rng) {
  VoxelState init(sys.species.size());
  place_uniform(init, sys.mesh, 0, 20, rng);
  return init;
}

}  // namespace

TEST_CASE("compile adds a calibrated reverse channel") {
  ReactionNetwork net;
  const int a = net.add_species("A", 1e-12, 0.5e-9);
  const int b = net.add_species("B", 1e-12, 0.5e-9);
  const int c = net.add_species("C", 1e-12, 1e-9);
  net.add_bimolecular(a, b, {c}, 1e-19, 3);
  const double h = 2 * h_star_inf(1e-9, 3);
  const auto sys = compile(net, MeshSpec::from_side(3, h, 10));
  REQUIRE(sys.bimolecular.size() == 1);
  REQUIRE(sys.unimolecular.size() == 1);
  CHECK(sys.unimolecular[0].reverse_of == 0);
  CHECK(sys.unimolecular[0].rate == doctest::Approx(sys.bimolecular[0].rates.k_d_meso));
  CHECK(sys.jump_intensity[a] == doctest::Approx(1e-12 / (h * h)));
  CHECK(sys.in_bimolecular[a]);
  CHECK(!sys.in_bimolecular[c]);
}

TEST_CASE("unresolvable meshes need an explicit override") {
  const auto micro = MicroParams::finite(1e-9, 1e-12, 1e-19);
  const auto mesh = MeshSpec::from_side(3, 0.5 * h_star_inf_g(1e-9, 3), 10);
  CHECK_THROWS_AS(pair_system(micro, mesh, RateModel::generalized, false), RegimeError);
  CHECK(pair_system(micro, mesh, RateModel::generalized, true).bimolecular[0].rates.unresolvable_warning);
}

TEST_CASE("standard model beyond its pole reacts instantaneously") {
  const auto micro = MicroParams::finite(1e-9, 1e-12, 1e-16);
  const auto mesh = MeshSpec::from_side(3, 0.5 * h_star_inf(1e-9, 3), 10);
  const auto sys = pair_system(micro, mesh, RateModel::standard);
  CHECK(sys.bimolecular[0].beyond_standard_pole);
  CHECK(std::isinf(sys.bimolecular[0].same_voxel));
  CHECK(sys.bimolecular[0].neighbor == 0);
}

TEST_CASE("identical seeds replay identical event streams") {
  const auto sys = small_cascade(20, RateModel::generalized);
  RunOptions opt;
  opt.record_events = true;
  const std::vector<double> times{0.1, 0.5};
  Rng r1 = make_stream(7, 0), r2 = make_stream(7, 0);
  const auto init = cascade_start(sys, r1);
  cascade_start(sys, r2);
  const auto a = run_trajectory(sys, init, 0.5, times, r1, opt);
  const auto b = run_trajectory(sys, init, 0.5, times, r2, opt);
  CHECK(a.event_count > 100);
  CHECK(a.events == b.events);
  CHECK(a.totals == b.totals);
  const auto c = run_trajectory(sys, init, 0.5, times, 8, opt);
  CHECK(c.events != a.events);
}

TEST_CASE("cascade conserves the S1 backbone under both models with audits") {
  for (auto model : {RateModel::generalized, RateModel::standard}) {
    const auto sys = small_cascade(25, model);
    RunOptions opt;
    opt.audit_every = 997;
    const auto times = linear_grid(0, 1, 11);
    for (std::uint64_t i = 0; i < 3; ++i) {
      Rng rng = make_stream(11, i);
      const auto init = cascade_start(sys, rng);
      const auto tr = run_trajectory(sys, init, 1.0, times, rng, opt);
      REQUIRE(tr.totals.size() == times.size());
      for (const auto& x : tr.totals) {
        CHECK(x[0] + x[1] + x[3] + x[4] + x[6] == 20);
        CHECK(x[1] == x[2]);
        CHECK(x[4] == x[5]);
        for (auto n : x) CHECK(n >= 0);
      }
    }
  }
}

TEST_CASE("voxel snapshots agree with species totals") {
  const auto sys = small_cascade(10, RateModel::generalized);
  RunOptions opt;
  opt.record_voxels = true;
  const std::vector<double> times{0.2, 0.4};
  Rng rng = make_stream(3, 0);
  const auto init = cascade_start(sys, rng);
  const auto tr = run_trajectory(sys, init, 0.4, times, rng, opt);
  REQUIRE(tr.snapshots.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) CHECK(tr.snapshots[i].totals() == tr.totals[i]);
}

TEST_CASE("event cap raises a runtime cap error") {
  const auto sys = small_cascade(20, RateModel::generalized);
  RunOptions opt;
  opt.max_events = 50;
  Rng rng = make_stream(1, 0);
  const auto init = cascade_start(sys, rng);
  const std::vector<double> times{1.0};
  CHECK_THROWS_AS(run_trajectory(sys, init, 1.0, times, rng, opt), RuntimeCapError);
}

TEST_CASE("full-engine first binding matches the exact lattice solve") {
  const double sigma = 1e-9, D = 1e-12, ka = 1e-10;
  const double h = 1.5 * h_star_inf_g(sigma, 2);
  const auto mesh = MeshSpec::from_side(2, h, 8);
  const auto sys = pair_system(MicroParams::finite(sigma, D, ka), mesh, RateModel::generalized);
  const auto lattice = build_torus(2, 8);
  const auto& rates = sys.bimolecular[0].rates;
  const double exact_uniform = mean_reaction_time_exact(lattice, rates, D, h, uniform_distribution(lattice));
  const double exact_same = reaction_times(lattice, rates, D, h)[0];
  const auto u = estimate_mean(
      sample_first_binding_ensemble(sys, Placement::uniform_pair, 20000, 21, 1, FirstBindingMethod::full_engine));
  const auto s = estimate_mean(
      sample_first_binding_ensemble(sys, Placement::same_voxel_pair, 20000, 22, 1, FirstBindingMethod::full_engine));
  CHECK(std::abs(u.mean - exact_uniform) < 4 * u.stderr_);
  CHECK(std::abs(s.mean - exact_same) < 4 * s.stderr_);
}

TEST_CASE("reversible pair spends the calibrated fraction of time bound") {
  // A + B <-> C, one pair in the box. By renewal, the bound fraction is
  // (1/k_d)/(1/k_d + tau0) with tau0 the same-voxel rebinding time, and
  // calibration makes tau0 = L^3/k_a.
  const double sigma = 1e-9, D = 1e-12, ka = 1e-19;
  const int side = 6;
  const double h = 1.5 * h_star_inf_g(sigma, 3);
  const auto mesh = MeshSpec::from_side(3, h, side);
  const double L3 = std::pow(mesh.L(), 3);
  const double kd = ka / L3;  // half bound at equilibrium

  ReactionNetwork net;
  const int a = net.add_species("A", D / 2, sigma / 2);
  const int b = net.add_species("B", D / 2, sigma / 2);
  const int c = net.add_species("C", D / 2, sigma);
  net.add_bimolecular(a, b, {c}, ka, kd);
  const auto sys = compile(net, mesh);
  REQUIRE(sys.bimolecular[0].rates.regime == Regime::generalized);

  const double cycle = 1 / kd + L3 / ka;
  const double t_end = 4000 * cycle;
  const auto times = linear_grid(0, t_end, 40001);
  VoxelState init(3);
  init.add(0, c);
  const auto tr = run_trajectory(sys, init, t_end, times, 5);
  std::vector<double> bound;
  for (const auto& x : tr.totals) {
    CHECK(x[a] + x[c] == 1);
    bound.push_back(static_cast<double>(x[c]));
  }
  // batch means over 40 windows of 100 cycles each
  std::vector<double> batches;
  for (std::size_t i = 0; i < 40; ++i)
    batches.push_back(std::accumulate(bound.begin() + i * 1000, bound.begin() + (i + 1) * 1000, 0.0) / 1000);
  const auto est = estimate_mean(batches);
  CHECK(std::abs(est.mean - 0.5) < 4 * est.stderr_ + 0.01);
}
