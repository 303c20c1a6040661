#include <array>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <random>
#include <string>

#include "grdme/errors.hpp"
#include "grdme/meso_engine.hpp"
#include "grdme/parallel.hpp"

namespace grdme {

namespace {

constexpr double kCapFactor = 1e3;

const CompiledBimolecular& pair_reaction(const CompiledSystem& system) {
  if (system.bimolecular.size() != 1 || system.species.size() != 2)
    throw ConfigError("first-binding sampling needs a two-species pair system");
  return system.bimolecular.front();
}

double relative_D(const CompiledSystem& system) { return system.species[0].D + system.species[1].D; }

double time_cap(const CompiledSystem& system, Placement placement) {
  const double predicted = predicted_first_binding(system, placement);
  if (!std::isfinite(predicted))
    throw RuntimeCapError("predicted first-binding time is infinite; the pair never reacts");
  const double floor = system.mesh.N() * system.mesh.jump_time(relative_D(system));
  return kCapFactor * std::max(predicted, floor);
}

int class_of(const std::array<int, 3>& c, int d, int side) {
  int dist = 0;
  for (int i = 0; i < d && dist < 2; ++i) dist += std::min(c[i], side - c[i]);
  return std::min(dist, 2);
}

double gamma_sum(Rng& rng, std::uint64_t m, double mean) {
  if (m == 0 || mean == 0) return 0;
  std::gamma_distribution<double> g(static_cast<double>(m), mean);
  return g(rng);
}

// Separation of the two walkers performs a lattice walk with the summed
// diffusivity. Visits are counted per distance class (0, 1, >= 2); the
// holding times of each class are i.i.d. exponentials, so their sums are
// drawn once per class at the end.
double relative_walk(const CompiledSystem& system, Placement placement, Rng& rng) {
  const auto& rx = pair_reaction(system);
  const auto& mesh = system.mesh;
  const int d = mesh.d();
  const int side = mesh.side();
  const double tj = mesh.jump_time(relative_D(system));
  const double cap = time_cap(system, placement);
  const double k[2] = {rx.same_voxel, rx.neighbor};
  double te[2], p[2];
  for (int i = 0; i < 2; ++i) {
    te[i] = std::isinf(k[i]) ? 0 : 1 / (k[i] + 1 / tj);
    p[i] = std::isinf(k[i]) ? 1 : k[i] * te[i];
  }

  std::array<int, 3> c{0, 0, 0};
  if (placement == Placement::uniform_pair)
    for (int i = 0; i < d; ++i) c[i] = static_cast<int>(uniform_index(rng, static_cast<std::uint32_t>(side)));

  std::uint64_t m[3] = {0, 0, 0};
  double expected = 0;
  for (;;) {
    const int cls = class_of(c, d, side);
    ++m[cls];
    if (cls < 2) {
      expected += te[cls];
      if (p[cls] > 0 && (p[cls] >= 1 || uniform01(rng) < p[cls])) break;
    } else {
      expected += tj;
    }
    if (expected > cap) throw RuntimeCapError("first-binding sample exceeded " + std::to_string(cap) + " s");
    const int dir = static_cast<int>(uniform_index(rng, static_cast<std::uint32_t>(2 * d)));
    int& x = c[dir >> 1];
    x = (dir & 1) ? (x + 1 == side ? 0 : x + 1) : (x == 0 ? side - 1 : x - 1);
  }
  return gamma_sum(rng, m[2], tj) + gamma_sum(rng, m[1], te[1]) + gamma_sum(rng, m[0], te[0]);
}

double full_engine(const CompiledSystem& system, Placement placement, Rng& rng) {
  pair_reaction(system);
  const double cap = time_cap(system, placement);
  const auto n = static_cast<std::uint32_t>(system.mesh.voxels());
  VoxelState init(2);
  const std::uint32_t va = uniform_index(rng, n);
  const std::uint32_t vb = placement == Placement::same_voxel_pair ? va : uniform_index(rng, n);
  init.add(va, 0);
  init.add(vb, 1);
  RunOptions opt;
  opt.stop_at_first_association = true;
  const auto traj = run_trajectory(system, init, cap, {}, rng, opt);
  if (!traj.first_association)
    throw RuntimeCapError("first-binding sample exceeded " + std::to_string(cap) + " s");
  return *traj.first_association;
}

}  // namespace

CompiledSystem pair_system(const MicroParams& micro, const MeshSpec& mesh, RateModel model,
                           bool allow_unresolvable) {
  micro.validate();
  ReactionNetwork net;
  const int a = net.add_species("A", micro.D / 2, micro.sigma / 2);
  const int b = net.add_species("B", micro.D / 2, micro.sigma / 2);
  net.add_bimolecular(a, b, {}, micro.diffusion_limited ? 0 : micro.k_a, 0, micro.diffusion_limited);
  return compile(net, mesh, {model, allow_unresolvable});
}

double predicted_first_binding(const CompiledSystem& system, Placement placement) {
  const auto& rx = pair_reaction(system);
  const double D = relative_D(system);
  if (placement == Placement::same_voxel_pair) return tau_meso_rebind_predicted(rx.rates, system.mesh, D);
  return tau_meso_predicted(rx.rates, system.mesh, D);
}

double sample_first_binding(const CompiledSystem& system, Placement placement, Rng& rng,
                            FirstBindingMethod method) {
  if (method == FirstBindingMethod::full_engine) return full_engine(system, placement, rng);
  return relative_walk(system, placement, rng);
}

double sample_first_binding(const CompiledSystem& system, Placement placement, std::uint64_t seed,
                            FirstBindingMethod method) {
  Rng rng = make_stream(seed, 0);
  return sample_first_binding(system, placement, rng, method);
}

std::vector<double> sample_first_binding_ensemble(const CompiledSystem& system, Placement placement,
                                                  std::size_t n, std::uint64_t seed, unsigned threads,
                                                  FirstBindingMethod method) {
  std::vector<double> out(n);
  parallel_for(n, threads, [&](std::size_t i) {
    Rng rng = make_stream(seed, i);
    out[i] = sample_first_binding(system, placement, rng, method);
  });
  return out;
}

}  // namespace grdme
