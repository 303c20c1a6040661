#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "grdme/calibration.hpp"

namespace grdme {

// Periodic Cartesian lattice. Voxel index = x + side*(y + side*z); voxel 0
// is the origin used for distance classes.
struct TorusLattice {
  int d = 0;
  int side = 0;
  std::int64_t N = 0;
  std::vector<std::int32_t> adjacency;  // N x 2d, direction order -x,+x,-y,+y,-z,+z
  std::vector<int> distance_class;

  std::span<const std::int32_t> neighbors(std::int64_t v) const {
    return {adjacency.data() + v * 2 * d, static_cast<std::size_t>(2 * d)};
  }
};

TorusLattice build_torus(int d, int side);

// Minimal number of jumps between two voxels.
int torus_distance(const TorusLattice& lattice, std::int64_t u, std::int64_t v);
std::vector<std::int32_t> voxels_at_distance(const TorusLattice& lattice, std::int64_t origin, int k);

std::vector<double> uniform_distribution(const TorusLattice& lattice);
std::vector<double> point_mass(const TorusLattice& lattice, std::int64_t voxel);

// Discrete-time mean number of jumps to hit `target`, per voxel (zero on
// the target set).
std::vector<double> hitting_steps(const TorusLattice& lattice, std::span<const std::int32_t> target);
double mean_hitting_steps(const TorusLattice& lattice, std::span<const double> start,
                          std::span<const std::int32_t> target);
double mean_return_steps(const TorusLattice& lattice, std::int64_t voxel);

// Mean reaction time per start voxel for the relative walk (per-direction
// jump intensity D/h^2) with sink rates.same_voxel at `origin` and
// rates.neighbor on each of its 2d neighbors. All entries are +inf when
// both sinks are off.
std::vector<double> reaction_times(const TorusLattice& lattice, const MesoRates& rates, double D,
                                   double h, std::int64_t origin = 0);
double mean_reaction_time_exact(const TorusLattice& lattice, const MesoRates& rates, double D,
                                double h, std::span<const double> start, std::int64_t origin = 0);

// Entry law on d2 after one jump out of a uniformly chosen d1 voxel,
// conditioned on landing in d2.
std::vector<double> d2_entry_distribution(const TorusLattice& lattice);

struct N21Result {
  double exact = 0;
  double uncorrected = 0;  // (N-2)/(2d-1)
  double corrected = 0;  // (N-2d-1)/(2d-1), counting the step into d2
};

N21Result n21_exact(const TorusLattice& lattice);

struct FptQuantities {
  double N0 = 0;
  double N1 = 0;
  double n21 = 0;
  double n00 = 0;
  double tau0 = 0;
  double tau1 = 0;
  double tau2 = 0;
  double tau_uniform = 0;
};

FptQuantities fpt_quantities(const TorusLattice& lattice, const MesoRates& rates, double D, double h);

}  // namespace grdme
