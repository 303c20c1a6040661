#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "grdme/calibration.hpp"
#include "grdme/network.hpp"
#include "grdme/random.hpp"

namespace grdme {

enum class RateModel {
  generalized,  // calibrated two-channel rates
  standard,     // same-voxel only at the standard rate, on any mesh
};

struct CompileOptions {
  RateModel model = RateModel::generalized;
  bool allow_unresolvable = false;
};

struct CompiledBimolecular {
  int a = -1;
  int b = -1;
  std::vector<int> products;
  MicroParams micro;
  MesoRates rates;
  // Per-pair channel intensities; +inf marks an instantaneous channel.
  double same_voxel = 0;
  double neighbor = 0;
  // Standard model below its pole: the same-voxel reaction fires at once.
  bool beyond_standard_pole = false;
};

struct CompiledUnimolecular {
  int reactant = -1;
  std::vector<int> products;
  double rate = 0;
  int reverse_of = -1;  // bimolecular index when this is a calibrated dissociation
};

struct CompiledSystem {
  MeshSpec mesh = MeshSpec::from_side(3, 1, 3);
  RateModel model = RateModel::generalized;
  std::vector<Species> species;
  std::vector<double> jump_intensity;  // D/h^2 per direction, per species
  std::vector<CompiledBimolecular> bimolecular;
  std::vector<CompiledUnimolecular> unimolecular;
  std::vector<bool> in_bimolecular;  // species takes part in some A+B channel
};

CompiledSystem compile(const ReactionNetwork& network, const MeshSpec& mesh,
                       const CompileOptions& options = {});

// Sparse occupancy counts, ordered by (voxel, species).
class VoxelState {
 public:
  explicit VoxelState(std::size_t species_count) : species_count_(species_count) {}

  void add(std::int64_t voxel, int species, std::int64_t count = 1);
  std::int64_t count(std::int64_t voxel, int species) const;
  std::vector<std::int64_t> totals() const;
  std::size_t species_count() const { return species_count_; }
  const std::map<std::pair<std::int64_t, int>, std::int64_t>& entries() const { return counts_; }

 private:
  std::size_t species_count_;
  std::map<std::pair<std::int64_t, int>, std::int64_t> counts_;
};

// Places `count` molecules of `species` in independently uniform voxels.
void place_uniform(VoxelState& state, const MeshSpec& mesh, int species, std::int64_t count, Rng& rng);

enum class EventKind : std::uint8_t { diffusion, unimolecular, same_voxel_association, neighbor_association };

struct EventRecord {
  double t = 0;
  EventKind kind = EventKind::diffusion;
  int channel = -1;  // species for diffusion, reaction index otherwise
  std::int64_t voxel = -1;
  std::int64_t other = -1;  // destination or partner voxel
  bool operator==(const EventRecord&) const = default;
};

struct RunOptions {
  bool record_voxels = false;
  bool record_events = false;
  // Molecules of species with no bimolecular channel are not stepped
  // jump by jump; their position is drawn from the exact lattice
  // displacement law when needed.
  bool lazy_inert = true;
  bool stop_at_first_association = false;
  std::uint64_t audit_every = 0;  // 0 = never
  std::uint64_t max_events = 0;   // 0 = unlimited
};

struct Trajectory {
  std::vector<double> times;
  std::vector<std::vector<std::int64_t>> totals;  // [sample][species]
  std::vector<VoxelState> snapshots;
  std::vector<EventRecord> events;
  std::uint64_t event_count = 0;
  std::optional<double> first_association;
  double t_final = 0;
};

Trajectory run_trajectory(const CompiledSystem& system, const VoxelState& init, double t_end,
                          std::span<const double> sample_times, Rng& rng, const RunOptions& options = {});
Trajectory run_trajectory(const CompiledSystem& system, const VoxelState& init, double t_end,
                          std::span<const double> sample_times, std::uint64_t seed,
                          const RunOptions& options = {});

enum class Placement { uniform_pair, same_voxel_pair };
enum class FirstBindingMethod {
  relative_walk,  // embedded jump chain of the separation vector
  full_engine,    // both molecules simulated by run_trajectory
};

// Two species A (index 0) and B (index 1), each with half of micro.D and
// micro.sigma, reacting A + B -> 0.
CompiledSystem pair_system(const MicroParams& micro, const MeshSpec& mesh, RateModel model,
                           bool allow_unresolvable = true);

// Mean first-binding time the sampler is capped against (x1e3).
double predicted_first_binding(const CompiledSystem& system, Placement placement);

double sample_first_binding(const CompiledSystem& system, Placement placement, Rng& rng,
                            FirstBindingMethod method = FirstBindingMethod::relative_walk);
double sample_first_binding(const CompiledSystem& system, Placement placement, std::uint64_t seed,
                            FirstBindingMethod method = FirstBindingMethod::relative_walk);

// n samples using streams (seed, 0..n-1).
std::vector<double> sample_first_binding_ensemble(const CompiledSystem& system, Placement placement,
                                                  std::size_t n, std::uint64_t seed, unsigned threads = 1,
                                                  FirstBindingMethod method = FirstBindingMethod::relative_walk);

}  // namespace grdme
