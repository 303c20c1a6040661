#include "grdme/meso_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <string>

#include "grdme/errors.hpp"

namespace grdme {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

}  // namespace

CompiledSystem compile(const ReactionNetwork& network, const MeshSpec& mesh, const CompileOptions& options) {
  CompiledSystem sys;
  sys.mesh = mesh;
  sys.model = options.model;
  sys.species = network.species();
  const double h2 = mesh.h() * mesh.h();
  for (const auto& s : sys.species) sys.jump_intensity.push_back(s.D / h2);
  sys.in_bimolecular.assign(sys.species.size(), false);

  for (const auto& u : network.unimolecular()) sys.unimolecular.push_back({u.reactant, u.products, u.rate, -1});

  for (std::size_t j = 0; j < network.bimolecular().size(); ++j) {
    const auto& r = network.bimolecular()[j];
    CompiledBimolecular c;
    c.a = r.a;
    c.b = r.b;
    c.products = r.products;
    c.micro = network.micro_params(r);
    if (options.model == RateModel::generalized) {
      c.rates = calibrate(c.micro, mesh);
      if (c.rates.regime == Regime::unresolvable && !options.allow_unresolvable) {
        std::ostringstream os;
        os << "reaction " << sys.species[r.a].name << " + " << sys.species[r.b].name
           << " is unresolvable at h = " << mesh.h() << " (h*_inf,g = "
           << h_star_inf_g(c.micro.sigma, mesh.d()) << ")";
        throw RegimeError(os.str());
      }
    } else {
      try {
        const double rho = rho_standard(c.micro, mesh);
        double k_d_meso = c.micro.k_d;
        if (c.micro.diffusion_limited)
          k_d_meso = 0;
        else if (c.micro.k_a > 0)
          k_d_meso = mesh.voxel_volume() * c.micro.k_d * rho / c.micro.k_a;
        c.rates = MesoRates::split(mesh.d(), rho, 0, k_d_meso);
      } catch (const RegimeError&) {
        c.rates = MesoRates::instantaneous(c.micro.k_d);
        c.beyond_standard_pole = true;
      }
      c.rates.regime = regime_for(mesh.h(), c.micro.sigma, mesh.d());
      c.rates.unresolvable_warning = c.beyond_standard_pole;
    }
    c.same_voxel = c.rates.same_voxel;
    c.neighbor = c.rates.neighbor;
    sys.in_bimolecular[r.a] = true;
    sys.in_bimolecular[r.b] = true;
    if (r.k_d > 0)
      sys.unimolecular.push_back({r.products.at(0), {r.a, r.b}, c.rates.k_d_meso, static_cast<int>(j)});
    sys.bimolecular.push_back(std::move(c));
  }
  return sys;
}

void VoxelState::add(std::int64_t voxel, int species, std::int64_t count) {
  if (species < 0 || static_cast<std::size_t>(species) >= species_count_)
    throw ConfigError("VoxelState: species index out of range");
  if (voxel < 0) throw ConfigError("VoxelState: negative voxel index");
  auto& c = counts_[{voxel, species}];
  c += count;
  if (c < 0) throw ConfigError("VoxelState: negative count");
  if (c == 0) counts_.erase({voxel, species});
}

std::int64_t VoxelState::count(std::int64_t voxel, int species) const {
  auto it = counts_.find({voxel, species});
  return it == counts_.end() ? 0 : it->second;
}

std::vector<std::int64_t> VoxelState::totals() const {
  std::vector<std::int64_t> t(species_count_, 0);
  for (const auto& [key, c] : counts_) t[key.second] += c;
  return t;
}

void place_uniform(VoxelState& state, const MeshSpec& mesh, int species, std::int64_t count, Rng& rng) {
  std::uniform_int_distribution<std::int64_t> pick(0, mesh.voxels() - 1);
  for (std::int64_t i = 0; i < count; ++i) state.add(pick(rng), species, 1);
}

namespace {

// Min-heap of slot indices keyed by next event time.
class EventHeap {
 public:
  void reset(std::size_t capacity) {
    heap_.clear();
    pos_.assign(capacity, -1);
    key_.assign(capacity, inf);
  }
  void ensure(std::size_t slot) {
    if (slot >= pos_.size()) {
      pos_.resize(slot + 1, -1);
      key_.resize(slot + 1, inf);
    }
  }
  bool contains(std::uint32_t slot) const { return slot < pos_.size() && pos_[slot] >= 0; }
  bool empty() const { return heap_.empty(); }
  std::uint32_t top() const { return heap_.front(); }
  double top_key() const { return key_[heap_.front()]; }
  double key(std::uint32_t slot) const { return key_[slot]; }

  void set(std::uint32_t slot, double key) {
    ensure(slot);
    key_[slot] = key;
    if (pos_[slot] < 0) {
      pos_[slot] = static_cast<int>(heap_.size());
      heap_.push_back(slot);
      up(pos_[slot]);
    } else {
      up(pos_[slot]);
      down(pos_[slot]);
    }
  }

  void remove(std::uint32_t slot) {
    const int i = pos_[slot];
    if (i < 0) return;
    const int last = static_cast<int>(heap_.size()) - 1;
    if (i != last) {
      heap_[i] = heap_[last];
      pos_[heap_[i]] = i;
    }
    heap_.pop_back();
    pos_[slot] = -1;
    if (i != last) {
      up(i);
      down(i);
    }
  }

 private:
  bool less(int i, int j) const {
    const double a = key_[heap_[i]], b = key_[heap_[j]];
    return a < b || (a == b && heap_[i] < heap_[j]);
  }
  void swap_at(int i, int j) {
    std::swap(heap_[i], heap_[j]);
    pos_[heap_[i]] = i;
    pos_[heap_[j]] = j;
  }
  void up(int i) {
    while (i > 0) {
      const int p = (i - 1) / 2;
      if (!less(i, p)) break;
      swap_at(i, p);
      i = p;
    }
  }
  void down(int i) {
    const int n = static_cast<int>(heap_.size());
    for (;;) {
      int m = i;
      const int l = 2 * i + 1, r = l + 1;
      if (l < n && less(l, m)) m = l;
      if (r < n && less(r, m)) m = r;
      if (m == i) break;
      swap_at(i, m);
      i = m;
    }
  }

  std::vector<std::uint32_t> heap_;
  std::vector<int> pos_;
  std::vector<double> key_;
};

struct LazyMolecule {
  std::uint32_t voxel;
  double t_last;
};

struct PartnerEntry {
  int reaction;
  int partner_active;  // active index of the partner species
};

class Simulator {
 public:
  Simulator(const CompiledSystem& sys, Rng& rng, const RunOptions& opt) : sys_(sys), rng_(rng), opt_(opt) {
    const auto& mesh = sys.mesh;
    d_ = mesh.d();
    side_ = static_cast<std::uint32_t>(mesh.side());
    N_ = static_cast<std::uint64_t>(mesh.voxels());
    if (N_ > (1ull << 28)) throw ConfigError("mesh too large for the event engine (more than 2^28 voxels)");
    stride_[0] = 1;
    stride_[1] = side_;
    stride_[2] = side_ * side_;
    const int S = static_cast<int>(sys.species.size());
    active_.assign(S, -1);
    for (int s = 0; s < S; ++s) {
      // species with no reaction at all never need a position unless snapshots are taken
      if (!opt.lazy_inert || sys.in_bimolecular[s]) {
        active_[s] = static_cast<int>(active_species_.size());
        active_species_.push_back(s);
      }
    }
    A_ = static_cast<int>(active_species_.size());
    B_ = static_cast<int>(sys.bimolecular.size());
    diffusion_coef_.resize(A_);
    for (int a = 0; a < A_; ++a) diffusion_coef_[a] = 2.0 * d_ * sys.jump_intensity[active_species_[a]];
    uni_by_species_.resize(S);
    uni_total_.assign(S, 0.0);
    for (std::size_t k = 0; k < sys.unimolecular.size(); ++k) {
      const auto& u = sys.unimolecular[k];
      uni_by_species_[u.reactant].push_back(static_cast<int>(k));
      uni_total_[u.reactant] += u.rate;
    }
    partners_.resize(S);
    for (int j = 0; j < B_; ++j) {
      const auto& r = sys.bimolecular[j];
      tracks_neighbor_.push_back(r.neighbor > 0);
      if (r.neighbor <= 0) continue;
      partners_[r.a].push_back({j, active_[r.b]});
      if (r.a != r.b) partners_[r.b].push_back({j, active_[r.a]});
    }
    lazy_.resize(S);
    totals_.assign(S, 0);
    slot_index_.assign(N_, 0);
    occupied_.assign(N_ / 64 + 1, 0);
    // slot 0 is the pool of lazily tracked molecules
    slot_voxel_.push_back(kPoolVoxel);
    slot_total_.push_back(0);
    counts_.resize(A_, 0);
    pairs_.resize(B_, 0);
    dirty_flag_.push_back(0);
    slot_rate_.push_back(0);
    slot_instant_.push_back(0);
    heap_.reset(1024);
  }

  Trajectory run(const VoxelState& init, double t_end, std::span<const double> sample_times) {
    if (!(t_end > 0)) throw ConfigError("t_end must be positive");
    for (std::size_t i = 1; i < sample_times.size(); ++i)
      if (sample_times[i] < sample_times[i - 1]) throw ConfigError("sample times must be nondecreasing");
    Trajectory out;
    t_ = 0;
    for (const auto& [key, c] : init.entries()) {
      if (key.first >= static_cast<std::int64_t>(N_)) throw ConfigError("initial state voxel out of range");
      if (static_cast<std::size_t>(key.second) >= sys_.species.size())
        throw ConfigError("initial state species out of range");
      for (std::int64_t i = 0; i < c; ++i) add_molecule(static_cast<std::uint32_t>(key.first), key.second);
    }
    flush();
    std::size_t next_sample = 0;
    std::uint64_t since_audit = 0;
    for (;;) {
      const double t_next = heap_.empty() ? inf : heap_.top_key();
      while (next_sample < sample_times.size() && sample_times[next_sample] < t_next &&
             sample_times[next_sample] <= t_end) {
        record(out, sample_times[next_sample]);
        ++next_sample;
      }
      if (t_next > t_end) break;
      t_ = t_next;
      fired_ = heap_.top();
      const bool association = fire(fired_, out);
      flush();
      ++out.event_count;
      if (opt_.max_events && out.event_count > opt_.max_events)
        throw RuntimeCapError("event cap exceeded at t = " + std::to_string(t_));
      if (opt_.audit_every && ++since_audit >= opt_.audit_every) {
        since_audit = 0;
        audit();
      }
      if (association && opt_.stop_at_first_association) {
        out.first_association = t_;
        out.t_final = t_;
        return out;
      }
    }
    out.t_final = std::min(t_end, heap_.empty() ? t_end : heap_.top_key());
    return out;
  }

  void audit() const;

 private:
  static constexpr std::uint32_t kPoolVoxel = std::numeric_limits<std::uint32_t>::max();
  static constexpr std::uint32_t kNoSlot = std::numeric_limits<std::uint32_t>::max();

  std::uint32_t neighbor(std::uint32_t v, int dir) const {
    const int ax = dir >> 1;
    const std::uint32_t st = stride_[ax];
    const std::uint32_t c = (v / st) % side_;
    if (dir & 1) return c == side_ - 1 ? v - (side_ - 1) * st : v + st;
    return c == 0 ? v + (side_ - 1) * st : v - st;
  }

  bool is_occupied(std::uint32_t v) const { return (occupied_[v >> 6] >> (v & 63)) & 1u; }

  std::uint32_t slot_of(std::uint32_t v) const { return slot_index_[v]; }

  std::uint32_t get_or_create(std::uint32_t v) {
    if (is_occupied(v)) return slot_index_[v];
    std::uint32_t s;
    if (!free_.empty()) {
      s = free_.back();
      free_.pop_back();
      slot_voxel_[s] = v;
      slot_total_[s] = 0;
      std::fill_n(counts_.begin() + static_cast<std::ptrdiff_t>(s) * A_, A_, 0);
      std::fill_n(pairs_.begin() + static_cast<std::ptrdiff_t>(s) * B_, B_, 0);
    } else {
      s = static_cast<std::uint32_t>(slot_voxel_.size());
      slot_voxel_.push_back(v);
      slot_total_.push_back(0);
      counts_.resize(counts_.size() + A_, 0);
      pairs_.resize(pairs_.size() + B_, 0);
      dirty_flag_.push_back(0);
      slot_rate_.push_back(0);
      slot_instant_.push_back(0);
    }
    slot_index_[v] = s;
    occupied_[v >> 6] |= 1ull << (v & 63);
    return s;
  }

  void mark(std::uint32_t slot) {
    if (!dirty_flag_[slot]) {
      dirty_flag_[slot] = 1;
      dirty_.push_back(slot);
    }
  }

  std::int64_t& count_ref(std::uint32_t slot, int a) { return counts_[static_cast<std::size_t>(slot) * A_ + a]; }
  std::int64_t count_at(std::uint32_t slot, int a) const { return counts_[static_cast<std::size_t>(slot) * A_ + a]; }
  std::int64_t& pair_ref(std::uint32_t slot, int j) { return pairs_[static_cast<std::size_t>(slot) * B_ + j]; }
  std::int64_t pair_at(std::uint32_t slot, int j) const { return pairs_[static_cast<std::size_t>(slot) * B_ + j]; }

  void change_active(std::uint32_t v, int s, int delta) {
    const int a = active_[s];
    const std::uint32_t slot = delta > 0 ? get_or_create(v) : slot_of(v);
    auto& c = count_ref(slot, a);
    c += delta;
    if (c < 0) throw Error("negative occupancy");
    slot_total_[slot] += delta;
    totals_[s] += delta;
    mark(slot);
    for (const auto& pe : partners_[s]) {
      for (int dir = 0; dir < 2 * d_; ++dir) {
        const std::uint32_t u = neighbor(v, dir);
        if (!is_occupied(u)) continue;
        const std::uint32_t su = slot_of(u);
        const std::int64_t np = count_at(su, pe.partner_active);
        if (np == 0) continue;
        const std::uint32_t owner = v < u ? slot : su;
        pair_ref(owner, pe.reaction) += delta * np;
        mark(owner);
      }
    }
  }

  void add_molecule(std::uint32_t v, int s) {
    if (active_[s] >= 0) {
      change_active(v, s, +1);
    } else {
      lazy_[s].push_back({v, t_});
      ++totals_[s];
      if (uni_total_[s] > 0) mark(0);
    }
  }

  std::int64_t same_pairs(std::uint32_t slot, int j) const {
    const auto& r = sys_.bimolecular[j];
    const std::int64_t na = count_at(slot, active_[r.a]);
    if (r.a == r.b) return na * (na - 1) / 2;
    return na * count_at(slot, active_[r.b]);
  }

  // Returns (propensity, instant).
  std::pair<double, bool> propensity(std::uint32_t slot) const {
    if (slot == 0) {
      double a = 0;
      for (std::size_t s = 0; s < lazy_.size(); ++s) a += static_cast<double>(lazy_[s].size()) * uni_total_[s];
      return {a, false};
    }
    double a = 0;
    bool instant = false;
    for (int k = 0; k < A_; ++k) {
      const auto n = static_cast<double>(count_at(slot, k));
      if (n == 0) continue;
      a += n * (diffusion_coef_[k] + uni_total_[active_species_[k]]);
    }
    for (int j = 0; j < B_; ++j) {
      const auto& r = sys_.bimolecular[j];
      if (r.same_voxel > 0) {
        const std::int64_t p = same_pairs(slot, j);
        if (p > 0) {
          if (std::isinf(r.same_voxel))
            instant = true;
          else
            a += static_cast<double>(p) * r.same_voxel;
        }
      }
      if (r.neighbor > 0) {
        const std::int64_t p = pair_at(slot, j);
        if (p > 0) {
          if (std::isinf(r.neighbor))
            instant = true;
          else
            a += static_cast<double>(p) * r.neighbor;
        }
      }
    }
    return {a, instant};
  }

  void flush() {
    for (std::uint32_t slot : dirty_) {
      dirty_flag_[slot] = 0;
      if (slot != 0 && slot_total_[slot] == 0) {
        heap_.remove(slot);
        const std::uint32_t v = slot_voxel_[slot];
        slot_index_[v] = 0;
        occupied_[v >> 6] &= ~(1ull << (v & 63));
        slot_rate_[slot] = 0;
        slot_instant_[slot] = 0;
        free_.push_back(slot);
        continue;
      }
      const auto [a, instant] = propensity(slot);
      double next;
      if (instant) {
        next = t_;
      } else if (!(a > 0)) {
        next = inf;
      } else if (slot != fired_ && !slot_instant_[slot] && slot_rate_[slot] > 0 && heap_.contains(slot)) {
        // unfired clock: rescale the residual waiting time
        next = t_ + (heap_.key(slot) - t_) * (slot_rate_[slot] / a);
      } else {
        next = t_ + exponential(rng_, a);
      }
      slot_rate_[slot] = a;
      slot_instant_[slot] = instant;
      heap_.set(slot, next);
    }
    dirty_.clear();
    fired_ = kNoSlot;
  }

  void place_products(std::uint32_t v, const std::vector<int>& products) {
    for (int p : products) add_molecule(v, p);
  }

  void log(Trajectory& out, EventKind kind, int channel, std::uint32_t v, std::int64_t other) {
    if (opt_.record_events) out.events.push_back({t_, kind, channel, v, other});
  }

  // Owned neighbor pair weight between slot (voxel v) and voxel u > v.
  std::int64_t neighbor_weight(int j, std::uint32_t slot, std::uint32_t su) const {
    const auto& r = sys_.bimolecular[j];
    const int aa = active_[r.a], ab = active_[r.b];
    if (r.a == r.b) return count_at(slot, aa) * count_at(su, aa);
    return count_at(slot, aa) * count_at(su, ab) + count_at(slot, ab) * count_at(su, aa);
  }

  void fire_neighbor(int j, std::uint32_t slot, Trajectory& out) {
    const std::uint32_t v = slot_voxel_[slot];
    const auto& r = sys_.bimolecular[j];
    std::int64_t total = 0;
    std::uint32_t cand[6];
    std::int64_t w[6];
    int m = 0;
    for (int dir = 0; dir < 2 * d_; ++dir) {
      const std::uint32_t u = neighbor(v, dir);
      if (u <= v || !is_occupied(u)) continue;
      const std::int64_t wt = neighbor_weight(j, slot, slot_of(u));
      if (wt == 0) continue;
      cand[m] = u;
      w[m] = wt;
      total += wt;
      ++m;
    }
    if (m == 0) throw Error("neighbor channel selected with no pairs");
    std::int64_t pick = static_cast<std::int64_t>(uniform01(rng_) * static_cast<double>(total));
    int k = 0;
    while (k < m - 1 && pick >= w[k]) pick -= w[k++];
    const std::uint32_t u = cand[k];
    const std::uint32_t su = slot_of(u);
    const int aa = active_[r.a], ab = active_[r.b];
    // orientation: A in v and B in u, or B in v and A in u
    std::uint32_t va = v, vb = u;
    if (r.a != r.b) {
      const std::int64_t w_ab = count_at(slot, aa) * count_at(su, ab);
      const std::int64_t w_ba = count_at(slot, ab) * count_at(su, aa);
      if (static_cast<double>(w_ab + w_ba) * uniform01(rng_) >= static_cast<double>(w_ab)) std::swap(va, vb);
    }
    change_active(va, r.a, -1);
    change_active(vb, r.b, -1);
    const std::uint32_t target = uniform01(rng_) < 0.5 ? v : u;
    place_products(target, r.products);
    log(out, EventKind::neighbor_association, j, v, u);
  }

  void fire_unimolecular_channel(int s, std::uint32_t v, Trajectory& out) {
    const auto& list = uni_by_species_[s];
    double x = uniform01(rng_) * uni_total_[s];
    int k = list.back();
    for (int idx : list) {
      if (x < sys_.unimolecular[idx].rate) {
        k = idx;
        break;
      }
      x -= sys_.unimolecular[idx].rate;
    }
    place_products(v, sys_.unimolecular[k].products);
    log(out, EventKind::unimolecular, k, v, -1);
  }

  void fire_pool(Trajectory& out) {
    double x = uniform01(rng_) * slot_rate_[0];
    int s = -1;
    for (std::size_t k = 0; k < lazy_.size(); ++k) {
      const double w = static_cast<double>(lazy_[k].size()) * uni_total_[k];
      if (w <= 0) continue;
      s = static_cast<int>(k);
      if (x < w) break;
      x -= w;
    }
    auto& list = lazy_[s];
    const std::size_t i = uniform_index(rng_, static_cast<std::uint32_t>(list.size()));
    const std::uint32_t v = materialize(s, list[i]);
    list[i] = list.back();
    list.pop_back();
    --totals_[s];
    mark(0);
    fire_unimolecular_channel(s, v, out);
  }

  // Samples the current voxel of a lazily tracked molecule.
  std::uint32_t materialize(int s, LazyMolecule& m) {
    const double mu = sys_.jump_intensity[s] * (t_ - m.t_last);
    m.t_last = t_;
    if (mu <= 0) return m.voxel;
    std::poisson_distribution<std::int64_t> pois(mu);
    std::uint32_t v = m.voxel;
    std::uint32_t out = 0;
    for (int ax = 0; ax < d_; ++ax) {
      const std::int64_t c = (v / stride_[ax]) % side_;
      const std::int64_t step = pois(rng_) - pois(rng_);
      std::int64_t nc = (c + step) % static_cast<std::int64_t>(side_);
      if (nc < 0) nc += side_;
      out += static_cast<std::uint32_t>(nc) * stride_[ax];
    }
    m.voxel = out;
    return out;
  }

  // Returns true when an association fired.
  bool fire(std::uint32_t slot, Trajectory& out) {
    if (slot == 0) {
      fire_pool(out);
      return false;
    }
    const std::uint32_t v = slot_voxel_[slot];
    if (slot_instant_[slot]) return fire_instant(slot, out);

    double x = uniform01(rng_) * slot_rate_[slot];
    for (int k = 0; k < A_; ++k) {
      const auto n = static_cast<double>(count_at(slot, k));
      if (n == 0) continue;
      const double wd = n * diffusion_coef_[k];
      if (x < wd) {
        const int s = active_species_[k];
        const int dir = static_cast<int>(uniform_index(rng_, 2 * d_));
        const std::uint32_t u = neighbor(v, dir);
        change_active(v, s, -1);
        change_active(u, s, +1);
        log(out, EventKind::diffusion, s, v, u);
        return false;
      }
      x -= wd;
      const double wu = n * uni_total_[active_species_[k]];
      if (wu > 0) {
        if (x < wu) {
          const int s = active_species_[k];
          change_active(v, s, -1);
          fire_unimolecular_channel(s, v, out);
          return false;
        }
        x -= wu;
      }
    }
    int last_same = -1, last_nbr = -1;
    for (int j = 0; j < B_; ++j) {
      const auto& r = sys_.bimolecular[j];
      if (r.same_voxel > 0) {
        const double w = static_cast<double>(same_pairs(slot, j)) * r.same_voxel;
        if (w > 0) {
          last_same = j;
          if (x < w) return fire_same(j, v, out);
          x -= w;
        }
      }
      if (r.neighbor > 0) {
        const double w = static_cast<double>(pair_at(slot, j)) * r.neighbor;
        if (w > 0) {
          last_nbr = j;
          if (x < w) {
            fire_neighbor(j, slot, out);
            return true;
          }
          x -= w;
        }
      }
    }
    // rounding fall-through: take the last channel with positive weight
    if (last_nbr >= 0) {
      fire_neighbor(last_nbr, slot, out);
      return true;
    }
    if (last_same >= 0) return fire_same(last_same, v, out);
    throw Error("event selection fell through with no channel");
  }

  bool fire_same(int j, std::uint32_t v, Trajectory& out) {
    const auto& r = sys_.bimolecular[j];
    change_active(v, r.a, -1);
    change_active(v, r.b, -1);
    place_products(v, r.products);
    log(out, EventKind::same_voxel_association, j, v, v);
    return true;
  }

  bool fire_instant(std::uint32_t slot, Trajectory& out) {
    const std::uint32_t v = slot_voxel_[slot];
    std::int64_t total = 0;
    for (int j = 0; j < B_; ++j) {
      const auto& r = sys_.bimolecular[j];
      if (std::isinf(r.same_voxel)) total += same_pairs(slot, j);
      if (std::isinf(r.neighbor)) total += pair_at(slot, j);
    }
    std::int64_t pick = static_cast<std::int64_t>(uniform01(rng_) * static_cast<double>(total));
    for (int j = 0; j < B_; ++j) {
      const auto& r = sys_.bimolecular[j];
      if (std::isinf(r.same_voxel)) {
        const std::int64_t w = same_pairs(slot, j);
        if (pick < w) return fire_same(j, v, out);
        pick -= w;
      }
      if (std::isinf(r.neighbor)) {
        const std::int64_t w = pair_at(slot, j);
        if (pick < w) {
          fire_neighbor(j, slot, out);
          return true;
        }
        pick -= w;
      }
    }
    throw Error("instant channel selection failed");
  }

  void record(Trajectory& out, double ts) {
    out.times.push_back(ts);
    out.totals.push_back(totals_);
    if (opt_.record_voxels) {
      VoxelState snap(sys_.species.size());
      for (std::size_t slot = 1; slot < slot_voxel_.size(); ++slot) {
        if (slot_total_[slot] == 0) continue;
        for (int k = 0; k < A_; ++k) {
          const auto c = count_at(static_cast<std::uint32_t>(slot), k);
          if (c) snap.add(slot_voxel_[slot], active_species_[k], c);
        }
      }
      const double saved = t_;
      t_ = ts;
      for (std::size_t s = 0; s < lazy_.size(); ++s)
        for (auto& m : lazy_[s]) snap.add(materialize(static_cast<int>(s), m), static_cast<int>(s), 1);
      t_ = saved;
      out.snapshots.push_back(std::move(snap));
    }
  }

  const CompiledSystem& sys_;
  Rng& rng_;
  RunOptions opt_;
  int d_ = 3;
  std::uint32_t side_ = 0;
  std::uint64_t N_ = 0;
  std::uint32_t stride_[3] = {1, 1, 1};
  int A_ = 0;
  int B_ = 0;
  std::vector<int> active_;
  std::vector<int> active_species_;
  std::vector<double> diffusion_coef_;
  std::vector<std::vector<int>> uni_by_species_;
  std::vector<double> uni_total_;
  std::vector<std::vector<PartnerEntry>> partners_;
  std::vector<bool> tracks_neighbor_;
  std::vector<std::vector<LazyMolecule>> lazy_;
  std::vector<std::int64_t> totals_;
  std::vector<std::uint32_t> slot_index_;  // voxel -> slot, 0 when empty
  std::vector<std::uint64_t> occupied_;
  std::vector<double> slot_rate_;
  std::vector<char> slot_instant_;
  std::uint32_t fired_ = kNoSlot;
  std::vector<std::uint32_t> slot_voxel_;
  std::vector<std::int64_t> slot_total_;
  std::vector<std::int64_t> counts_;
  std::vector<std::int64_t> pairs_;
  std::vector<char> dirty_flag_;
  std::vector<std::uint32_t> dirty_;
  std::vector<std::uint32_t> free_;
  EventHeap heap_;
  double t_ = 0;
};

void Simulator::audit() const {
  std::vector<std::int64_t> totals(sys_.species.size(), 0);
  for (std::size_t s = 0; s < lazy_.size(); ++s) totals[s] += static_cast<std::int64_t>(lazy_[s].size());
  for (std::uint32_t slot = 1; slot < slot_voxel_.size(); ++slot) {
    if (slot_voxel_[slot] == kPoolVoxel || !heap_.contains(slot)) continue;
    const std::uint32_t v = slot_voxel_[slot];
    std::int64_t sum = 0;
    for (int k = 0; k < A_; ++k) {
      sum += count_at(slot, k);
      totals[active_species_[k]] += count_at(slot, k);
    }
    if (sum != slot_total_[slot]) throw Error("audit: voxel total mismatch");
    for (int j = 0; j < B_; ++j) {
      if (!tracks_neighbor_[j]) continue;
      std::int64_t expect = 0;
      for (int dir = 0; dir < 2 * d_; ++dir) {
        const std::uint32_t u = neighbor(v, dir);
        if (u <= v || !is_occupied(u)) continue;
        expect += neighbor_weight(j, slot, slot_of(u));
      }
      if (expect != pair_at(slot, j)) throw Error("audit: neighbor pair count mismatch");
    }
  }
  if (totals != totals_) throw Error("audit: species totals mismatch");
}

}  // namespace

Trajectory run_trajectory(const CompiledSystem& system, const VoxelState& init, double t_end,
                          std::span<const double> sample_times, Rng& rng, const RunOptions& options) {
  if (init.species_count() != system.species.size())
    throw ConfigError("initial state has the wrong number of species");
  Simulator sim(system, rng, options);
  return sim.run(init, t_end, sample_times);
}

Trajectory run_trajectory(const CompiledSystem& system, const VoxelState& init, double t_end,
                          std::span<const double> sample_times, std::uint64_t seed, const RunOptions& options) {
  Rng rng = make_stream(seed, 0);
  return run_trajectory(system, init, t_end, sample_times, rng, options);
}

}  // namespace grdme
