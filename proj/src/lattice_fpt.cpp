#include "grdme/lattice_fpt.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "grdme/errors.hpp"

namespace grdme {

namespace {

// Direct factorization fill-in grows much faster on 3D lattices.
constexpr std::int64_t kDirectLimit2d = 70000;
constexpr std::int64_t kDirectLimit3d = 8000;

using SpMat = Eigen::SparseMatrix<double>;

std::array<int, 3> coords(const TorusLattice& L, std::int64_t v) {
  std::array<int, 3> c{0, 0, 0};
  for (int i = 0; i < L.d; ++i) {
    c[i] = static_cast<int>(v % L.side);
    v /= L.side;
  }
  return c;
}

Eigen::VectorXd solve_spd(const SpMat& A, const Eigen::VectorXd& b, int d) {
  if (A.rows() <= (d == 2 ? kDirectLimit2d : kDirectLimit3d)) {
    Eigen::SimplicialLDLT<SpMat> ldlt(A);
    if (ldlt.info() != Eigen::Success) throw Error("sparse factorization failed");
    Eigen::VectorXd x = ldlt.solve(b);
    if (ldlt.info() != Eigen::Success) throw Error("sparse solve failed");
    return x;
  }
  Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper, Eigen::IncompleteCholesky<double>> cg;
  cg.setTolerance(1e-10);
  cg.setMaxIterations(static_cast<Eigen::Index>(20 * A.rows()));
  cg.compute(A);
  if (cg.info() != Eigen::Success) throw Error("preconditioner setup failed");
  Eigen::VectorXd x = cg.solve(b);
  if (cg.info() != Eigen::Success)
    throw Error("conjugate gradient did not converge (residual " + std::to_string(cg.error()) + ")");
  return x;
}

// Solves (2d + c_v) x_v - sum_{w free} x_w = rhs_v over free voxels, with
// x = 0 on voxels marked absorbing.
std::vector<double> solve_walk_system(const TorusLattice& L, const std::vector<char>& absorbing,
                                      const std::vector<double>& extra_diag, double rhs) {
  std::vector<std::int64_t> index(L.N, -1);
  std::int64_t n = 0;
  for (std::int64_t v = 0; v < L.N; ++v)
    if (!absorbing[v]) index[v] = n++;
  std::vector<double> result(L.N, 0.0);
  if (n == 0) return result;

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(n) * (2 * L.d + 1));
  for (std::int64_t v = 0; v < L.N; ++v) {
    if (index[v] < 0) continue;
    trip.emplace_back(index[v], index[v], 2.0 * L.d + extra_diag[v]);
    for (auto w : L.neighbors(v))
      if (index[w] >= 0) trip.emplace_back(index[v], index[w], -1.0);
  }
  SpMat A(n, n);
  A.setFromTriplets(trip.begin(), trip.end());
  Eigen::VectorXd b = Eigen::VectorXd::Constant(n, rhs);
  Eigen::VectorXd x = solve_spd(A, b, L.d);
  for (std::int64_t v = 0; v < L.N; ++v)
    if (index[v] >= 0) result[v] = x[index[v]];
  return result;
}

void check_distribution(const TorusLattice& L, std::span<const double> start) {
  if (static_cast<std::int64_t>(start.size()) != L.N)
    throw ConfigError("start distribution must have one entry per voxel");
  double total = 0;
  for (double p : start) {
    if (!(p >= 0)) throw ConfigError("start distribution has a negative entry");
    total += p;
  }
  if (std::abs(total - 1) > 1e-9) throw ConfigError("start distribution does not sum to 1");
}

double weighted(std::span<const double> start, const std::vector<double>& x) {
  double s = 0;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (start[i] != 0) s += start[i] * x[i];
  return s;
}

}  // namespace

TorusLattice build_torus(int d, int side) {
  check_dimension(d);
  if (side < 3) throw ConfigError("torus side must be >= 3 (got " + std::to_string(side) + ")");
  TorusLattice L;
  L.d = d;
  L.side = side;
  L.N = 1;
  for (int i = 0; i < d; ++i) L.N *= side;
  if (L.N > std::numeric_limits<std::int32_t>::max()) throw ConfigError("torus too large");
  L.adjacency.resize(static_cast<std::size_t>(L.N) * 2 * d);
  std::int64_t stride[3] = {1, side, static_cast<std::int64_t>(side) * side};
  for (std::int64_t v = 0; v < L.N; ++v) {
    const auto c = coords(L, v);
    for (int ax = 0; ax < d; ++ax) {
      const std::int64_t down = c[ax] == 0 ? v + (side - 1) * stride[ax] : v - stride[ax];
      const std::int64_t up = c[ax] == side - 1 ? v - (side - 1) * stride[ax] : v + stride[ax];
      L.adjacency[v * 2 * d + 2 * ax] = static_cast<std::int32_t>(down);
      L.adjacency[v * 2 * d + 2 * ax + 1] = static_cast<std::int32_t>(up);
    }
  }
  // breadth-first expansion from the origin
  L.distance_class.assign(L.N, -1);
  std::vector<std::int64_t> frontier{0};
  L.distance_class[0] = 0;
  for (int k = 1; !frontier.empty(); ++k) {
    std::vector<std::int64_t> next;
    for (auto v : frontier)
      for (auto w : L.neighbors(v))
        if (L.distance_class[w] < 0) {
          L.distance_class[w] = k;
          next.push_back(w);
        }
    frontier.swap(next);
  }
  return L;
}

int torus_distance(const TorusLattice& L, std::int64_t u, std::int64_t v) {
  const auto a = coords(L, u), b = coords(L, v);
  int dist = 0;
  for (int i = 0; i < L.d; ++i) {
    const int diff = std::abs(a[i] - b[i]);
    dist += std::min(diff, L.side - diff);
  }
  return dist;
}

std::vector<std::int32_t> voxels_at_distance(const TorusLattice& L, std::int64_t origin, int k) {
  std::vector<std::int32_t> out;
  for (std::int64_t v = 0; v < L.N; ++v)
    if (torus_distance(L, origin, v) == k) out.push_back(static_cast<std::int32_t>(v));
  return out;
}

std::vector<double> uniform_distribution(const TorusLattice& L) {
  return std::vector<double>(L.N, 1.0 / static_cast<double>(L.N));
}

std::vector<double> point_mass(const TorusLattice& L, std::int64_t voxel) {
  std::vector<double> p(L.N, 0.0);
  p.at(voxel) = 1.0;
  return p;
}

std::vector<double> hitting_steps(const TorusLattice& L, std::span<const std::int32_t> target) {
  if (target.empty()) throw ConfigError("target set must be nonempty");
  std::vector<char> absorbing(L.N, 0);
  for (auto t : target) absorbing.at(t) = 1;
  return solve_walk_system(L, absorbing, std::vector<double>(L.N, 0.0), 2.0 * L.d);
}

double mean_hitting_steps(const TorusLattice& L, std::span<const double> start,
                          std::span<const std::int32_t> target) {
  check_distribution(L, start);
  return weighted(start, hitting_steps(L, target));
}

double mean_return_steps(const TorusLattice& L, std::int64_t voxel) {
  const std::int32_t t[] = {static_cast<std::int32_t>(voxel)};
  const auto steps = hitting_steps(L, t);
  double s = 0;
  for (auto w : L.neighbors(voxel)) s += steps[w];
  return 1 + s / (2 * L.d);
}

std::vector<double> reaction_times(const TorusLattice& L, const MesoRates& rates, double D,
                                   double h, std::int64_t origin) {
  if (!(D > 0) || !(h > 0)) throw ConfigError("D and h must be positive");
  const double k0 = rates.same_voxel, k1 = rates.neighbor;
  if (!(k0 >= 0) || !(k1 >= 0)) throw ConfigError("reaction intensities must be >= 0");
  if (k0 == 0 && k1 == 0) return std::vector<double>(L.N, std::numeric_limits<double>::infinity());
  const double a = D / (h * h);
  std::vector<char> absorbing(L.N, 0);
  std::vector<double> diag(L.N, 0.0);
  auto set_sink = [&](std::int64_t v, double k) {
    if (std::isinf(k))
      absorbing[v] = 1;
    else
      diag[v] = k / a;
  };
  set_sink(origin, k0);
  for (auto w : L.neighbors(origin)) set_sink(w, k1);
  return solve_walk_system(L, absorbing, diag, 1.0 / a);
}

double mean_reaction_time_exact(const TorusLattice& L, const MesoRates& rates, double D, double h,
                                std::span<const double> start, std::int64_t origin) {
  check_distribution(L, start);
  const auto tau = reaction_times(L, rates, D, h, origin);
  if (std::isinf(tau[0])) return tau[0];
  return weighted(start, tau);
}

std::vector<double> d2_entry_distribution(const TorusLattice& L) {
  if (L.side < 5) throw ConfigError("n21 needs side >= 5 (got " + std::to_string(L.side) + ")");
  std::vector<double> p(L.N, 0.0);
  double total = 0;
  for (std::int64_t v = 0; v < L.N; ++v) {
    if (L.distance_class[v] != 1) continue;
    for (auto w : L.neighbors(v))
      if (L.distance_class[w] == 2) {
        p[w] += 1;
        total += 1;
      }
  }
  for (double& x : p) x /= total;
  return p;
}

N21Result n21_exact(const TorusLattice& L) {
  const auto entry = d2_entry_distribution(L);
  const auto d1 = voxels_at_distance(L, 0, 1);
  N21Result r;
  r.exact = mean_hitting_steps(L, entry, d1);
  const double N = static_cast<double>(L.N);
  r.uncorrected = (N - 2) / (2 * L.d - 1);
  r.corrected = (N - 2 * L.d - 1) / (2 * L.d - 1);
  return r;
}

FptQuantities fpt_quantities(const TorusLattice& L, const MesoRates& rates, double D, double h) {
  FptQuantities q;
  const auto uniform = uniform_distribution(L);
  const std::int32_t origin[] = {0};
  q.N0 = mean_hitting_steps(L, uniform, origin);
  q.N1 = mean_hitting_steps(L, uniform, voxels_at_distance(L, 0, 1));
  q.n21 = n21_exact(L).exact;
  q.n00 = mean_return_steps(L, 0);
  const auto tau = reaction_times(L, rates, D, h, 0);
  q.tau0 = tau[0];
  q.tau1 = tau[L.neighbors(0)[0]];
  q.tau2 = weighted(d2_entry_distribution(L), tau);
  q.tau_uniform = weighted(uniform, tau);
  return q;
}

}  // namespace grdme
