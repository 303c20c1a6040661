#include <doctest.h>

#include <cmath>

#include "grdme/errors.hpp"
#include "grdme/lattice_fpt.hpp"

using namespace grdme;

namespace {

struct Expected {
  int d, side;
  double k, r, D, h;
  FptQuantities q;
};

// Dense solves from tests/oracles/lattice_oracle.py.
const Expected kCases[] = {
    {2, 8, 2000, 0.1, 1, 0.5,
     {97.09943977591013, 35.099439775910355, 19.66666666666666, 64, 0.0018387096774193554,
      0.07724193548387102, 1.3064086021505381, 2.268802183575044}},
    {3, 5, 2000, 0.05, 1, 0.5,
     {156.07272727272613, 33.07272727272723, 23.599999999999962, 125, 0.004054054054054056,
      0.19887387387387392, 1.182207207207208, 1.575012285012286}},
};

void check_rel(double a, double b, double tol) { CHECK(std::abs(a - b) <= tol * std::abs(b)); }

}  // namespace

TEST_CASE("torus geometry") {
  const auto t2 = build_torus(2, 8);
  CHECK(t2.N == 64);
  CHECK(voxels_at_distance(t2, 0, 1).size() == 4);
  CHECK(voxels_at_distance(t2, 0, 2).size() == 8);
  CHECK(torus_distance(t2, 0, 7) == 1);  // wraps
  const auto t3 = build_torus(3, 5);
  CHECK(voxels_at_distance(t3, 0, 2).size() == 18);
  for (std::int64_t v = 0; v < t3.N; ++v)
    for (auto w : t3.neighbors(v)) CHECK(torus_distance(t3, v, w) == 1);
}

TEST_CASE("exact passage quantities match the dense oracle") {
  for (const auto& c : kCases) {
    CAPTURE(c.d);
    const auto lattice = build_torus(c.d, c.side);
    const auto rates = MesoRates::split(c.d, c.k, c.r);
    const auto q = fpt_quantities(lattice, rates, c.D, c.h);
    check_rel(q.N0, c.q.N0, 1e-10);
    check_rel(q.N1, c.q.N1, 1e-10);
    check_rel(q.n21, c.q.n21, 1e-10);
    check_rel(q.n00, c.q.n00, 1e-10);
    check_rel(q.tau0, c.q.tau0, 1e-10);
    check_rel(q.tau1, c.q.tau1, 1e-10);
    check_rel(q.tau2, c.q.tau2, 1e-10);
    check_rel(q.tau_uniform, c.q.tau_uniform, 1e-10);
  }
}

TEST_CASE("mean return time equals the number of voxels") {
  for (auto [d, side] : {std::pair{2, 12}, std::pair{3, 6}}) {
    const auto lattice = build_torus(d, side);
    CHECK(mean_return_steps(lattice, 0) == doctest::Approx(static_cast<double>(lattice.N)).epsilon(1e-10));
    CHECK(mean_return_steps(lattice, lattice.N / 2) ==
          doctest::Approx(static_cast<double>(lattice.N)).epsilon(1e-10));
  }
}

TEST_CASE("reaction times without sinks are infinite") {
  const auto lattice = build_torus(2, 6);
  const auto tau = reaction_times(lattice, MesoRates{}, 1, 1);
  for (double t : tau) CHECK(std::isinf(t));
}

TEST_CASE("n21 equals (N - 2d - 1)/(2d - 1), one step below the uncorrected count") {
  for (auto [d, side] : {std::pair{2, 8}, std::pair{2, 16}, std::pair{3, 5}, std::pair{3, 8}}) {
    const auto r = n21_exact(build_torus(d, side));
    CHECK(r.exact == doctest::Approx(r.corrected).epsilon(1e-10));
    CHECK(r.uncorrected - r.corrected == doctest::Approx(1.0));
  }
}

TEST_CASE("hitting steps from the target are zero and symmetric") {
  const auto lattice = build_torus(3, 5);
  const std::int32_t origin[] = {0};
  const auto steps = hitting_steps(lattice, origin);
  CHECK(steps[0] == 0);
  const auto nb = lattice.neighbors(0);
  for (auto v : nb) CHECK(steps[v] == doctest::Approx(steps[nb[0]]));
}

TEST_CASE("reaction times are invariant under moving the reactive voxel") {
  const auto lattice = build_torus(3, 6);
  const auto rates = MesoRates::split(3, 50, 0.1);
  const auto uniform = uniform_distribution(lattice);
  const double a = mean_reaction_time_exact(lattice, rates, 1, 1, uniform, 0);
  const double b = mean_reaction_time_exact(lattice, rates, 1, 1, uniform, 131);
  CHECK(std::abs(a - b) <= 1e-9 * a);
}

TEST_CASE("instant reaction on contact reduces to hitting the neighbor shell") {
  for (auto [d, side] : {std::pair{2, 16}, std::pair{3, 8}}) {
    const auto lattice = build_torus(d, side);
    const double D = 1, h = 1;
    const double tj = h * h / (2 * d * D);
    const auto rates = MesoRates::split(d, 1e7 / tj, 1.0 / (4 * d));
    const auto uniform = uniform_distribution(lattice);
    const double t = mean_reaction_time_exact(lattice, rates, D, h, uniform);
    const double n1 = mean_hitting_steps(lattice, uniform, voxels_at_distance(lattice, 0, 1));
    CHECK(std::abs(t / (n1 * tj) - 1) <= 1e-3);
  }
}

TEST_CASE("origin and shell hitting steps differ by exactly N - 2") {
  for (auto [d, side] : {std::pair{2, 32}, std::pair{3, 12}}) {
    const auto lattice = build_torus(d, side);
    const auto uniform = uniform_distribution(lattice);
    const std::int32_t origin[] = {0};
    const double gap = mean_hitting_steps(lattice, uniform, origin) -
                       mean_hitting_steps(lattice, uniform, voxels_at_distance(lattice, 0, 1));
    CHECK(gap == doctest::Approx(static_cast<double>(lattice.N) - 2).epsilon(1e-9));
  }
}

TEST_CASE("n21 against (N-2)/(2d-1)") {
  for (auto [d, side] : {std::pair{2, 64}, std::pair{3, 16}}) {
    const auto r = n21_exact(build_torus(d, side));
    CHECK(std::abs(r.exact / r.uncorrected - 1) <= 0.02);
  }
  double prev = 0;
  for (int side : {32, 64, 128}) {
    const auto lattice = build_torus(2, side);
    const double ratio = n21_exact(lattice).exact / static_cast<double>(lattice.N);
    CHECK(std::abs(ratio - 1.0 / 3) < std::abs(prev - 1.0 / 3) + 1e-15);
    prev = ratio;
  }
  CHECK(std::abs(prev - 1.0 / 3) < 1e-3);
  CHECK_THROWS_AS(n21_exact(build_torus(2, 4)), ConfigError);
}
