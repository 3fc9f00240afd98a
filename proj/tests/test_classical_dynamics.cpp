#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "scarbasis/hamiltonian.hpp"
#include "scarbasis/integrator.hpp"
#include "scarbasis/orbit_search.hpp"
#include "scarbasis/periodic_orbit.hpp"
#include "scarbasis/symmetry.hpp"
#include "test_support.hpp"

using namespace scarbasis;
using scarbasis::testing::orbits;

namespace {

const HamiltonianParams kParams{};

PhaseSpaceState on_shell(double x, double y, double angle, double e = 1.0) {
  const double p = std::sqrt(2.0 * (e - potential(x, y, kParams.beta)));
  return {x, y, p * std::cos(angle), p * std::sin(angle)};
}

double distance(const PhaseSpaceState& a, const PhaseSpaceState& b) {
  return std::hypot(std::hypot(a.x - b.x, a.y - b.y), std::hypot(a.px - b.px, a.py - b.py));
}

}  // namespace

TEST_CASE("hamiltonian values") {
  CHECK(eval_hamiltonian({0, 0, 0, 0}, kParams) == 0.0);
  CHECK(eval_hamiltonian({1, 1, 0, 0}, kParams) == doctest::Approx(0.505).epsilon(1e-15));
  const auto& po3 = find_orbit(orbits(), 3);
  for (const auto& s : orbit_path(po3, kParams, 200).samples) CHECK(std::abs(eval_hamiltonian(s.state, kParams) - 1.0) < 1e-9);
}

TEST_CASE("force is minus the potential gradient") {
  const double h = 1e-6;
  for (auto [x, y] : {std::pair{0.3, -1.2}, std::pair{2.5, 0.7}, std::pair{-4.0, 3.0}}) {
    const auto f = force(x, y, kParams.beta);
    const double gx = (potential(x + h, y, kParams.beta) - potential(x - h, y, kParams.beta)) / (2 * h);
    const double gy = (potential(x, y + h, kParams.beta) - potential(x, y - h, kParams.beta)) / (2 * h);
    CHECK(f[0] == doctest::Approx(-gx).epsilon(1e-7));
    CHECK(f[1] == doctest::Approx(-gy).epsilon(1e-7));
  }
}

TEST_CASE("integrate: trivial horizon, closure and conservation") {
  const auto& po3 = find_orbit(orbits(), 3);
  const Trajectory zero = integrate(po3.initial_state, 0.0, kParams);
  REQUIRE(zero.size() == 1);
  CHECK(zero.front().action == 0.0);

  const Trajectory loop = integrate(po3.initial_state, po3.period, kParams);
  CHECK(distance(loop.back().state, po3.initial_state) < 1e-8);
  CHECK(loop.back().action == doctest::Approx(po3.action).epsilon(1e-9));

  std::mt19937 rng(7);
  std::uniform_real_distribution<double> pos(-1.5, 1.5);
  std::uniform_real_distribution<double> ang(0.0, 2.0 * std::numbers::pi);
  const PhaseSpaceState start = on_shell(pos(rng), 0.5 * pos(rng), ang(rng));
  IntegratorOptions opts;
  const Trajectory t = integrate(start, 100.0, kParams, opts);
  double worst = 0.0;
  for (const auto& s : t.samples) worst = std::max(worst, std::abs(eval_hamiltonian(s.state, kParams) - 1.0));
  CHECK(worst <= opts.tol);
}

TEST_CASE("mechanical similarity") {
  const auto& po3 = find_orbit(orbits(), 3);
  const PhaseSpaceState s = po3.initial_state;
  const PhaseSpaceState same = scale_state(s, 1.0, 1.0);
  CHECK(distance(s, same) == 0.0);
  for (double e : {0.5, 16.0, 135.0}) {
    CHECK(eval_hamiltonian(scale_state(s, 1.0, e), kParams) == doctest::Approx(e).epsilon(1e-14));
  }
  // Oracle: integrate the scaled initial condition at E = 16 and accumulate the action directly.
  const double s16 = scale_action(po3.action, 1.0, 16.0);
  CHECK(s16 == doctest::Approx(8.2945 * std::pow(16.0, 0.75)).epsilon(2e-5));
  const Trajectory t16 = integrate(scale_state(s, 1.0, 16.0), scale_time(po3.period, 1.0, 16.0), kParams);
  CHECK(t16.back().action == doctest::Approx(s16).epsilon(1e-9));
  CHECK(distance(t16.back().state, scale_state(s, 1.0, 16.0)) < 1e-7);
}

TEST_CASE("poincare section") {
  // Moving away from x = 0 on a short horizon never crosses that plane.
  const Trajectory away = integrate(on_shell(1.0, 0.2, 0.0), 0.3, kParams);
  CHECK(poincare_section(away, {SectionPlane::Coordinate::X, +1}, kParams).empty());

  // PO 3 runs along the diagonal and crosses y = 0 with py > 0 once per period.
  const auto& po3 = find_orbit(orbits(), 3);
  IntegratorOptions opts;
  opts.sample_dt = 0.005;
  const Trajectory t = integrate(po3.initial_state, 4.0 * po3.period + 0.1, kParams, opts);
  const auto pts = poincare_section(t, {SectionPlane::Coordinate::Y, +1}, kParams);
  REQUIRE(pts.size() >= 4);
  for (std::size_t k = 1; k < pts.size(); ++k) CHECK(distance(pts[k], pts[0]) < 1e-6);
}

TEST_CASE("orbit refinement") {
  const auto& po1 = find_orbit(orbits(), 1);
  const RefineReport exact = refine_periodic_orbit(po1.initial_state, po1.period, kParams);
  CHECK(exact.iterations <= 1);

  const RefineReport r1 = refine_periodic_orbit(on_shell(0.0, 0.0, 0.01), 16.5, kParams);
  CHECK(r1.orbit.action == doctest::Approx(22.1111).epsilon(5e-5));
  CHECK(r1.orbit.lambda == doctest::Approx(0.1014).epsilon(1e-3));

  // Shooting from the x axis into the diagonal channel.
  const RefineReport r3 = refine_periodic_orbit(on_shell(0.0, 0.0, std::numbers::pi / 4 + 0.01), 6.2, kParams);
  CHECK(r3.orbit.action == doctest::Approx(8.2945).epsilon(5e-5));
}

TEST_CASE("monodromy, winding and relevance") {
  CHECK(compute_monodromy(find_orbit(orbits(), 3), kParams).lambda == doctest::Approx(0.7669).epsilon(1e-3 / 0.7669));
  CHECK(compute_monodromy(find_orbit(orbits(), 5), kParams).lambda == doctest::Approx(0.7120).epsilon(1e-3 / 0.7120));
  CHECK(compute_winding(find_orbit(orbits(), 3), kParams).mu == 2);
  CHECK(compute_winding(find_orbit(orbits(), 1), kParams).mu == 16);

  for (const auto& po : orbits()) {
    CAPTURE(po.id);
    const MonodromyResult m = compute_monodromy(po, kParams);
    CHECK((po.mu % 2 == 0) == !m.hyperbolic_with_reflection);
    CHECK(m.eigenvalues[0] * m.eigenvalues[1] == doctest::Approx(1.0).epsilon(1e-6));
  }

  CHECK(relevance(find_orbit(orbits(), 1)) == doctest::Approx(3.36).epsilon(0.005 / 3.36));
  CHECK(relevance(find_orbit(orbits(), 3)) == doctest::Approx(9.54).epsilon(0.005 / 9.54));
  PeriodicOrbit flat = find_orbit(orbits(), 3);
  flat.lambda = 0.0;
  CHECK(relevance(flat) == 0.0);
}

TEST_CASE("symmetry counts of the catalogue orbits") {
  const auto catalogue = read_orbit_catalogue(data_dir() / "orbit_catalogue.txt");
  for (int id : {1, 3, 5, 6, 7}) {
    CAPTURE(id);
    const SymmetryCounts c = classify_symmetry(find_orbit(orbits(), id), kParams);
    const auto& row = catalogue.at(static_cast<std::size_t>(id - 1));
    CHECK(c.n_s == row.n_s);
    CHECK(c.n_t == row.n_t);
  }
}

TEST_CASE("C4v group") {
  for (GroupElement g : kGroupElements) {
    const Eigen::Matrix2d m = matrix_of(g);
    CHECK((m.transpose() * m - Eigen::Matrix2d::Identity()).norm() < 1e-15);
    // Closure: every product is again a group element.
    for (GroupElement h : kGroupElements) {
      const Eigen::Matrix2d p = m * matrix_of(h);
      bool found = false;
      for (GroupElement k : kGroupElements) found = found || (p - matrix_of(k)).norm() < 1e-15;
      CHECK(found);
    }
    // The Hamiltonian is invariant.
    const PhaseSpaceState s{0.3, -1.1, 0.4, 0.2};
    CHECK(eval_hamiltonian(apply(g, s), kParams) == doctest::Approx(eval_hamiltonian(s, kParams)).epsilon(1e-15));
  }
  const std::array<Irrep, 4> one_d = {Irrep::A1, Irrep::A2, Irrep::B1, Irrep::B2};
  for (Irrep a : one_d) {
    for (Irrep b : one_d) {
      double sum = 0.0;
      for (GroupElement g : kGroupElements) sum += character(a, g) * character(b, g);
      CHECK(sum == (a == b ? 8.0 : 0.0));
    }
  }
  CHECK(parse_irrep("E") == Irrep::E1);
  CHECK(!try_parse_irrep("Q"));
}

TEST_CASE("orbit table round trip") {
  std::stringstream ss;
  write_orbit_table(ss, orbits());
  const auto back = read_orbit_table(ss);
  REQUIRE(back.size() == orbits().size());
  for (std::size_t k = 0; k < back.size(); ++k) {
    CHECK(back[k].id == orbits()[k].id);
    CHECK(back[k].action == orbits()[k].action);
    CHECK(back[k].mu == orbits()[k].mu);
  }
  CHECK_THROWS(find_orbit(orbits(), 99));
}
