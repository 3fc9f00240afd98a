// Periodic orbits of the quartic oscillator: Newton refinement, transversal
// monodromy, winding number, symmetry multiplicities and the orbit table.
#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <vector>

#include "scarbasis/hamiltonian.hpp"
#include "scarbasis/integrator.hpp"

namespace scarbasis {

class RefinementError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DegenerateGuessError : public RefinementError {
 public:
  using RefinementError::RefinementError;
};

class WindingResolutionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PeriodicOrbit {
  int id = 0;
  PhaseSpaceState initial_state;  // on the E = 1 shell
  double period = 0.0;
  double action = 0.0;
  double lambda = 0.0;  // stability index, 1/time
  int mu = 0;           // winding number
  int n_s = 1;          // spatial multiplicity
  int n_t = 1;          // 1 if time-reversal invariant, else 2
  Trajectory path;      // optional dense sampling over one period

  double closure_error = 0.0;
};

struct MonodromyResult {
  Eigen::Matrix2d transversal_matrix = Eigen::Matrix2d::Identity();
  Eigen::Vector2d eigenvalues = Eigen::Vector2d::Ones();  // (Lambda, 1/Lambda)
  double lambda = 0.0;
  bool hyperbolic_with_reflection = false;
  bool low_confidence = false;  // |trace| within 1e-6 of 2
  Eigen::Matrix4d full = Eigen::Matrix4d::Identity();
  Eigen::Vector4d unstable_direction = Eigen::Vector4d::Zero();
};

struct RefineOptions {
  double energy = 1.0;
  double closure_tol = 1e-10;
  int max_iterations = 40;
  double integration_tol = 1e-13;
  bool classify_symmetry = true;
};

struct RefineReport {
  PeriodicOrbit orbit;
  int iterations = 0;
};

/// Newton iteration on (z0, T) for phi_T(z0) = z0 on the energy shell, with a
/// phase condition orthogonal to the flow at the guess. Computes S, T, lambda,
/// mu (and N_s, N_t when requested). Rejects near-marginal orbits.
RefineReport refine_periodic_orbit(const PhaseSpaceState& guess, double period_guess, const HamiltonianParams& params,
                                   const RefineOptions& opts = {});

MonodromyResult compute_monodromy(const PeriodicOrbit& po, const HamiltonianParams& params);

struct WindingResult {
  std::vector<double> times;
  std::vector<double> mu_t;  // accumulated half turns
  int mu = 0;
};

/// Tracks the Lagrangian plane spanned by the flow and the unstable direction
/// and counts its half turns. At least 2000 samples per period are used; the
/// sampling is doubled automatically when the angle jumps by more than pi/2.
WindingResult compute_winding(const PeriodicOrbit& po, const HamiltonianParams& params,
                              std::size_t samples_per_period = 2000);

/// Dense path over one period with action and mu_t filled in.
Trajectory orbit_path(const PeriodicOrbit& po, const HamiltonianParams& params, std::size_t n_intervals);

/// Relevance lambda * T' * N_s * N_t with T' = (3/4) S / E at E = 1.
double relevance(const PeriodicOrbit& po);

struct SymmetryCounts {
  int n_s = 1;
  int n_t = 1;
};

SymmetryCounts classify_symmetry(const PeriodicOrbit& po, const HamiltonianParams& params);

/// Smallest period T/d (d <= max_divisor) at which the orbit already closes.
double minimal_period(const PhaseSpaceState& z0, double period, const HamiltonianParams& params,
                      int max_divisor = 12, double tol = 1e-7);

// Orbit table: one orbit per line "id S lambda mu N_s N_t x0 y0 px0 py0 T",
// '#' starts a comment. Values are written with 17 significant digits.
std::vector<PeriodicOrbit> read_orbit_table(std::istream& in);
std::vector<PeriodicOrbit> read_orbit_table(const std::filesystem::path& file);
void write_orbit_table(std::ostream& out, const std::vector<PeriodicOrbit>& orbits);
void write_orbit_table(const std::filesystem::path& file, const std::vector<PeriodicOrbit>& orbits);

const PeriodicOrbit& find_orbit(const std::vector<PeriodicOrbit>& orbits, int id);

}  // namespace scarbasis
