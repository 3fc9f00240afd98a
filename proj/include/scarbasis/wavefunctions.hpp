// Grid wave functions: frozen Gaussians, tube and scar functions, symmetry
// projection, split-operator propagation and energy dispersion.
#pragma once

#include <Eigen/Dense>

#include <complex>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <stdexcept>
#include <vector>

#include "scarbasis/hamiltonian.hpp"
#include "scarbasis/periodic_orbit.hpp"
#include "scarbasis/quantization.hpp"
#include "scarbasis/symmetry.hpp"

namespace scarbasis {

using cplx = std::complex<double>;

class GridError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class LeakageError : public GridError {
 public:
  using GridError::GridError;
};

class NullProjectionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Cell-centred uniform grid on [-x_extent, x_extent) x [-y_extent, y_extent):
/// x_i = (i - (nx - 1)/2) dx. The point set is mirror symmetric in both axes,
/// and under x <-> y when the grid is square.
struct Grid2D {
  int nx = 0;
  int ny = 0;
  double x_extent = 0.0;
  double y_extent = 0.0;

  [[nodiscard]] double dx() const { return 2.0 * x_extent / nx; }
  [[nodiscard]] double dy() const { return 2.0 * y_extent / ny; }
  [[nodiscard]] double x(int i) const { return (i - 0.5 * (nx - 1)) * dx(); }
  [[nodiscard]] double y(int j) const { return (j - 0.5 * (ny - 1)) * dy(); }
  [[nodiscard]] std::size_t size() const { return static_cast<std::size_t>(nx) * ny; }
  [[nodiscard]] std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * nx + i; }
  [[nodiscard]] bool square() const { return nx == ny && x_extent == y_extent; }
  [[nodiscard]] double cell_area() const { return dx() * dy(); }

  void validate() const;  // powers of two, positive extents

  /// Square grid for states up to energy e: half extent 1.4 (4e/beta)^{1/4},
  /// dx <= (2 pi hbar / p_max) / 6 with p_max = sqrt(2.4 e), n a power of two.
  /// The extent is then widened while dx stays below 0.9 of that bound.
  static Grid2D for_energy(double e, const HamiltonianParams& params, int min_points = 32);

  friend bool operator==(const Grid2D&, const Grid2D&) = default;
};

class WaveFunction {
 public:
  WaveFunction() = default;
  explicit WaveFunction(const Grid2D& grid);
  WaveFunction(const Grid2D& grid, Eigen::VectorXcd values);

  [[nodiscard]] const Grid2D& grid() const { return grid_; }
  [[nodiscard]] const Eigen::VectorXcd& values() const { return values_; }
  Eigen::VectorXcd& values() { return values_; }

  cplx& at(int i, int j) { return values_[grid_.index(i, j)]; }
  [[nodiscard]] const cplx& at(int i, int j) const { return values_[grid_.index(i, j)]; }

  [[nodiscard]] double norm() const;
  WaveFunction& normalize();
  [[nodiscard]] bool finite() const;

 private:
  Grid2D grid_;
  Eigen::VectorXcd values_;
};

struct ScarFunction {
  WaveFunction wf;
  int orbit_id = 0;
  int n = 0;
  Irrep irrep = Irrep::A1;
  double bs_energy = 0.0;
  double sigma = 0.0;        // measured dispersion about bs_energy
  double tube_sigma = 0.0;   // dispersion of the tube function it was built from
  double ehrenfest_time = 0.0;
};

struct PropagatorConfig {
  double dt = 0.01;
  int order = 2;                 // 2: Strang, 4: triple-jump composition of Strang steps
  double leakage_tol = 1e-10;    // allowed probability in the outer boundary band
};

// Inner products and operators on the grid -----------------------------------

cplx inner_product(const WaveFunction& a, const WaveFunction& b);

/// Spectral Hamiltonian and propagator for one grid. Holds FFT plans and a
/// private workspace, so an instance must not be shared between threads.
class GridHamiltonian {
 public:
  GridHamiltonian(const Grid2D& grid, const HamiltonianParams& params);
  ~GridHamiltonian();
  GridHamiltonian(const GridHamiltonian&) = delete;
  GridHamiltonian& operator=(const GridHamiltonian&) = delete;

  [[nodiscard]] const Grid2D& grid() const { return grid_; }
  [[nodiscard]] const HamiltonianParams& params() const { return params_; }

  [[nodiscard]] Eigen::VectorXcd apply(const Eigen::VectorXcd& psi);
  [[nodiscard]] WaveFunction apply(const WaveFunction& psi);
  cplx matrix_element(const WaveFunction& a, const WaveFunction& b);
  /// sqrt(<psi|(H - e_ref)^2|psi>) for normalized psi.
  double dispersion(const WaveFunction& psi, double e_ref);

  /// psi <- exp(-i H t / hbar) psi in ceil(|t| / dt) equal steps.
  void propagate(Eigen::VectorXcd& psi, double t, const PropagatorConfig& config);
  /// One step of length h (may be negative).
  void step(Eigen::VectorXcd& psi, double h, int order);
  /// Throws LeakageError when the outer band carries more than tol probability.
  void check_leakage(const Eigen::VectorXcd& psi, double tol) const;

 private:
  void fft_forward();
  void fft_backward();
  void strang(Eigen::VectorXcd& psi, double h);
  struct PhaseCache;

  Grid2D grid_;
  HamiltonianParams params_;
  Eigen::VectorXd potential_;
  Eigen::VectorXd kinetic_;  // hbar^2 k^2 / 2 in FFT order
  void* buffer_ = nullptr;
  void* plan_forward_ = nullptr;
  void* plan_backward_ = nullptr;
  std::unique_ptr<PhaseCache> cache_;
};

cplx h_element(const WaveFunction& a, const WaveFunction& b, const HamiltonianParams& params);
double energy_dispersion(const WaveFunction& psi, double e_ref, const HamiltonianParams& params);
WaveFunction propagate(const WaveFunction& psi, double t, const HamiltonianParams& params,
                       const PropagatorConfig& config = {});

// Symmetry ---------------------------------------------------------------------

/// (g psi)(q) = psi(g^{-1} q). Requires a square grid for the quarter turns and
/// diagonal mirrors.
WaveFunction apply_group(GroupElement g, const WaveFunction& psi);
/// Projector onto an irrep (for E1/E2 onto the row with the stated parities).
WaveFunction project_irrep(const WaveFunction& psi, Irrep irrep);
/// max over group elements with nonzero character of ||g psi - chi(g) psi|| / ||psi||.
double symmetry_defect(const WaveFunction& psi, Irrep irrep);

// Semiclassical ingredients -----------------------------------------------------

/// exp{-alpha|q - q_t|^2 + (i/hbar) p_t.(q - q_t) + i gamma}, normalized.
WaveFunction frozen_gaussian(const Grid2D& grid, const PhaseSpaceState& point, double gamma, double alpha = 1.0,
                             double hbar = 1.0);

/// gamma_t = S_t / hbar - (pi/2) mu_t on the samples of an orbit path.
std::vector<double> phase_along_orbit(const Trajectory& path, double hbar = 1.0);

struct TubeOptions {
  double alpha = 1.0;
  int min_steps = 1000;
  double max_phase_step = 3.14159265358979323846 / 8;  // phase advance per time step
  double max_shift = 0.2;                              // centre displacement per step, in 1/sqrt(alpha)
};

/// Path of an orbit sampled for the tube integral at energy e (scaled from E = 1).
Trajectory scaled_orbit_path(const PeriodicOrbit& po, double e, const HamiltonianParams& params,
                             const TubeOptions& opts = {});

/// Tube function on the grid for a BS level: the frozen Gaussian averaged over
/// one period with the phase e^{i gamma_t}, projected onto the level's irrep and
/// made real. Throws NullProjectionError if the projection vanishes.
WaveFunction tube_function(const PeriodicOrbit& po, const BSLevel& level, const Grid2D& grid,
                           const HamiltonianParams& params, const TubeOptions& opts = {});

/// Mean Lyapunov exponent 0.3848 E^{1/4} and section area 5.5278 E^{3/4}
/// (1D irreps) or 11.0555 E^{3/4} (E).
double mean_lyapunov(double e);
double section_area(double e, Irrep irrep);
/// Ehrenfest time ln(A_tr / hbar) / (2 lambda_bar). Negative values are returned as is.
double ehrenfest_time(double e, Irrep irrep, double hbar = 1.0);
/// Semiclassical dispersion (pi/2) hbar lambda (s2 + lambda T) / [(s1 + lambda T)(s2 + lambda T) + s2^2].
double semiclassical_dispersion(double lambda, double t_e, double hbar = 1.0);

/// Scar function: windowed propagation of the tube function with
/// cos(pi t / 2 T_E) e^{-i(H - E_n)t/hbar} over [-T_E, T_E]; t_e <= 0 returns the tube function itself.
ScarFunction scar_function(const WaveFunction& tube, const BSLevel& level, double t_e, GridHamiltonian& h,
                           const PropagatorConfig& config = {});

// I/O ---------------------------------------------------------------------------

struct SnapshotMeta {
  double e_ref = 0.0;
  int orbit_id = 0;
  int n = 0;
  Irrep irrep = Irrep::A1;
  double sigma = 0.0;
};

/// Binary snapshot: "SCWF", u32 version, u32 nx, u32 ny, f64 extents, f64 e_ref,
/// i32 orbit, i32 n, i32 irrep, f64 sigma, then nx*ny little-endian complex64.
void write_snapshot(const std::filesystem::path& file, const WaveFunction& psi, const SnapshotMeta& meta);
WaveFunction read_snapshot(const std::filesystem::path& file, SnapshotMeta* meta = nullptr);

/// CSV "x,y,density" over the grid, every `stride` points.
void write_density_csv(std::ostream& out, const WaveFunction& psi, int stride = 1);

/// Real parts sampled along the orbit path (for node counting).
std::vector<double> sample_along_path(const WaveFunction& psi, const Trajectory& path);
int count_sign_changes(const std::vector<double>& samples, bool periodic = true);
/// Nodes of psi along the orbit scaled to energy e: crossings of the mirror
/// lines on which the irrep forces psi to vanish, plus the remaining sign
/// changes. A self-retracing orbit is sampled once between its turning points
/// rather than over the full period, which would visit every node twice.
int count_nodes_along_orbit(const WaveFunction& psi, const PeriodicOrbit& po, double e, Irrep irrep,
                            const HamiltonianParams& params);

}  // namespace scarbasis
