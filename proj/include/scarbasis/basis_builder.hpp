// Selective Gram-Schmidt construction of a scar-function basis for an energy
// window, and diagonalization of the Hamiltonian in that basis.
#pragma once

#include <Eigen/Dense>

#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <vector>

#include "scarbasis/quantization.hpp"
#include "scarbasis/wavefunctions.hpp"

namespace scarbasis {

class InsufficientCandidatesError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class RankDeficiencyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SelectionWindow {
  double e_minus = 0.0;
  double e_plus = 0.0;
  double sigma_bar = 0.0;
  double c_b = 2.0;
  Irrep irrep = Irrep::A1;

  void validate() const;
  [[nodiscard]] bool contains(double e) const { return e >= e_minus && e <= e_plus; }
  [[nodiscard]] double midpoint() const { return 0.5 * (e_minus + e_plus); }
  /// Candidate range (E- - 2 sigma_bar, E+ + 2 sigma_bar).
  [[nodiscard]] double enlarged_lo() const { return e_minus - 2.0 * sigma_bar; }
  [[nodiscard]] double enlarged_hi() const { return e_plus + 2.0 * sigma_bar; }

  /// sigma_bar from the semiclassical dispersion with the mean Lyapunov
  /// exponent and Ehrenfest time at E+.
  static SelectionWindow make(double e_minus, double e_plus, Irrep irrep, double c_b = 2.0, double hbar = 1.0);
};

struct Candidate {
  ScarFunction scar;
  double eta = 0.0;
  double delta_e = 0.0;
  double rho = 0.0;
  double period = 0.0;  // orbit period at E_j
  int n_s = 1;
  int n_t = 1;
};

/// Distance from e to the window; zero inside and on the edges.
double window_distance(double e, const SelectionWindow& window);

/// rho [sigma^2 + dE^2]^{1/2} T N_s N_t.
double selection_parameter(double energy, double sigma, const SelectionWindow& window, double rho, double period,
                           int n_s, int n_t);

/// Ceiling of N(E+ + 2 sigma_bar) - N(E- - 2 sigma_bar) + c_b sigma_bar rho(midpoint),
/// with the counting function clamped at zero for negative energies.
int basis_size(const SelectionWindow& window, const HamiltonianParams& params,
               WeylTerms terms = WeylTerms::WithSymmetryLines);

struct CandidateOptions {
  TubeOptions tube;
  PropagatorConfig propagator;
  int threads = 1;
  std::function<void(const char*)> progress;
};

/// Scar functions for every BS level of the given orbits inside the enlarged
/// window, all on one grid, scored with the selection parameter. Levels whose
/// projection onto the irrep vanishes are skipped. The order is that of
/// enumerate_levels, which makes candidate indices reproducible.
std::vector<Candidate> build_candidates(const std::vector<PeriodicOrbit>& orbits, const DesymTable& desym,
                                        const SelectionWindow& window, const Grid2D& grid,
                                        const HamiltonianParams& params, const CandidateOptions& opts = {});

/// Grid large enough for every candidate of the window.
Grid2D grid_for_window(const SelectionWindow& window, const HamiltonianParams& params);

struct BasisSelection {
  std::vector<std::size_t> indices;        // j_1 ... j_Nb
  std::vector<WaveFunction> auxiliaries;   // orthonormal phi_1 ... phi_Nb
  std::vector<double> residual_norms;      // |psi_j^{(n-1)}| at selection
  std::vector<double> etas;

  [[nodiscard]] std::size_t size() const { return indices.size(); }
  /// max |G - I| over the auxiliary Gram matrix.
  [[nodiscard]] double orthonormality_defect() const;
};

/// Greedy selection: first the smallest eta, then repeatedly the largest
/// |residual|^2 / eta after deflation against the auxiliaries chosen so far.
/// Ties go to the smallest candidate index.
BasisSelection sgsm_select(const std::vector<WaveFunction>& candidates, const std::vector<double>& etas,
                           std::size_t n_b, double min_residual = 1e-8);
BasisSelection sgsm_select(const std::vector<Candidate>& candidates, std::size_t n_b, double min_residual = 1e-8);
/// N_b from basis_size; throws InsufficientCandidatesError if the pool is smaller.
BasisSelection sgsm_select(const std::vector<Candidate>& candidates, const SelectionWindow& window,
                           const HamiltonianParams& params);

/// H_ik = <phi_i|H|phi_k>. The returned matrix is not symmetrized; the
/// asymmetry is reported through *max_asymmetry when given.
Eigen::MatrixXd assemble_hamiltonian(const BasisSelection& selection, GridHamiltonian& h,
                                     double* max_asymmetry = nullptr);

struct SpectrumResult {
  Eigen::VectorXd eigenvalues;    // ascending
  Eigen::MatrixXd eigenvectors;   // columns in the auxiliary basis
  Eigen::VectorXd sigma;          // dispersion of each reconstructed state
  std::vector<bool> converged;    // eigenvalue inside the window
  Irrep irrep = Irrep::A1;
  SelectionWindow window;

  [[nodiscard]] std::size_t size() const { return static_cast<std::size_t>(eigenvalues.size()); }
};

SpectrumResult diagonalize(const Eigen::MatrixXd& hamiltonian, const BasisSelection& selection,
                           const SelectionWindow& window, GridHamiltonian& h);

/// Eigenstate k on the grid, sum_i C_ik phi_i.
WaveFunction eigenstate(const SpectrumResult& spectrum, const BasisSelection& selection, std::size_t k);

/// "step,candidate,orbit,n,energy,eta,residual_norm"
void write_selection_csv(std::ostream& out, const BasisSelection& selection, const std::vector<Candidate>& candidates);
/// "index,E,sigma,converged"
void write_spectrum_csv(std::ostream& out, const SpectrumResult& spectrum);

}  // namespace scarbasis
