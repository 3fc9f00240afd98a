// Variational reference spectrum in a symmetry-adapted two-dimensional
// harmonic-oscillator product basis (triangle truncation nx + ny <= n_max).
#pragma once

#include <Eigen/Dense>

#include <iosfwd>
#include <stdexcept>
#include <vector>

#include "scarbasis/hamiltonian.hpp"
#include "scarbasis/symmetry.hpp"
#include "scarbasis/wavefunctions.hpp"

namespace scarbasis {

class BasisSizeError : public std::length_error {
 public:
  using std::length_error::length_error;
};

struct HOBasisSpec {
  double omega = 1.0;
  int n_max = 60;
  Irrep irrep = Irrep::A1;

  void validate() const;
};

/// Product state |nx> |ny>.
struct HOState {
  int nx = 0;
  int ny = 0;
};

/// <n'|x^2|n>, <n'|p^2|n>, <n'|x^4|n> for a 1D oscillator of frequency omega.
double ho_x2(int m, int n, double omega, double hbar = 1.0);
double ho_p2(int m, int n, double omega, double hbar = 1.0);
double ho_x4(int m, int n, double omega, double hbar = 1.0);

/// <a|H|b> between product states.
double ho_matrix_element(const HOState& a, const HOState& b, double omega, const HamiltonianParams& params);

/// Symmetry-adapted basis function: |a,b> for a == b or no swap symmetry,
/// otherwise (|a,b> + s |b,a>)/sqrt(2) with s = swap_sign.
struct AdaptedState {
  int a = 0;
  int b = 0;
  int swap_sign = 0;  // 0: plain product state
};

std::vector<AdaptedState> adapted_basis(const HOBasisSpec& spec);
double adapted_matrix_element(const AdaptedState& s, const AdaptedState& t, double omega,
                              const HamiltonianParams& params);
Eigen::MatrixXd reference_hamiltonian(const HOBasisSpec& spec, const HamiltonianParams& params,
                                      std::size_t max_block = 2500);

struct ReferenceSpectrum {
  HOBasisSpec spec;
  std::vector<AdaptedState> basis;
  Eigen::VectorXd eigenvalues;    // ascending
  Eigen::MatrixXd coefficients;   // columns in the adapted basis
  Eigen::VectorXd change;         // |E(n_max + 4) - E(n_max)|, NaN when not swept
  std::vector<bool> converged;

  [[nodiscard]] std::size_t size() const { return static_cast<std::size_t>(eigenvalues.size()); }
};

/// Dense diagonalization of one symmetry block. With sweep, the block at
/// n_max + 4 is also solved and states whose energy moves by less than
/// conv_tol are flagged converged (the larger basis's values are not used).
ReferenceSpectrum build_reference_spectrum(const HOBasisSpec& spec, const HamiltonianParams& params,
                                           bool sweep = true, double conv_tol = 1e-5,
                                           std::size_t max_block = 2500);

/// Eigenstate k sampled on the grid and normalized there. Throws GridError
/// when less than 0.9999 of the norm falls on the grid.
WaveFunction project_to_grid(const ReferenceSpectrum& spectrum, std::size_t k, const Grid2D& grid,
                             double hbar = 1.0);

/// Same columns as the scar-basis spectrum: "index,E,sigma,converged" (sigma = 0).
void write_reference_csv(std::ostream& out, const ReferenceSpectrum& spectrum);

}  // namespace scarbasis
