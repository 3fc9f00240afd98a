// Eigenstate analysis in the scar basis: local representation, scar
// intensities, participation ratios, Weibull statistics and error bounds
// against the reference spectrum.
#pragma once

#include <iosfwd>
#include <stdexcept>
#include <vector>

#include "scarbasis/basis_builder.hpp"
#include "scarbasis/reference_solver.hpp"

namespace scarbasis {

class SingularityError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class WeibullFitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LocalEntry {
  std::size_t scar = 0;       // position in the scar list passed in
  double intensity = 0.0;     // |<psi_j^{(n-1)}|N>|^2, unnormalized residual
  double coefficient = 0.0;   // <phi_n^loc|N>
  double cumulative = 0.0;    // sum of coefficient^2 so far
};

struct LocalRepresentation {
  std::vector<LocalEntry> entries;

  [[nodiscard]] std::vector<double> coefficients() const;
};

/// Greedy ordering of the scar functions by intensity with deflation against
/// the normalized picks. Stops early when every remaining residual norm is
/// below min_residual or the unexplained weight of the state is below
/// min_residual times its norm squared.
LocalRepresentation local_representation(const WaveFunction& state, const std::vector<WaveFunction>& scars,
                                         double min_residual = 1e-8);

/// Averaged j-th largest intensity, j in {1, 2}, with
/// alpha_j = z_j + ln(sqrt(2) sigma_r / j + c_j). Throws SingularityError where
/// the expression has no real value.
double scar_intensity_average(int j, double sigma_bar_r, double c_j = 0.0);

/// (sum C^2) / (sum C^4) after normalizing sum C^2 to one.
double participation_ratio(const std::vector<double>& coefficients);
/// zeta sigma_r with zeta = 8/3 (one-dimensional irreps) or 2 (E).
double mean_pr_estimate(double sigma_bar_r, Irrep irrep);
double semiclassical_pr(double section_area, double hbar = 1.0);

struct WeibullFit {
  double k = 0.0;
  double l = 0.0;
  bool maximum_likelihood = true;  // false when the CDF least-squares fallback was used
};

/// Maximum likelihood; falls back to a least-squares line through
/// ln(-ln(1 - F)) versus ln r when samples contain zeros or the likelihood
/// equation has no root.
WeibullFit weibull_fit(const std::vector<double>& samples);
double weibull_pdf(double x, double k, double l);
double weibull_cdf(double r, double k, double l);

struct ErrorBounds {
  double energy = 0.0;   // sigma_r^2.5 / 4, in mean spacings
  double overlap = 0.0;  // sigma_r^2.5 / 100
  bool valid = false;    // sigma_r < 0.3
};

ErrorBounds error_bounds(double sigma_r);

/// Centred moving average over `window` + 1 points (window / 2 on each side),
/// narrowed symmetrically near the ends.
std::vector<double> mobile_mean(const std::vector<double>& series, int window = 20);

struct StateComparison {
  std::size_t index = 0;        // 0-based state in the scar-basis spectrum
  std::size_t ref_index = 0;    // best-overlapping reference state
  double energy = 0.0;
  double ref_energy = 0.0;
  double sigma = 0.0;
  double rho = 0.0;
  double sigma_r = 0.0;
  double delta_e_r = 0.0;       // |E - E'| rho
  double overlap_deficit = 0.0; // 1 - <N|N'>^2
  bool ref_converged = false;
  ErrorBounds bounds;
  [[nodiscard]] bool energy_ok() const { return delta_e_r <= bounds.energy; }
  [[nodiscard]] bool overlap_ok() const { return overlap_deficit <= bounds.overlap; }
};

/// Matches every converged-window state with the reference state of largest
/// overlap among those within `search` in energy.
std::vector<StateComparison> compare_with_reference(const SpectrumResult& spectrum, const BasisSelection& selection,
                                                    const ReferenceSpectrum& reference,
                                                    const HamiltonianParams& params, double search = 2.0);

void write_comparison_csv(std::ostream& out, const std::vector<StateComparison>& rows);

/// "N,E,R,po1,n1,sum1,po2,n2,sum2,..." with up to max_entries groups; sums in percent.
struct ReconstructionRow {
  std::size_t state = 0;
  double energy = 0.0;
  double participation = 0.0;
  std::vector<std::pair<const ScarFunction*, double>> entries;
};
void write_reconstruction_csv(std::ostream& out, const std::vector<ReconstructionRow>& rows, std::size_t max_entries = 8);

}  // namespace scarbasis
