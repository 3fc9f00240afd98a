// Desymmetrized Bohr-Sommerfeld quantization over the periodic orbits, the
// boundary-condition tables and the smooth (Weyl) counting function.
#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <vector>

#include "scarbasis/periodic_orbit.hpp"
#include "scarbasis/symmetry.hpp"

namespace scarbasis {

class InapplicableLevelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Boundary data of one orbit folded into the fundamental domain of an irrep.
struct DesymEntry {
  int orbit_id = 0;
  Irrep irrep = Irrep::A1;
  int p = 1;         // period ratio
  int n_d = 0;       // Dirichlet reflections
  int n_n = 0;       // Neumann reflections
  bool applicable = true;

  [[nodiscard]] int n_r() const { return n_d + n_n; }
};

class DesymTable {
 public:
  DesymTable() = default;
  explicit DesymTable(std::vector<DesymEntry> entries);

  /// Reads "po irrep p N_D N_N" lines; "--" in the N_D/N_N columns marks an
  /// inapplicable combination.
  static DesymTable read(std::istream& in);
  static DesymTable read(const std::filesystem::path& file);
  /// Both shipped tables (one-dimensional irreps and E) merged.
  static DesymTable load_default();

  void merge(const DesymTable& other);
  [[nodiscard]] std::optional<DesymEntry> find(int orbit_id, Irrep irrep) const;
  [[nodiscard]] const std::vector<DesymEntry>& entries() const { return entries_; }

 private:
  std::vector<DesymEntry> entries_;
};

struct BSLevel {
  int orbit_id = 0;
  int n = 0;
  Irrep irrep = Irrep::A1;
  double energy = 0.0;
};

/// E_n^{3/4} = (2 pi hbar p / S) [n + mu / (4 p) + N_D / 2], S and mu of the
/// full orbit at E = 1.
double bs_energy(const PeriodicOrbit& po, const DesymEntry& desym, int n, double hbar = 1.0);

/// Excitation whose BS energy is the largest one not above e (or -1).
int bs_max_excitation(const PeriodicOrbit& po, const DesymEntry& desym, double e, double hbar = 1.0);

/// Sign changes expected along the orbit: p N_t (n + N_D / 2).
int expected_node_count(const PeriodicOrbit& po, const DesymEntry& desym, int n);

/// All levels with e_lo < E_n < e_hi over the given orbits, sorted by energy
/// (ties by orbit id, then n). Orbits with no applicable entry are skipped.
/// An empty window gives an empty list; an inverted one throws.
std::vector<BSLevel> enumerate_levels(const std::vector<PeriodicOrbit>& orbits, const DesymTable& desym,
                                      Irrep irrep, double e_lo, double e_hi, double hbar = 1.0);

/// Terms kept in the smooth counting function. The bulk (Thomas-Fermi) term
/// alone is exactly homogeneous, c E^{3/2}; the symmetry lines of the
/// fundamental domain add b E^{3/4} with b > 0 for Neumann and b < 0 for
/// Dirichlet lines (zero for E).
enum class WeylTerms { Bulk, WithSymmetryLines };

/// c in the bulk term, hbar = 1 units.
double weyl_coefficient(Irrep irrep, double beta);
/// b in the symmetry-line term, hbar = 1 units.
double weyl_line_coefficient(Irrep irrep, double beta);

double weyl_count(double e, Irrep irrep, const HamiltonianParams& params,
                  WeylTerms terms = WeylTerms::WithSymmetryLines);
double density_of_states(double e, Irrep irrep, const HamiltonianParams& params,
                         WeylTerms terms = WeylTerms::WithSymmetryLines);

void write_levels_csv(std::ostream& out, const std::vector<BSLevel>& levels);

}  // namespace scarbasis
