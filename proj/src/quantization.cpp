#include "scarbasis/quantization.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>
#include <string>

#include "scarbasis/data_files.hpp"

namespace scarbasis {

DesymTable::DesymTable(std::vector<DesymEntry> entries) : entries_(std::move(entries)) {}

DesymTable DesymTable::read(std::istream& in) {
  std::vector<DesymEntry> entries;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    DesymEntry e;
    std::string tag, nd, nn;
    if (!(ls >> e.orbit_id)) continue;
    if (!(ls >> tag >> e.p >> nd >> nn)) {
      throw std::runtime_error("desymmetrization table: malformed line " + std::to_string(line_no));
    }
    e.irrep = parse_irrep(tag);
    if (nd == "--" || nn == "--") {
      e.applicable = false;
    } else {
      e.n_d = std::stoi(nd);
      e.n_n = std::stoi(nn);
      if (e.n_d < 0 || e.n_n < 0 || (e.p != 1 && e.p != 2 && e.p != 4)) {
        throw std::runtime_error("desymmetrization table: invalid counts on line " + std::to_string(line_no));
      }
    }
    entries.push_back(e);
  }
  return DesymTable(std::move(entries));
}

DesymTable DesymTable::read(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("desymmetrization table: cannot open " + file.string());
  return read(in);
}

DesymTable DesymTable::load_default() {
  DesymTable t = read(default_desym_1d());
  t.merge(read(default_desym_e()));
  return t;
}

void DesymTable::merge(const DesymTable& other) {
  entries_.insert(entries_.end(), other.entries_.begin(), other.entries_.end());
}

std::optional<DesymEntry> DesymTable::find(int orbit_id, Irrep irrep) const {
  for (const auto& e : entries_)
    if (e.orbit_id == orbit_id && e.irrep == irrep) return e;
  return std::nullopt;
}

namespace {

void require_applicable(const PeriodicOrbit& po, const DesymEntry& d) {
  if (!d.applicable) {
    throw InapplicableLevelError("orbit " + std::to_string(po.id) + " has no levels in " +
                                 std::string(to_string(d.irrep)));
  }
}

double phase_offset(const PeriodicOrbit& po, const DesymEntry& d) {
  return po.mu / (4.0 * d.p) + 0.5 * d.n_d;
}

}  // namespace

double bs_energy(const PeriodicOrbit& po, const DesymEntry& desym, int n, double hbar) {
  require_applicable(po, desym);
  if (n < 0) throw std::invalid_argument("bs_energy: negative excitation");
  const double e34 = 2.0 * std::numbers::pi * hbar * desym.p / po.action * (n + phase_offset(po, desym));
  return std::pow(e34, 4.0 / 3.0);
}

int bs_max_excitation(const PeriodicOrbit& po, const DesymEntry& desym, double e, double hbar) {
  require_applicable(po, desym);
  if (!(e > 0.0)) return -1;
  const double x = std::pow(e, 0.75) * po.action / (2.0 * std::numbers::pi * hbar * desym.p) - phase_offset(po, desym);
  int n = static_cast<int>(std::floor(x));
  while (n >= 0 && bs_energy(po, desym, n, hbar) > e) --n;
  while (bs_energy(po, desym, n + 1, hbar) <= e) ++n;
  return n;
}

int expected_node_count(const PeriodicOrbit& po, const DesymEntry& desym, int n) {
  require_applicable(po, desym);
  // p N_t (n + N_D/2) is an integer for every tabulated combination.
  return static_cast<int>(std::lround(desym.p * po.n_t * (n + 0.5 * desym.n_d)));
}

std::vector<BSLevel> enumerate_levels(const std::vector<PeriodicOrbit>& orbits, const DesymTable& desym,
                                      Irrep irrep, double e_lo, double e_hi, double hbar) {
  if (!(e_lo <= e_hi)) throw std::invalid_argument("enumerate_levels: inverted window");
  if (e_lo == e_hi) return {};
  std::vector<BSLevel> out;
  for (const auto& po : orbits) {
    const auto d = desym.find(po.id, irrep);
    if (!d || !d->applicable) continue;
    for (int n = 0;; ++n) {
      const double e = bs_energy(po, *d, n, hbar);
      if (e >= e_hi) break;
      if (e > e_lo) out.push_back({po.id, n, irrep, e});
    }
  }
  std::sort(out.begin(), out.end(), [](const BSLevel& a, const BSLevel& b) {
    if (a.energy != b.energy) return a.energy < b.energy;
    if (a.orbit_id != b.orbit_id) return a.orbit_id < b.orbit_id;
    return a.n < b.n;
  });
  return out;
}

double weyl_coefficient(Irrep irrep, double beta) {
  // Classically allowed volume at E = 1: int d^2u (1 - V(u))_+ = int dphi / (3 sqrt(V(cos phi, sin phi))).
  auto integrand = [beta](double phi) { return 1.0 / (3.0 * std::sqrt(potential(std::cos(phi), std::sin(phi), beta))); };
  const double octant = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, 0.0, std::numbers::pi / 4,
                                                                                     15, 1e-14);
  const double fraction_of_plane = is_two_dimensional(irrep) ? 2.0 : 1.0;  // in octants
  return fraction_of_plane * octant / (2.0 * std::numbers::pi);
}

double weyl_line_coefficient(Irrep irrep, double beta) {
  // Each reflection line contributes (1/2pi) int dl sqrt(2 (1 - V)) at E = 1;
  // the lines enter with the character of the reflection, divided by |G| = 8.
  auto line_integral = [beta](double dx, double dy) {
    const double a = potential(dx, dy, beta);  // V along the line is a l^4
    const double l_max = std::pow(1.0 / a, 0.25);
    auto f = [a](double l) { return std::sqrt(std::max(0.0, 2.0 * (1.0 - a * l * l * l * l))); };
    return 2.0 * boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, l_max, 15, 1e-13) /
           (2.0 * std::numbers::pi);
  };
  const double axis = line_integral(1.0, 0.0);
  const double diag = line_integral(std::numbers::sqrt2 / 2, std::numbers::sqrt2 / 2);
  double b = 0.0;
  for (GroupElement g : kGroupElements) {
    if (g == GroupElement::ReflectX || g == GroupElement::ReflectY) b += character(irrep, g) * axis;
    if (g == GroupElement::ReflectDiag || g == GroupElement::ReflectAntiDiag) b += character(irrep, g) * diag;
  }
  return is_two_dimensional(irrep) ? 0.0 : b / 8.0;
}

double weyl_count(double e, Irrep irrep, const HamiltonianParams& params, WeylTerms terms) {
  if (!(e > 0.0)) return 0.0;
  double n = weyl_coefficient(irrep, params.beta) * std::pow(e, 1.5) / (params.hbar * params.hbar);
  if (terms == WeylTerms::WithSymmetryLines) n += weyl_line_coefficient(irrep, params.beta) * std::pow(e, 0.75) / params.hbar;
  return std::max(n, 0.0);
}

double density_of_states(double e, Irrep irrep, const HamiltonianParams& params, WeylTerms terms) {
  if (!(e > 0.0)) return 0.0;
  double rho = 1.5 * weyl_coefficient(irrep, params.beta) * std::sqrt(e) / (params.hbar * params.hbar);
  if (terms == WeylTerms::WithSymmetryLines) rho += 0.75 * weyl_line_coefficient(irrep, params.beta) * std::pow(e, -0.25) / params.hbar;
  return rho;
}

void write_levels_csv(std::ostream& out, const std::vector<BSLevel>& levels) {
  out << "orbit,n,irrep,energy\n" << std::setprecision(17);
  for (const auto& l : levels) out << l.orbit_id << ',' << l.n << ',' << to_string(l.irrep) << ',' << l.energy << '\n';
}

}  // namespace scarbasis
