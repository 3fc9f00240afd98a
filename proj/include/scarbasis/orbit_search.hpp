// Search for short symmetric periodic orbits by one-parameter shooting from the
// fixed sets of the reversing involutions of the quartic oscillator.
#pragma once

#include <functional>
#include <vector>

#include "scarbasis/periodic_orbit.hpp"

namespace scarbasis {

struct OrbitSearchOptions {
  double max_action = 27.0;            // keep orbits with S below this (E = 1)
  std::size_t samples_per_family = 6000;
  double tol = 1e-11;                   // shooting integration tolerance
  int max_repetition = 12;
  std::function<void(const char*)> progress;  // optional log sink
};

struct OrbitCandidate {
  PhaseSpaceState start;
  double half_period = 0.0;
  int family = 0;
  int target = 0;
};

/// Raw candidates from sign changes of the symmetry test along each family.
std::vector<OrbitCandidate> shoot_symmetric_candidates(const HamiltonianParams& params,
                                                       const OrbitSearchOptions& opts = {});

/// The two orbits lying on invariant lines: the axis libration and the
/// diagonal libration.
std::vector<OrbitCandidate> invariant_line_candidates(const HamiltonianParams& params);

/// Refines all candidates, reduces to prime orbits and removes symmetry copies.
/// The result is sorted by relevance.
std::vector<PeriodicOrbit> search_periodic_orbits(const HamiltonianParams& params,
                                                  const OrbitSearchOptions& opts = {});

/// Reference entry used to label search results: "id S lambda mu N_s N_t R".
struct CatalogueEntry {
  int id = 0;
  double action = 0.0;
  double lambda = 0.0;
  int mu = 0;
  int n_s = 1;
  int n_t = 1;
  double relevance = 0.0;
};

std::vector<CatalogueEntry> read_orbit_catalogue(const std::filesystem::path& file);

struct CatalogueMatch {
  std::vector<PeriodicOrbit> matched;   // relabelled with catalogue ids, in catalogue order
  std::vector<int> missing;             // catalogue ids without a found orbit
  std::vector<PeriodicOrbit> extra;     // found orbits absent from the catalogue
};

/// Matches on relative action (rel_s), relative stability (rel_lambda) and exact mu.
CatalogueMatch match_catalogue(const std::vector<PeriodicOrbit>& found, const std::vector<CatalogueEntry>& catalogue,
                               double rel_s = 5e-4, double rel_lambda = 5e-3);

}  // namespace scarbasis
