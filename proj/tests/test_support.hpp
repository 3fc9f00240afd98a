// Shared fixtures for the unit and acceptance tests.
#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "scarbasis/data_files.hpp"
#include "scarbasis/periodic_orbit.hpp"
#include "scarbasis/quantization.hpp"
#include "scarbasis/symmetry.hpp"

namespace scarbasis::testing {

inline const std::vector<PeriodicOrbit>& orbits() {
  static const std::vector<PeriodicOrbit> table = read_orbit_table(default_orbit_table());
  return table;
}

inline const DesymTable& desym() {
  static const DesymTable table = DesymTable::load_default();
  return table;
}

inline DesymEntry entry(int id, Irrep irrep) {
  const auto e = desym().find(id, irrep);
  if (!e || !e->applicable) throw std::invalid_argument("no desymmetrization entry");
  return *e;
}

/// Lowest tabulated eigenvalues: columns A1 A2 B1 B2 E, one row per level.
struct LevelTable {
  std::vector<std::vector<double>> rows;

  [[nodiscard]] double at(std::size_t level, Irrep irrep) const {
    std::size_t col = 0;
    switch (irrep) {
      case Irrep::A1: col = 0; break;
      case Irrep::A2: col = 1; break;
      case Irrep::B1: col = 2; break;
      case Irrep::B2: col = 3; break;
      case Irrep::E1:
      case Irrep::E2: col = 4; break;
    }
    return rows.at(level).at(col);
  }
};

inline LevelTable low_lying_levels() {
  std::ifstream in(std::string(SCARBASIS_FIXTURE_DIR) + "/low_lying_levels.txt");
  if (!in) throw std::runtime_error("missing fixture low_lying_levels.txt");
  LevelTable t;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    int n = 0;
    ss >> n;
    std::vector<double> row(5);
    for (double& v : row) ss >> v;
    if (ss) t.rows.push_back(row);
  }
  return t;
}

}  // namespace scarbasis::testing
