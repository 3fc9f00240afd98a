// Locations of the shipped data tables.
#pragma once

#include <cstdlib>
#include <filesystem>

namespace scarbasis {

/// $SCARBASIS_DATA if set, otherwise the data/ directory of the source tree.
inline std::filesystem::path data_dir() {
  if (const char* env = std::getenv("SCARBASIS_DATA")) return env;
#ifdef SCARBASIS_DATA_DIR
  return SCARBASIS_DATA_DIR;
#else
  return "data";
#endif
}

inline std::filesystem::path default_orbit_table() { return data_dir() / "orbits.txt"; }
inline std::filesystem::path default_desym_1d() { return data_dir() / "desym_1d.txt"; }
inline std::filesystem::path default_desym_e() { return data_dir() / "desym_e.txt"; }

}  // namespace scarbasis
