#include "scarbasis/hamiltonian.hpp"

namespace scarbasis {

namespace {

double energy_ratio(double e_from, double e_to) {
  if (!(e_from > 0.0) || !(e_to > 0.0)) {
    throw std::domain_error("energy scaling requires positive energies");
  }
  return e_to / e_from;
}

}  // namespace

double eval_hamiltonian(const PhaseSpaceState& s, const HamiltonianParams& params) {
  return 0.5 * (s.px * s.px + s.py * s.py) + potential(s.x, s.y, params.beta);
}

PhaseSpaceState scale_state(const PhaseSpaceState& s, double e_from, double e_to) {
  const double r = energy_ratio(e_from, e_to);
  const double q = std::pow(r, 0.25);
  const double p = std::sqrt(r);
  return {q * s.x, q * s.y, p * s.px, p * s.py};
}

double scale_action(double action, double e_from, double e_to) {
  return std::pow(energy_ratio(e_from, e_to), 0.75) * action;
}

double scale_time(double t, double e_from, double e_to) {
  return std::pow(energy_ratio(e_from, e_to), -0.25) * t;
}

}  // namespace scarbasis
