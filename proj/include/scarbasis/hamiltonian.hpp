// Quartic oscillator H = (px^2 + py^2)/2 + x^2 y^2 / 2 + (beta/4)(x^4 + y^4)
// and its mechanical-similarity scaling.
#pragma once

#include <array>
#include <cmath>
#include <stdexcept>

namespace scarbasis {

struct PhaseSpaceState {
  double x = 0.0;
  double y = 0.0;
  double px = 0.0;
  double py = 0.0;

  [[nodiscard]] bool finite() const {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(px) && std::isfinite(py);
  }
  [[nodiscard]] std::array<double, 4> as_array() const { return {x, y, px, py}; }
  static PhaseSpaceState from_array(const std::array<double, 4>& a) { return {a[0], a[1], a[2], a[3]}; }
};

struct HamiltonianParams {
  double beta = 0.01;
  double hbar = 1.0;

  void validate() const {
    if (!(beta > 0.0) || !(hbar > 0.0)) {
      throw std::domain_error("HamiltonianParams: beta and hbar must be positive");
    }
  }
};

inline double potential(double x, double y, double beta) {
  const double x2 = x * x;
  const double y2 = y * y;
  return 0.5 * x2 * y2 + 0.25 * beta * (x2 * x2 + y2 * y2);
}

/// Force components -dV/dx, -dV/dy.
inline std::array<double, 2> force(double x, double y, double beta) {
  return {-(x * y * y + beta * x * x * x), -(x * x * y + beta * y * y * y)};
}

/// Hessian of V as (Vxx, Vxy, Vyy).
inline std::array<double, 3> potential_hessian(double x, double y, double beta) {
  return {y * y + 3.0 * beta * x * x, 2.0 * x * y, x * x + 3.0 * beta * y * y};
}

double eval_hamiltonian(const PhaseSpaceState& s, const HamiltonianParams& params);

/// Maps a state on the E_from shell to the E_to shell: q ~ E^{1/4}, p ~ E^{1/2}.
PhaseSpaceState scale_state(const PhaseSpaceState& s, double e_from, double e_to);

/// Action scales as E^{3/4}.
double scale_action(double action, double e_from, double e_to);

/// Time (and period) scales as E^{-1/4}.
double scale_time(double t, double e_from, double e_to);

}  // namespace scarbasis
