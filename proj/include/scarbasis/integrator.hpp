// Adaptive integration of the quartic-oscillator flow, optionally with the
// variational (tangent) equations, plus event location on the trajectory.
#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "scarbasis/hamiltonian.hpp"

namespace scarbasis {

class IntegrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrajectorySample {
  double t = 0.0;
  PhaseSpaceState state;
  double action = 0.0;   // S_t = int_0^t (px^2 + py^2) dtau
  double winding = 0.0;  // mu_t, filled only for periodic-orbit paths
};

struct Trajectory {
  std::vector<TrajectorySample> samples;

  [[nodiscard]] std::size_t size() const { return samples.size(); }
  [[nodiscard]] const TrajectorySample& front() const { return samples.front(); }
  [[nodiscard]] const TrajectorySample& back() const { return samples.back(); }
};

struct IntegratorOptions {
  double tol = 1e-10;       // allowed relative energy drift
  double sample_dt = 0.01;  // spacing of stored samples
  double max_step = 0.25;
  std::size_t max_steps = 50'000'000;
};

/// Integrates for t_final >= 0 and stores samples every sample_dt (plus the
/// endpoint). Throws IntegrationError on step-size underflow or if the energy
/// drift exceeds the tolerance.
Trajectory integrate(const PhaseSpaceState& start, double t_final, const HamiltonianParams& params,
                     const IntegratorOptions& opts = {});

struct FlowResult {
  PhaseSpaceState state;
  double action = 0.0;
  Eigen::Matrix4d stm = Eigen::Matrix4d::Identity();  // d z(t) / d z(0), z = (x, y, px, py)
};

/// Flow map over time t together with the state transition matrix.
FlowResult flow_with_variations(const PhaseSpaceState& start, double t, const HamiltonianParams& params,
                                double tol = 1e-13);

struct VariationalSample {
  double t = 0.0;
  PhaseSpaceState state;
  double action = 0.0;
  Eigen::Matrix4d stm;
};

/// Flow plus tangent map at n_intervals + 1 uniformly spaced times in [0, t_final].
std::vector<VariationalSample> sample_with_variations(const PhaseSpaceState& start, double t_final,
                                                      std::size_t n_intervals, const HamiltonianParams& params,
                                                      double tol = 1e-13);

/// Right-hand side f(z) of Hamilton's equations.
Eigen::Vector4d flow_vector(const PhaseSpaceState& s, const HamiltonianParams& params);

struct EventSpec {
  std::function<double(const PhaseSpaceState&)> g;
  int direction = 0;  // +1: g increasing through zero, -1: decreasing, 0: either
};

struct EventHit {
  std::size_t event = 0;
  double t = 0.0;
  PhaseSpaceState state;
  double action = 0.0;
};

/// All zero crossings of the event functions on (0, t_max], ordered in time.
/// Integration stops early once `max_hits` crossings have been recorded.
std::vector<EventHit> find_events(const PhaseSpaceState& start, double t_max, const HamiltonianParams& params,
                                  std::span<const EventSpec> events, std::size_t max_hits = 1'000'000,
                                  double tol = 1e-13);

struct SectionPlane {
  enum class Coordinate { X, Y };
  Coordinate coordinate = Coordinate::Y;  // plane coordinate = 0
  int momentum_sign = +1;                 // sign of the conjugate momentum at the crossing
};

/// Crossings of the plane by a sampled trajectory. Each bracketing sample pair
/// is re-integrated from the earlier sample so the points lie on the flow.
std::vector<PhaseSpaceState> poincare_section(const Trajectory& traj, const SectionPlane& plane,
                                              const HamiltonianParams& params);

}  // namespace scarbasis
