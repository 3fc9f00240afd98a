#include "scarbasis/integrator.hpp"

#include <boost/math/tools/roots.hpp>
#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace scarbasis {

namespace odeint = boost::numeric::odeint;

namespace {

using FlowVec = std::array<double, 5>;    // x, y, px, py, S
using TangentVec = std::array<double, 21>;  // FlowVec + row-major 4x4 STM

struct FlowRhs {
  double beta;
  void operator()(const FlowVec& z, FlowVec& dz, double /*t*/) const {
    const auto f = force(z[0], z[1], beta);
    dz[0] = z[2];
    dz[1] = z[3];
    dz[2] = f[0];
    dz[3] = f[1];
    dz[4] = z[2] * z[2] + z[3] * z[3];
  }
};

struct TangentRhs {
  double beta;
  void operator()(const TangentVec& z, TangentVec& dz, double /*t*/) const {
    const auto f = force(z[0], z[1], beta);
    dz[0] = z[2];
    dz[1] = z[3];
    dz[2] = f[0];
    dz[3] = f[1];
    dz[4] = z[2] * z[2] + z[3] * z[3];
    // d(Phi)/dt = A Phi with A = [[0, I], [-Hess V, 0]].
    const auto h = potential_hessian(z[0], z[1], beta);
    const double* phi = z.data() + 5;
    double* dphi = dz.data() + 5;
    for (int c = 0; c < 4; ++c) {
      const double r0 = phi[0 * 4 + c];
      const double r1 = phi[1 * 4 + c];
      dphi[0 * 4 + c] = phi[2 * 4 + c];
      dphi[1 * 4 + c] = phi[3 * 4 + c];
      dphi[2 * 4 + c] = -(h[0] * r0 + h[1] * r1);
      dphi[3 * 4 + c] = -(h[1] * r0 + h[2] * r1);
    }
  }
};

template <class Vec>
PhaseSpaceState state_of(const Vec& z) {
  return {z[0], z[1], z[2], z[3]};
}

FlowVec flow_vec(const PhaseSpaceState& s) { return {s.x, s.y, s.px, s.py, 0.0}; }

TangentVec tangent_vec(const PhaseSpaceState& s) {
  TangentVec z{};
  z[0] = s.x;
  z[1] = s.y;
  z[2] = s.px;
  z[3] = s.py;
  for (int i = 0; i < 4; ++i) z[5 + i * 4 + i] = 1.0;
  return z;
}

Eigen::Matrix4d stm_of(const TangentVec& z) {
  Eigen::Matrix4d m;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) m(r, c) = z[5 + r * 4 + c];
  return m;
}

// Step-size controlled driver around the Fehlberg 7(8) pair.
template <class Vec, class Rhs>
class Driver {
 public:
  Driver(Rhs rhs, double tol, double max_step, std::size_t max_steps)
      : rhs_(rhs),
        stepper_(odeint::make_controlled(tol, tol, odeint::runge_kutta_fehlberg78<Vec>())),
        max_step_(max_step),
        max_steps_(max_steps),
        dt_(std::min(0.01, max_step)) {}

  // One accepted step, never beyond t_limit.
  void step(Vec& z, double& t, double t_limit) {
    for (;;) {
      const double remaining = t_limit - t;
      const bool capped = dt_ >= remaining;
      double dt = capped ? remaining : dt_;
      const auto res = stepper_.try_step(rhs_, z, t, dt);
      if (res == odeint::success) {
        if (capped) t = t_limit;  // avoid round-off drift at the target time
        if (!capped) dt_ = std::min(dt, max_step_);
        if (++steps_ > max_steps_) throw IntegrationError("integrator: step budget exhausted");
        return;
      }
      dt_ = dt;
      if (dt_ < 1e-13 * std::max(1.0, std::abs(t))) {
        throw IntegrationError("integrator: step size underflow");
      }
    }
  }

  void advance(Vec& z, double& t, double t_target) {
    while (t < t_target) step(z, t, t_target);
  }

  // Single fixed step of length h from z (used for dense event location).
  Vec single(const Vec& z, double t, double h) const {
    Vec out;
    odeint::runge_kutta_fehlberg78<Vec> rk;
    rk.do_step(rhs_, z, t, out, h);
    return out;
  }

 private:
  Rhs rhs_;
  decltype(odeint::make_controlled(1.0, 1.0, odeint::runge_kutta_fehlberg78<Vec>())) stepper_;
  double max_step_;
  std::size_t max_steps_;
  double dt_;
  std::size_t steps_ = 0;
};

double inner_tolerance(double tol) { return std::clamp(tol * 1e-2, 1e-14, 1e-6); }

}  // namespace

Eigen::Vector4d flow_vector(const PhaseSpaceState& s, const HamiltonianParams& params) {
  const auto f = force(s.x, s.y, params.beta);
  return {s.px, s.py, f[0], f[1]};
}

Trajectory integrate(const PhaseSpaceState& start, double t_final, const HamiltonianParams& params,
                     const IntegratorOptions& opts) {
  params.validate();
  if (!(opts.tol > 0.0)) throw std::invalid_argument("integrate: tol must be positive");
  if (!(t_final >= 0.0)) throw std::invalid_argument("integrate: t_final must be non-negative");
  if (!start.finite()) throw std::invalid_argument("integrate: non-finite start state");

  Trajectory traj;
  traj.samples.push_back({0.0, start, 0.0, 0.0});
  if (t_final == 0.0) return traj;

  const double e0 = eval_hamiltonian(start, params);
  const double drift_scale = std::max(std::abs(e0), std::numeric_limits<double>::min());
  const auto n_out = static_cast<std::size_t>(std::ceil(t_final / opts.sample_dt - 1e-9));
  traj.samples.reserve(n_out + 1);

  Driver<FlowVec, FlowRhs> drv(FlowRhs{params.beta}, inner_tolerance(opts.tol), opts.max_step, opts.max_steps);
  FlowVec z = flow_vec(start);
  double t = 0.0;
  for (std::size_t k = 1; k <= n_out; ++k) {
    const double target = (k == n_out) ? t_final : static_cast<double>(k) * opts.sample_dt;
    drv.advance(z, t, target);
    const PhaseSpaceState s = state_of(z);
    if (!s.finite()) throw IntegrationError("integrate: non-finite state");
    if (std::abs(eval_hamiltonian(s, params) - e0) > opts.tol * drift_scale) {
      throw IntegrationError("integrate: energy drift exceeds tolerance");
    }
    traj.samples.push_back({t, s, z[4], 0.0});
  }
  return traj;
}

FlowResult flow_with_variations(const PhaseSpaceState& start, double t, const HamiltonianParams& params,
                                double tol) {
  Driver<TangentVec, TangentRhs> drv(TangentRhs{params.beta}, tol, 0.25, 50'000'000);
  TangentVec z = tangent_vec(start);
  double time = 0.0;
  drv.advance(z, time, t);
  return {state_of(z), z[4], stm_of(z)};
}

std::vector<VariationalSample> sample_with_variations(const PhaseSpaceState& start, double t_final,
                                                      std::size_t n_intervals, const HamiltonianParams& params,
                                                      double tol) {
  if (n_intervals == 0) throw std::invalid_argument("sample_with_variations: need at least one interval");
  Driver<TangentVec, TangentRhs> drv(TangentRhs{params.beta}, tol, 0.25, 50'000'000);
  TangentVec z = tangent_vec(start);
  double t = 0.0;
  std::vector<VariationalSample> out;
  out.reserve(n_intervals + 1);
  out.push_back({0.0, start, 0.0, Eigen::Matrix4d::Identity()});
  for (std::size_t k = 1; k <= n_intervals; ++k) {
    const double target = t_final * static_cast<double>(k) / static_cast<double>(n_intervals);
    drv.advance(z, t, target);
    out.push_back({t, state_of(z), z[4], stm_of(z)});
  }
  return out;
}

std::vector<EventHit> find_events(const PhaseSpaceState& start, double t_max, const HamiltonianParams& params,
                                  std::span<const EventSpec> events, std::size_t max_hits, double tol) {
  std::vector<EventHit> hits;
  if (events.empty() || !(t_max > 0.0)) return hits;

  Driver<FlowVec, FlowRhs> drv(FlowRhs{params.beta}, tol, 0.1, 50'000'000);
  FlowVec z = flow_vec(start);
  double t = 0.0;
  std::vector<double> g_prev(events.size());
  for (std::size_t e = 0; e < events.size(); ++e) g_prev[e] = events[e].g(start);

  std::vector<EventHit> step_hits;
  while (t < t_max && hits.size() < max_hits) {
    const FlowVec z0 = z;
    const double t0 = t;
    drv.step(z, t, t_max);
    const double h = t - t0;
    step_hits.clear();
    for (std::size_t e = 0; e < events.size(); ++e) {
      const double g1 = events[e].g(state_of(z));
      const double g0 = g_prev[e];
      g_prev[e] = g1;
      const bool crossed = (g0 < 0.0 && g1 >= 0.0) || (g0 > 0.0 && g1 <= 0.0);
      if (!crossed) continue;
      const int dir = g1 > g0 ? 1 : -1;
      if (events[e].direction != 0 && events[e].direction != dir) continue;

      const auto& g = events[e].g;
      auto along = [&](double s) { return g(state_of(drv.single(z0, t0, s))); };
      double s_root = h;
      if (g1 != 0.0) {
        boost::uintmax_t iters = 100;
        const auto bracket = boost::math::tools::toms748_solve(
            along, 0.0, h, g0, g1, boost::math::tools::eps_tolerance<double>(50), iters);
        s_root = 0.5 * (bracket.first + bracket.second);
      }
      const FlowVec zr = drv.single(z0, t0, s_root);
      step_hits.push_back({e, t0 + s_root, state_of(zr), zr[4]});
    }
    std::sort(step_hits.begin(), step_hits.end(), [](const EventHit& a, const EventHit& b) { return a.t < b.t; });
    for (const auto& hit : step_hits) {
      if (hits.size() >= max_hits) break;
      hits.push_back(hit);
    }
  }
  return hits;
}

std::vector<PhaseSpaceState> poincare_section(const Trajectory& traj, const SectionPlane& plane,
                                              const HamiltonianParams& params) {
  const bool on_y = plane.coordinate == SectionPlane::Coordinate::Y;
  auto coord = [on_y](const PhaseSpaceState& s) { return on_y ? s.y : s.x; };
  auto mom = [on_y](const PhaseSpaceState& s) { return on_y ? s.py : s.px; };
  const std::array<EventSpec, 1> ev = {EventSpec{coord, plane.momentum_sign > 0 ? +1 : -1}};
  std::vector<PhaseSpaceState> out;
  for (std::size_t k = 1; k < traj.size(); ++k) {
    const auto& a = traj.samples[k - 1];
    const auto& b = traj.samples[k];
    const double ga = coord(a.state);
    const double gb = coord(b.state);
    const bool crossed = (ga < 0.0 && gb >= 0.0) || (ga > 0.0 && gb <= 0.0);
    if (!crossed || (mom(b.state) > 0.0) != (plane.momentum_sign > 0)) continue;
    const auto hits = find_events(a.state, 1.5 * (b.t - a.t), params, ev, 1);
    if (!hits.empty()) out.push_back(hits.front().state);
  }
  return out;
}

}  // namespace scarbasis
