#include "scarbasis/periodic_orbit.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>

#include "scarbasis/symmetry.hpp"

namespace scarbasis {

namespace {

Eigen::Vector4d vec(const PhaseSpaceState& s) { return {s.x, s.y, s.px, s.py}; }
PhaseSpaceState state(const Eigen::Vector4d& v) { return {v(0), v(1), v(2), v(3)}; }

Eigen::Vector4d energy_gradient(const PhaseSpaceState& s, const HamiltonianParams& params) {
  const auto f = force(s.x, s.y, params.beta);
  return {-f[0], -f[1], s.px, s.py};
}

// omega(a, b) = a_q . b_p - a_p . b_q
double symplectic(const Eigen::Vector4d& a, const Eigen::Vector4d& b) {
  return a(0) * b(2) + a(1) * b(3) - a(2) * b(0) - a(3) * b(1);
}

// Symplectic basis (u, v) of the complement of span{f, grad H} at z.
std::pair<Eigen::Vector4d, Eigen::Vector4d> transversal_basis(const PhaseSpaceState& z,
                                                               const HamiltonianParams& params) {
  const Eigen::Vector4d f = flow_vector(z, params);
  const Eigen::Vector4d g = energy_gradient(z, params);
  const double wfg = symplectic(f, g);
  auto project = [&](const Eigen::Vector4d& e) -> Eigen::Vector4d {
    return e - (symplectic(e, g) / wfg) * f + (symplectic(e, f) / wfg) * g;
  };
  std::array<Eigen::Vector4d, 4> proj;
  int best = 0;
  for (int k = 0; k < 4; ++k) {
    proj[k] = project(Eigen::Vector4d::Unit(k));
    if (proj[k].norm() > proj[best].norm()) best = k;
  }
  const Eigen::Vector4d u = proj[best].normalized();
  int partner = -1;
  double partner_w = 0.0;
  for (int k = 0; k < 4; ++k) {
    if (k == best) continue;
    const double w = std::abs(symplectic(u, proj[k]));
    if (w > partner_w) {
      partner_w = w;
      partner = k;
    }
  }
  const Eigen::Vector4d v = proj[partner] / symplectic(u, proj[partner]);
  return {u, v};
}

std::complex<double> lagrangian_det(const PhaseSpaceState& z, const Eigen::Vector4d& xi,
                                    const HamiltonianParams& params) {
  const Eigen::Vector4d f = flow_vector(z, params).normalized();
  const Eigen::Vector4d x = xi.normalized();
  const std::complex<double> a(f(0), f(2));
  const std::complex<double> b(x(0), x(2));
  const std::complex<double> c(f(1), f(3));
  const std::complex<double> d(x(1), x(3));
  return a * d - b * c;
}

}  // namespace

MonodromyResult compute_monodromy(const PeriodicOrbit& po, const HamiltonianParams& params) {
  const FlowResult fr = flow_with_variations(po.initial_state, po.period, params);
  const auto [u, v] = transversal_basis(po.initial_state, params);
  const Eigen::Vector4d mu_ = fr.stm * u;
  const Eigen::Vector4d mv = fr.stm * v;

  MonodromyResult res;
  res.full = fr.stm;
  res.transversal_matrix << symplectic(mu_, v), symplectic(mv, v), symplectic(u, mu_), symplectic(u, mv);
  const Eigen::Matrix2d& m = res.transversal_matrix;
  const double tr = m.trace();
  res.low_confidence = std::abs(std::abs(tr) - 2.0) < 1e-6;
  if (std::abs(tr) > 2.0) {
    const double big = 0.5 * (std::abs(tr) + std::sqrt(tr * tr - 4.0));
    const double sign = tr > 0.0 ? 1.0 : -1.0;
    res.eigenvalues = {sign * big, sign / big};
    res.lambda = std::log(big) / po.period;
    res.hyperbolic_with_reflection = tr < 0.0;
    const double lam = res.eigenvalues(0);
    Eigen::Vector2d e1(m(0, 1), lam - m(0, 0));
    Eigen::Vector2d e2(lam - m(1, 1), m(1, 0));
    const Eigen::Vector2d e = e1.norm() > e2.norm() ? e1 : e2;
    res.unstable_direction = (e(0) * u + e(1) * v).normalized();
  } else {
    // Elliptic or marginal: unit-modulus pair, no stretching.
    res.eigenvalues = {tr / 2.0, tr / 2.0};
    res.lambda = 0.0;
    res.low_confidence = true;
    res.unstable_direction = u;
  }
  return res;
}

WindingResult compute_winding(const PeriodicOrbit& po, const HamiltonianParams& params,
                              std::size_t samples_per_period) {
  const MonodromyResult mono = compute_monodromy(po, params);
  std::size_t n = std::max<std::size_t>(samples_per_period, 2000);
  for (int attempt = 0; attempt < 6; ++attempt, n *= 2) {
    const auto samples = sample_with_variations(po.initial_state, po.period, n, params);
    WindingResult out;
    out.times.reserve(samples.size());
    out.mu_t.reserve(samples.size());
    double prev_arg = 0.0;
    double accumulated = 0.0;
    bool resolved = true;
    for (std::size_t k = 0; k < samples.size(); ++k) {
      const Eigen::Vector4d xi = samples[k].stm * mono.unstable_direction;
      const double arg = std::arg(lagrangian_det(samples[k].state, xi, params));
      if (k > 0) {
        double delta = arg - prev_arg;
        delta -= 2.0 * std::numbers::pi * std::round(delta / (2.0 * std::numbers::pi));
        if (std::abs(delta) > 0.5 * std::numbers::pi) {
          resolved = false;
          break;
        }
        accumulated += delta;
      }
      prev_arg = arg;
      out.times.push_back(samples[k].t);
      out.mu_t.push_back(-accumulated / std::numbers::pi);
    }
    if (!resolved) continue;
    const double mu_end = out.mu_t.back();
    out.mu = static_cast<int>(std::lround(mu_end));
    if (std::abs(mu_end - out.mu) > 1e-3) {
      throw WindingResolutionError("compute_winding: non-integer winding " + std::to_string(mu_end));
    }
    return out;
  }
  throw WindingResolutionError("compute_winding: angle tracking did not resolve");
}

Trajectory orbit_path(const PeriodicOrbit& po, const HamiltonianParams& params, std::size_t n_intervals) {
  if (n_intervals == 0) throw std::invalid_argument("orbit_path: need at least one interval");
  // Winding samples on a mesh that is a multiple of the output mesh.
  const std::size_t fine = n_intervals * ((2000 + n_intervals - 1) / n_intervals);
  const WindingResult w = compute_winding(po, params, fine);
  const std::size_t stride = (w.times.size() - 1) / n_intervals;
  Trajectory traj;
  traj.samples.reserve(n_intervals + 1);
  const auto samples = sample_with_variations(po.initial_state, po.period, n_intervals, params);
  for (std::size_t k = 0; k <= n_intervals; ++k) {
    const auto& s = samples[k];
    traj.samples.push_back({s.t, s.state, s.action, w.mu_t[k * stride]});
  }
  return traj;
}

double relevance(const PeriodicOrbit& po) { return po.lambda * 0.75 * po.action * po.n_s * po.n_t; }

SymmetryCounts classify_symmetry(const PeriodicOrbit& po, const HamiltonianParams& params) {
  constexpr std::size_t kPoints = 4000;
  constexpr std::size_t kProbes = 64;
  const auto samples = sample_with_variations(po.initial_state, po.period, kPoints, params, 1e-12);
  std::vector<Eigen::Vector4d> pts;
  pts.reserve(samples.size());
  double spacing = 0.0;
  for (const auto& s : samples) {
    pts.push_back(vec(s.state));
    if (pts.size() > 1) spacing = std::max(spacing, (pts.back() - pts[pts.size() - 2]).norm());
  }
  const double thr = 2.0 * spacing + 1e-6;
  auto on_orbit = [&](const Eigen::Vector4d& z) {
    return std::any_of(pts.begin(), pts.end(), [&](const Eigen::Vector4d& p) { return (p - z).norm() < thr; });
  };
  auto maps_onto = [&](GroupElement g, bool reversed) {
    for (std::size_t k = 0; k < kProbes; ++k) {
      PhaseSpaceState s = apply(g, samples[(k * kPoints) / kProbes].state);
      if (reversed) {
        s.px = -s.px;
        s.py = -s.py;
      }
      if (!on_orbit(vec(s))) return false;
    }
    return true;
  };
  int stabilizer = 0;
  for (GroupElement g : kGroupElements) {
    if (maps_onto(g, false) || maps_onto(g, true)) ++stabilizer;
  }
  SymmetryCounts c;
  c.n_s = 8 / std::max(stabilizer, 1);
  c.n_t = maps_onto(GroupElement::Identity, true) ? 1 : 2;
  return c;
}

double minimal_period(const PhaseSpaceState& z0, double period, const HamiltonianParams& params, int max_divisor,
                      double tol) {
  for (int d = max_divisor; d >= 2; --d) {
    const auto traj = integrate(z0, period / d, params, {.tol = 1e-9, .sample_dt = period / d});
    const Eigen::Vector4d diff = vec(traj.back().state) - vec(z0);
    if (diff.norm() < tol) return period / d;
  }
  return period;
}

RefineReport refine_periodic_orbit(const PhaseSpaceState& guess, double period_guess, const HamiltonianParams& params,
                                   const RefineOptions& opts) {
  params.validate();
  if (!guess.finite() || !(period_guess > 0.0)) throw std::invalid_argument("refine_periodic_orbit: bad guess");

  const Eigen::Vector4d z_ref = vec(guess);
  const Eigen::Vector4d f_ref = flow_vector(guess, params);
  Eigen::Vector4d z = z_ref;
  double period = period_guess;

  auto residual = [&](const Eigen::Vector4d& zz, double tt, FlowResult* fr_out) {
    const FlowResult fr = flow_with_variations(state(zz), tt, params, opts.integration_tol);
    Eigen::Matrix<double, 6, 1> r;
    r.head<4>() = vec(fr.state) - zz;
    r(4) = eval_hamiltonian(state(zz), params) - opts.energy;
    r(5) = f_ref.dot(zz - z_ref);
    if (fr_out) *fr_out = fr;
    return r;
  };

  RefineReport report;
  FlowResult fr;
  Eigen::Matrix<double, 6, 1> r = residual(z, period, &fr);
  int iter = 0;
  for (;; ++iter) {
    const double closure = r.head<4>().norm();
    if (closure < opts.closure_tol && std::abs(r(4)) < opts.closure_tol) break;
    if (iter >= opts.max_iterations) {
      throw RefinementError("refine_periodic_orbit: no convergence (closure " + std::to_string(closure) + ")");
    }
    Eigen::Matrix<double, 6, 5> jac = Eigen::Matrix<double, 6, 5>::Zero();
    jac.block<4, 4>(0, 0) = fr.stm - Eigen::Matrix4d::Identity();
    jac.block<4, 1>(0, 4) = flow_vector(fr.state, params);
    jac.block<1, 4>(4, 0) = energy_gradient(state(z), params).transpose();
    jac.block<1, 4>(5, 0) = f_ref.transpose();
    Eigen::JacobiSVD<Eigen::Matrix<double, 6, 5>> svd(jac, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    if (sv(4) < 1e-13 * sv(0)) throw DegenerateGuessError("refine_periodic_orbit: singular Newton system");
    const Eigen::Matrix<double, 5, 1> step = svd.solve(-r);

    double scale = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 12; ++ls, scale *= 0.5) {
      const Eigen::Vector4d z_try = z + scale * step.head<4>();
      const double t_try = period + scale * step(4);
      if (!(t_try > 0.0)) continue;
      FlowResult fr_try;
      Eigen::Matrix<double, 6, 1> r_try;
      try {
        r_try = residual(z_try, t_try, &fr_try);
      } catch (const IntegrationError&) {
        continue;
      }
      if (r_try.norm() < r.norm() || ls == 11) {
        z = z_try;
        period = t_try;
        r = r_try;
        fr = fr_try;
        accepted = true;
        break;
      }
    }
    if (!accepted) throw RefinementError("refine_periodic_orbit: line search failed");
  }

  PeriodicOrbit& po = report.orbit;
  po.initial_state = state(z);
  po.period = period;
  po.action = fr.action;
  po.closure_error = r.head<4>().norm();
  const MonodromyResult mono = compute_monodromy(po, params);
  if (std::abs(mono.transversal_matrix.trace()) < 2.0 + 1e-6) {
    throw RefinementError("refine_periodic_orbit: near-marginal or stable orbit rejected");
  }
  po.lambda = mono.lambda;
  po.mu = compute_winding(po, params).mu;
  if (opts.classify_symmetry) {
    const SymmetryCounts c = classify_symmetry(po, params);
    po.n_s = c.n_s;
    po.n_t = c.n_t;
  }
  report.iterations = iter;
  return report;
}

std::vector<PeriodicOrbit> read_orbit_table(std::istream& in) {
  std::vector<PeriodicOrbit> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    PeriodicOrbit po;
    if (!(ls >> po.id >> po.action >> po.lambda >> po.mu >> po.n_s >> po.n_t >> po.initial_state.x >>
          po.initial_state.y >> po.initial_state.px >> po.initial_state.py >> po.period)) {
      throw std::runtime_error("orbit table: malformed line " + std::to_string(line_no));
    }
    out.push_back(po);
  }
  return out;
}

std::vector<PeriodicOrbit> read_orbit_table(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("orbit table: cannot open " + file.string());
  return read_orbit_table(in);
}

void write_orbit_table(std::ostream& out, const std::vector<PeriodicOrbit>& orbits) {
  out << "# id S lambda mu N_s N_t x0 y0 px0 py0 T  (E = 1)\n";
  out << std::setprecision(17);
  for (const auto& po : orbits) {
    out << po.id << ' ' << po.action << ' ' << po.lambda << ' ' << po.mu << ' ' << po.n_s << ' ' << po.n_t << ' '
        << po.initial_state.x << ' ' << po.initial_state.y << ' ' << po.initial_state.px << ' '
        << po.initial_state.py << ' ' << po.period << '\n';
  }
}

void write_orbit_table(const std::filesystem::path& file, const std::vector<PeriodicOrbit>& orbits) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("orbit table: cannot write " + file.string());
  write_orbit_table(out, orbits);
}

const PeriodicOrbit& find_orbit(const std::vector<PeriodicOrbit>& orbits, int id) {
  for (const auto& po : orbits)
    if (po.id == id) return po;
  throw std::out_of_range("no periodic orbit with id " + std::to_string(id));
}

}  // namespace scarbasis
