#include "scarbasis/wavefunctions.hpp"

#include <fftw3.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <numbers>
#include <ostream>

namespace scarbasis {

namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

bool power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

void require_same_grid(const WaveFunction& a, const WaveFunction& b) {
  if (!(a.grid() == b.grid())) throw GridError("wave functions live on different grids");
}

}  // namespace

// Grid2D ------------------------------------------------------------------------

void Grid2D::validate() const {
  if (!power_of_two(nx) || !power_of_two(ny)) throw GridError("grid point counts must be powers of two");
  if (!(x_extent > 0.0) || !(y_extent > 0.0)) throw GridError("grid extents must be positive");
}

Grid2D Grid2D::for_energy(double e, const HamiltonianParams& params, int min_points) {
  if (!(e > 0.0)) throw std::domain_error("Grid2D::for_energy: energy must be positive");
  params.validate();
  const double half = 1.4 * std::pow(4.0 * e / params.beta, 0.25);
  const double p_max = std::sqrt(2.0 * e * 1.2);
  const double dx_max = (2.0 * std::numbers::pi * params.hbar / p_max) / 6.0;
  const auto needed = static_cast<unsigned>(std::ceil(2.0 * half / dx_max));
  const int n = static_cast<int>(std::bit_ceil(std::max(needed, static_cast<unsigned>(min_points))));
  // Rounding n up to a power of two leaves resolution to spare; spend it on a
  // wider box. Squeezed frozen Gaussians in the channels carry small
  // high-energy tails that otherwise reach the boundary.
  const double widened = 0.45 * n * dx_max;
  return {n, n, std::max(half, widened), std::max(half, widened)};
}

// WaveFunction ------------------------------------------------------------------

WaveFunction::WaveFunction(const Grid2D& grid) : grid_(grid), values_(Eigen::VectorXcd::Zero(grid.size())) {
  grid_.validate();
}

WaveFunction::WaveFunction(const Grid2D& grid, Eigen::VectorXcd values) : grid_(grid), values_(std::move(values)) {
  grid_.validate();
  if (static_cast<std::size_t>(values_.size()) != grid_.size()) throw GridError("value count does not match grid");
}

double WaveFunction::norm() const { return std::sqrt(values_.squaredNorm() * grid_.cell_area()); }

WaveFunction& WaveFunction::normalize() {
  const double n = norm();
  if (!(n > 0.0) || !std::isfinite(n)) throw std::runtime_error("cannot normalize a null or non-finite wave function");
  values_ /= n;
  return *this;
}

bool WaveFunction::finite() const { return values_.allFinite(); }

cplx inner_product(const WaveFunction& a, const WaveFunction& b) {
  require_same_grid(a, b);
  return a.values().dot(b.values()) * a.grid().cell_area();
}

// GridHamiltonian -----------------------------------------------------------------

struct GridHamiltonian::PhaseCache {
  struct Entry {
    double h;
    Eigen::VectorXcd half_potential;
    Eigen::VectorXcd kinetic;
  };
  std::vector<Entry> entries;
};

GridHamiltonian::GridHamiltonian(const Grid2D& grid, const HamiltonianParams& params)
    : grid_(grid), params_(params), cache_(std::make_unique<PhaseCache>()) {
  grid_.validate();
  params_.validate();
  const std::size_t n = grid_.size();
  potential_.resize(static_cast<Eigen::Index>(n));
  kinetic_.resize(static_cast<Eigen::Index>(n));
  const double dkx = 2.0 * std::numbers::pi / (grid_.nx * grid_.dx());
  const double dky = 2.0 * std::numbers::pi / (grid_.ny * grid_.dy());
  const double h2 = params_.hbar * params_.hbar;
  for (int j = 0; j < grid_.ny; ++j) {
    const double ky = dky * (j < grid_.ny / 2 ? j : j - grid_.ny);
    for (int i = 0; i < grid_.nx; ++i) {
      const double kx = dkx * (i < grid_.nx / 2 ? i : i - grid_.nx);
      const auto idx = static_cast<Eigen::Index>(grid_.index(i, j));
      potential_[idx] = potential(grid_.x(i), grid_.y(j), params_.beta);
      kinetic_[idx] = 0.5 * h2 * (kx * kx + ky * ky);
    }
  }
  std::lock_guard lock(planner_mutex());
  auto* buf = fftw_alloc_complex(n);
  buffer_ = buf;
  plan_forward_ = fftw_plan_dft_2d(grid_.ny, grid_.nx, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
  plan_backward_ = fftw_plan_dft_2d(grid_.ny, grid_.nx, buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);
}

GridHamiltonian::~GridHamiltonian() {
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(plan_forward_));
  fftw_destroy_plan(static_cast<fftw_plan>(plan_backward_));
  fftw_free(buffer_);
}

void GridHamiltonian::fft_forward() { fftw_execute(static_cast<fftw_plan>(plan_forward_)); }
void GridHamiltonian::fft_backward() { fftw_execute(static_cast<fftw_plan>(plan_backward_)); }

Eigen::VectorXcd GridHamiltonian::apply(const Eigen::VectorXcd& psi) {
  const auto n = static_cast<Eigen::Index>(grid_.size());
  if (psi.size() != n) throw GridError("GridHamiltonian::apply: size mismatch");
  Eigen::Map<Eigen::VectorXcd> buf(reinterpret_cast<cplx*>(buffer_), n);
  buf = psi;
  fft_forward();
  buf.array() *= kinetic_.array() / static_cast<double>(n);
  fft_backward();
  Eigen::VectorXcd out = buf;
  out.array() += potential_.array() * psi.array();
  return out;
}

WaveFunction GridHamiltonian::apply(const WaveFunction& psi) {
  if (!(psi.grid() == grid_)) throw GridError("GridHamiltonian::apply: grid mismatch");
  return WaveFunction(grid_, apply(psi.values()));
}

cplx GridHamiltonian::matrix_element(const WaveFunction& a, const WaveFunction& b) {
  require_same_grid(a, b);
  if (!(a.grid() == grid_)) throw GridError("GridHamiltonian::matrix_element: grid mismatch");
  return a.values().dot(apply(b.values())) * grid_.cell_area();
}

double GridHamiltonian::dispersion(const WaveFunction& psi, double e_ref) {
  if (!(psi.grid() == grid_)) throw GridError("GridHamiltonian::dispersion: grid mismatch");
  Eigen::VectorXcd r = apply(psi.values());
  r -= e_ref * psi.values();
  return std::sqrt(r.squaredNorm() * grid_.cell_area());
}

void GridHamiltonian::strang(Eigen::VectorXcd& psi, double h) {
  auto& entries = cache_->entries;
  auto it = std::find_if(entries.begin(), entries.end(), [h](const PhaseCache::Entry& e) { return e.h == h; });
  if (it == entries.end()) {
    if (entries.size() >= 8) entries.erase(entries.begin());
    PhaseCache::Entry e{h, {}, {}};
    const cplx minus_i_over_hbar(0.0, -1.0 / params_.hbar);
    e.half_potential = (minus_i_over_hbar * 0.5 * h * potential_.cast<cplx>()).array().exp();
    const double n = static_cast<double>(grid_.size());
    e.kinetic = (minus_i_over_hbar * h * kinetic_.cast<cplx>()).array().exp() / n;
    entries.push_back(std::move(e));
    it = std::prev(entries.end());
  }
  const auto n = static_cast<Eigen::Index>(grid_.size());
  Eigen::Map<Eigen::VectorXcd> buf(reinterpret_cast<cplx*>(buffer_), n);
  buf = psi.cwiseProduct(it->half_potential);
  fft_forward();
  buf.array() *= it->kinetic.array();
  fft_backward();
  psi = buf.cwiseProduct(it->half_potential);
}

void GridHamiltonian::step(Eigen::VectorXcd& psi, double h, int order) {
  if (order == 2) {
    strang(psi, h);
  } else if (order == 4) {
    const double c = std::cbrt(2.0);
    const double w1 = 1.0 / (2.0 - c);
    const double w0 = -c / (2.0 - c);
    strang(psi, w1 * h);
    strang(psi, w0 * h);
    strang(psi, w1 * h);
  } else {
    throw std::invalid_argument("propagator order must be 2 or 4");
  }
}

void GridHamiltonian::propagate(Eigen::VectorXcd& psi, double t, const PropagatorConfig& config) {
  if (!(config.dt > 0.0)) throw std::invalid_argument("propagate: dt must be positive");
  if (t == 0.0) return;
  const auto steps = static_cast<long>(std::ceil(std::abs(t) / config.dt - 1e-12));
  const double h = t / static_cast<double>(steps);
  for (long k = 0; k < steps; ++k) step(psi, h, config.order);
  check_leakage(psi, config.leakage_tol);
}

void GridHamiltonian::check_leakage(const Eigen::VectorXcd& psi, double tol) const {
  const int bx = std::max(2, grid_.nx / 64);
  const int by = std::max(2, grid_.ny / 64);
  double band = 0.0;
  for (int j = 0; j < grid_.ny; ++j) {
    const bool edge_row = j < by || j >= grid_.ny - by;
    for (int i = 0; i < grid_.nx; ++i) {
      if (edge_row || i < bx || i >= grid_.nx - bx) band += std::norm(psi[static_cast<Eigen::Index>(grid_.index(i, j))]);
    }
  }
  const double total = psi.squaredNorm();
  if (total > 0.0 && band / total > tol) {
    std::ostringstream msg;
    msg << "wave function reaches the grid boundary (band probability " << std::scientific << band / total << ")";
    throw LeakageError(msg.str());
  }
}

cplx h_element(const WaveFunction& a, const WaveFunction& b, const HamiltonianParams& params) {
  require_same_grid(a, b);
  GridHamiltonian h(a.grid(), params);
  return h.matrix_element(a, b);
}

double energy_dispersion(const WaveFunction& psi, double e_ref, const HamiltonianParams& params) {
  GridHamiltonian h(psi.grid(), params);
  return h.dispersion(psi, e_ref);
}

WaveFunction propagate(const WaveFunction& psi, double t, const HamiltonianParams& params,
                       const PropagatorConfig& config) {
  GridHamiltonian h(psi.grid(), params);
  Eigen::VectorXcd v = psi.values();
  h.propagate(v, t, config);
  return WaveFunction(psi.grid(), std::move(v));
}

// Symmetry ------------------------------------------------------------------------

WaveFunction apply_group(GroupElement g, const WaveFunction& psi) {
  const Grid2D& grid = psi.grid();
  const bool needs_square =
      g == GroupElement::Rot90 || g == GroupElement::Rot270 || g == GroupElement::ReflectDiag ||
      g == GroupElement::ReflectAntiDiag;
  if (needs_square && !grid.square()) throw GridError("apply_group: operation requires a square grid");
  // Source point g^{-1} q; g is orthogonal so g^{-1} = g^T. Work in doubled
  // centred coordinates u = 2i - (n - 1), which are odd integers.
  const Eigen::Matrix2d m = matrix_of(g).transpose();
  const int mi[4] = {static_cast<int>(m(0, 0)), static_cast<int>(m(0, 1)), static_cast<int>(m(1, 0)),
                     static_cast<int>(m(1, 1))};
  WaveFunction out(grid);
  for (int j = 0; j < grid.ny; ++j) {
    const int v = 2 * j - (grid.ny - 1);
    for (int i = 0; i < grid.nx; ++i) {
      const int u = 2 * i - (grid.nx - 1);
      const int us = mi[0] * u + mi[1] * v;
      const int vs = mi[2] * u + mi[3] * v;
      out.at(i, j) = psi.at((us + grid.nx - 1) / 2, (vs + grid.ny - 1) / 2);
    }
  }
  return out;
}

WaveFunction project_irrep(const WaveFunction& psi, Irrep irrep) {
  WaveFunction out(psi.grid());
  int terms = 0;
  for (GroupElement g : kGroupElements) {
    const double chi = character(irrep, g);
    if (chi == 0.0) continue;
    ++terms;
    if (g == GroupElement::Identity) {
      out.values() += psi.values();
    } else {
      out.values() += chi * apply_group(g, psi).values();
    }
  }
  out.values() /= static_cast<double>(terms);
  return out;
}

double symmetry_defect(const WaveFunction& psi, Irrep irrep) {
  const double n = psi.values().norm();
  double worst = 0.0;
  for (GroupElement g : kGroupElements) {
    const double chi = character(irrep, g);
    if (chi == 0.0 || g == GroupElement::Identity) continue;
    worst = std::max(worst, (apply_group(g, psi).values() - chi * psi.values()).norm() / n);
  }
  return worst;
}

// Semiclassical ingredients ------------------------------------------------------

namespace {

// Adds weight * exp{-alpha|q-q0|^2 + (i/hbar) p0.(q-q0)} on the window where the
// envelope exceeds e^{-40}.
void add_gaussian(Eigen::VectorXcd& values, const Grid2D& grid, const PhaseSpaceState& z, cplx weight, double alpha,
                  double hbar, std::vector<cplx>& gx, std::vector<cplx>& gy) {
  const double radius = std::sqrt(40.0 / alpha);
  const int i0 = std::max(0, static_cast<int>(std::floor((z.x - radius + grid.x_extent) / grid.dx())));
  const int i1 = std::min(grid.nx - 1, static_cast<int>(std::ceil((z.x + radius + grid.x_extent) / grid.dx())));
  const int j0 = std::max(0, static_cast<int>(std::floor((z.y - radius + grid.y_extent) / grid.dy())));
  const int j1 = std::min(grid.ny - 1, static_cast<int>(std::ceil((z.y + radius + grid.y_extent) / grid.dy())));
  gx.resize(static_cast<std::size_t>(std::max(0, i1 - i0 + 1)));
  gy.resize(static_cast<std::size_t>(std::max(0, j1 - j0 + 1)));
  for (int i = i0; i <= i1; ++i) {
    const double d = grid.x(i) - z.x;
    gx[i - i0] = std::exp(cplx(-alpha * d * d, z.px * d / hbar));
  }
  for (int j = j0; j <= j1; ++j) {
    const double d = grid.y(j) - z.y;
    gy[j - j0] = weight * std::exp(cplx(-alpha * d * d, z.py * d / hbar));
  }
  for (int j = j0; j <= j1; ++j) {
    cplx* row = values.data() + grid.index(0, j);
    const cplx wy = gy[j - j0];
    for (int i = i0; i <= i1; ++i) row[i] += wy * gx[i - i0];
  }
}

void require_coverage(const Grid2D& grid, const PhaseSpaceState& z, double alpha) {
  // Envelope below e^{-36}, i.e. under double rounding, at the boundary.
  const double margin = std::sqrt(36.0 / alpha);
  if (std::abs(z.x) + margin > grid.x_extent || std::abs(z.y) + margin > grid.y_extent) {
    throw GridError("Gaussian centre too close to the grid boundary");
  }
}

}  // namespace

WaveFunction frozen_gaussian(const Grid2D& grid, const PhaseSpaceState& point, double gamma, double alpha,
                             double hbar) {
  require_coverage(grid, point, alpha);
  WaveFunction wf(grid);
  std::vector<cplx> gx, gy;
  add_gaussian(wf.values(), grid, point, std::exp(cplx(0.0, gamma)), alpha, hbar, gx, gy);
  wf.normalize();
  return wf;
}

std::vector<double> phase_along_orbit(const Trajectory& path, double hbar) {
  std::vector<double> gamma;
  gamma.reserve(path.size());
  for (const auto& s : path.samples) gamma.push_back(s.action / hbar - 0.5 * std::numbers::pi * s.winding);
  return gamma;
}

Trajectory scaled_orbit_path(const PeriodicOrbit& po, double e, const HamiltonianParams& params,
                             const TubeOptions& opts) {
  const double period = scale_time(po.period, 1.0, e);
  const double p_max = std::sqrt(2.0 * e);
  const double by_phase = 2.0 * e * period / opts.max_phase_step;
  const double by_shift = period * p_max * std::sqrt(opts.alpha) / opts.max_shift;
  const auto n = static_cast<std::size_t>(
      std::ceil(std::max({static_cast<double>(opts.min_steps), by_phase, by_shift})));
  Trajectory path = orbit_path(po, params, n);
  for (auto& s : path.samples) {
    s.t = scale_time(s.t, 1.0, e);
    s.state = scale_state(s.state, 1.0, e);
    s.action = scale_action(s.action, 1.0, e);
  }
  return path;
}

WaveFunction tube_function(const PeriodicOrbit& po, const BSLevel& level, const Grid2D& grid,
                           const HamiltonianParams& params, const TubeOptions& opts) {
  const Trajectory path = scaled_orbit_path(po, level.energy, params, opts);
  const std::vector<double> gamma = phase_along_orbit(path, params.hbar);
  WaveFunction wf(grid);
  std::vector<cplx> gx, gy;
  // Periodic integrand: equal weights over one period (the last sample repeats the first).
  const std::size_t n = path.size() - 1;
  const double w = path.back().t / static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto& z = path.samples[k].state;
    require_coverage(grid, z, opts.alpha);
    add_gaussian(wf.values(), grid, z, w * std::exp(cplx(0.0, gamma[k])), opts.alpha, params.hbar, gx, gy);
  }
  const double raw = wf.norm();
  WaveFunction proj = project_irrep(wf, level.irrep);
  const double kept = proj.norm();
  if (!(kept > 1e-8 * raw)) {
    throw NullProjectionError("tube function of orbit " + std::to_string(po.id) + " has no " +
                              std::string(to_string(level.irrep)) + " component");
  }
  // Rotate the global phase so that the function is as real as possible, then keep the real part.
  const cplx s = proj.values().cwiseProduct(proj.values()).sum();
  const cplx rot = std::abs(s) > 0.0 ? std::exp(cplx(0.0, -0.5 * std::arg(s))) : cplx(1.0);
  proj.values() = (rot * proj.values()).real().cast<cplx>();
  return proj.normalize();
}

double mean_lyapunov(double e) { return 0.3848 * std::pow(e, 0.25); }

double section_area(double e, Irrep irrep) {
  return (is_two_dimensional(irrep) ? 11.0555 : 5.5278) * std::pow(e, 0.75);
}

double ehrenfest_time(double e, Irrep irrep, double hbar) {
  if (!(e > 0.0)) throw std::domain_error("ehrenfest_time: energy must be positive");
  return std::log(section_area(e, irrep) / hbar) / (2.0 * mean_lyapunov(e));
}

double semiclassical_dispersion(double lambda, double t_e, double hbar) {
  constexpr double s1 = 1.06078;
  const double s2 = std::numbers::pi / std::numbers::sqrt2 - s1;
  const double lt = lambda * t_e;
  return 0.5 * std::numbers::pi * hbar * lambda * (s2 + lt) / ((s1 + lt) * (s2 + lt) + s2 * s2);
}

ScarFunction scar_function(const WaveFunction& tube, const BSLevel& level, double t_e, GridHamiltonian& h,
                           const PropagatorConfig& config) {
  ScarFunction out;
  out.orbit_id = level.orbit_id;
  out.n = level.n;
  out.irrep = level.irrep;
  out.bs_energy = level.energy;
  out.ehrenfest_time = std::max(t_e, 0.0);
  out.tube_sigma = h.dispersion(tube, level.energy);
  if (!(t_e > 0.0)) {
    out.wf = tube;
    out.sigma = out.tube_sigma;
    return out;
  }
  // Real tube and real H: the integrand at -t is the conjugate of that at +t,
  // so the symmetric window reduces to 2 Re over [0, T_E].
  const double dt_cap = std::min(config.dt, std::numbers::pi / (8.0 * std::max(level.energy, 1e-12)));
  const auto m = static_cast<long>(std::ceil(t_e / dt_cap));
  const double dt = t_e / static_cast<double>(m);
  Eigen::VectorXcd psi = tube.values();
  Eigen::VectorXd acc = dt * tube.values().real();
  for (long k = 1; k < m; ++k) {
    h.step(psi, dt, config.order);
    const double t = k * dt;
    const double window = std::cos(0.5 * std::numbers::pi * t / t_e);
    acc += (2.0 * dt * window) * (std::exp(cplx(0.0, level.energy * t / h.params().hbar)) * psi).real();
  }
  h.check_leakage(psi, config.leakage_tol);
  out.wf = WaveFunction(tube.grid(), acc.cast<cplx>());
  out.wf.normalize();
  out.sigma = h.dispersion(out.wf, level.energy);
  return out;
}

// I/O -------------------------------------------------------------------------------

namespace {

template <class T>
void put(std::ostream& out, T v) {
  static_assert(std::endian::native == std::endian::little, "snapshot I/O assumes a little-endian host");
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("snapshot: truncated file");
  return v;
}

}  // namespace

void write_snapshot(const std::filesystem::path& file, const WaveFunction& psi, const SnapshotMeta& meta) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("snapshot: cannot write " + file.string());
  out.write("SCWF", 4);
  put<std::uint32_t>(out, 1);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(psi.grid().nx));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(psi.grid().ny));
  put<double>(out, psi.grid().x_extent);
  put<double>(out, psi.grid().y_extent);
  put<double>(out, meta.e_ref);
  put<std::int32_t>(out, meta.orbit_id);
  put<std::int32_t>(out, meta.n);
  put<std::int32_t>(out, static_cast<std::int32_t>(meta.irrep));
  put<double>(out, meta.sigma);
  for (const cplx& v : psi.values()) {
    put<float>(out, static_cast<float>(v.real()));
    put<float>(out, static_cast<float>(v.imag()));
  }
}

WaveFunction read_snapshot(const std::filesystem::path& file, SnapshotMeta* meta) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("snapshot: cannot open " + file.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "SCWF", 4) != 0) throw std::runtime_error("snapshot: bad magic");
  if (get<std::uint32_t>(in) != 1) throw std::runtime_error("snapshot: unsupported version");
  Grid2D grid;
  grid.nx = static_cast<int>(get<std::uint32_t>(in));
  grid.ny = static_cast<int>(get<std::uint32_t>(in));
  grid.x_extent = get<double>(in);
  grid.y_extent = get<double>(in);
  SnapshotMeta m;
  m.e_ref = get<double>(in);
  m.orbit_id = get<std::int32_t>(in);
  m.n = get<std::int32_t>(in);
  const auto irrep = get<std::int32_t>(in);
  if (irrep < 0 || irrep > 5) throw std::runtime_error("snapshot: bad irrep tag");
  m.irrep = static_cast<Irrep>(irrep);
  m.sigma = get<double>(in);
  grid.validate();
  Eigen::VectorXcd values(static_cast<Eigen::Index>(grid.size()));
  for (auto& v : values) {
    const float re = get<float>(in);
    const float im = get<float>(in);
    v = cplx(re, im);
  }
  if (meta) *meta = m;
  return WaveFunction(grid, std::move(values));
}

void write_density_csv(std::ostream& out, const WaveFunction& psi, int stride) {
  const Grid2D& g = psi.grid();
  stride = std::max(stride, 1);
  out << "x,y,density\n" << std::setprecision(17);
  for (int j = 0; j < g.ny; j += stride)
    for (int i = 0; i < g.nx; i += stride) out << g.x(i) << ',' << g.y(j) << ',' << std::norm(psi.at(i, j)) << '\n';
}

std::vector<double> sample_along_path(const WaveFunction& psi, const Trajectory& path) {
  // Bicubic (Catmull-Rom) interpolation of the real part.
  const Grid2D& g = psi.grid();
  auto cr = [](double p0, double p1, double p2, double p3, double t) {
    return p1 + 0.5 * t * (p2 - p0 + t * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 + t * (3.0 * (p1 - p2) + p3 - p0)));
  };
  std::vector<double> out;
  out.reserve(path.size());
  for (const auto& s : path.samples) {
    const double fx = (s.state.x + g.x_extent) / g.dx() - 0.5;
    const double fy = (s.state.y + g.y_extent) / g.dy() - 0.5;
    const int ix = static_cast<int>(std::floor(fx));
    const int iy = static_cast<int>(std::floor(fy));
    if (ix < 1 || iy < 1 || ix + 2 >= g.nx || iy + 2 >= g.ny) throw GridError("path leaves the grid");
    double col[4];
    for (int b = 0; b < 4; ++b) {
      const int j = iy - 1 + b;
      col[b] = cr(psi.at(ix - 1, j).real(), psi.at(ix, j).real(), psi.at(ix + 1, j).real(), psi.at(ix + 2, j).real(),
                  fx - ix);
    }
    out.push_back(cr(col[0], col[1], col[2], col[3], fy - iy));
  }
  return out;
}

int count_sign_changes(const std::vector<double>& samples, bool periodic) {
  std::vector<double> nz;
  nz.reserve(samples.size());
  for (double v : samples)
    if (v != 0.0) nz.push_back(v);
  if (nz.size() < 2) return 0;
  int count = 0;
  for (std::size_t k = 1; k < nz.size(); ++k) count += (nz[k] > 0.0) != (nz[k - 1] > 0.0);
  if (periodic) count += (nz.front() > 0.0) != (nz.back() > 0.0);
  return count;
}

int count_nodes_along_orbit(const WaveFunction& psi, const PeriodicOrbit& po, double e, Irrep irrep,
                            const HamiltonianParams& params) {
  const Trajectory path = scaled_orbit_path(po, e, params);
  const std::vector<double> values = sample_along_path(psi, path);
  const std::size_t n = path.size() - 1;  // last sample repeats the first
  auto speed2 = [&](std::size_t k) {
    const auto& z = path.samples[k].state;
    return z.px * z.px + z.py * z.py;
  };
  std::size_t k1 = 0;
  for (std::size_t k = 1; k < n; ++k)
    if (speed2(k) < speed2(k1)) k1 = k;
  // Self-retracing if the path is mirror symmetric in time about k1.
  double size = 0.0;
  double mismatch = 0.0;
  for (std::size_t j = 0; j <= n / 2; ++j) {
    const auto& a = path.samples[(k1 + j) % n].state;
    const auto& b = path.samples[(k1 + n - j) % n].state;
    size = std::max(size, std::hypot(a.x, a.y));
    mismatch = std::max(mismatch, std::hypot(a.x - b.x, a.y - b.y));
  }
  const bool retracing = mismatch <= 1e-3 * size;
  std::vector<std::size_t> idx;
  if (retracing) {
    for (std::size_t j = 0; j <= n / 2; ++j) idx.push_back((k1 + j) % n);
  } else {
    for (std::size_t k = 0; k < n; ++k) idx.push_back(k);
  }

  // Mirror lines on which the irrep forces psi to vanish.
  std::vector<std::function<double(double, double)>> lines;
  for (GroupElement g : {GroupElement::ReflectX, GroupElement::ReflectY, GroupElement::ReflectDiag,
                         GroupElement::ReflectAntiDiag}) {
    if (character(irrep, g) != -1.0) continue;
    switch (g) {
      case GroupElement::ReflectX: lines.emplace_back([](double, double y) { return y; }); break;
      case GroupElement::ReflectY: lines.emplace_back([](double x, double) { return x; }); break;
      case GroupElement::ReflectDiag: lines.emplace_back([](double x, double y) { return y - x; }); break;
      default: lines.emplace_back([](double x, double y) { return y + x; }); break;
    }
  }
  // Each crossing of such a line is a node. Where several lines meet (the
  // origin) psi need not change sign, so the forced sign flips are divided out
  // and the remaining sign changes counted separately.
  int crossings = 0;
  for (const auto& line : lines) {
    std::vector<double> l;
    for (std::size_t k : idx) l.push_back(line(path.samples[k].state.x, path.samples[k].state.y));
    crossings += count_sign_changes(l, !retracing);
  }
  std::vector<double> reduced;
  for (std::size_t k : idx) {
    const auto& z = path.samples[k].state;
    double v = values[k];
    bool near_line = false;
    for (const auto& line : lines) {
      const double l = line(z.x, z.y);
      near_line = near_line || std::abs(l) < 1e-6 * size;
      if (l < 0.0) v = -v;
    }
    if (!near_line) reduced.push_back(v);
  }
  return crossings + count_sign_changes(reduced, !retracing);
}

}  // namespace scarbasis
