#include "scarbasis/reference_solver.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <string>

namespace scarbasis {

void HOBasisSpec::validate() const {
  if (!(omega > 0.0)) throw std::invalid_argument("HOBasisSpec: omega must be positive");
  if (n_max < 0) throw std::invalid_argument("HOBasisSpec: n_max must be non-negative");
}

double ho_x2(int m, int n, double omega, double hbar) {
  if (m < n) std::swap(m, n);
  const double s = hbar / (2.0 * omega);
  if (m == n) return s * (2.0 * n + 1.0);
  if (m == n + 2) return s * std::sqrt((n + 1.0) * (n + 2.0));
  return 0.0;
}

double ho_p2(int m, int n, double omega, double hbar) {
  if (m < n) std::swap(m, n);
  const double s = 0.5 * hbar * omega;
  if (m == n) return s * (2.0 * n + 1.0);
  if (m == n + 2) return -s * std::sqrt((n + 1.0) * (n + 2.0));
  return 0.0;
}

double ho_x4(int m, int n, double omega, double hbar) {
  if (m < n) std::swap(m, n);
  const double s = hbar / (2.0 * omega);
  const double nn = n;
  if (m == n) return s * s * (6.0 * nn * nn + 6.0 * nn + 3.0);
  if (m == n + 2) return s * s * (4.0 * nn + 6.0) * std::sqrt((nn + 1.0) * (nn + 2.0));
  if (m == n + 4) return s * s * std::sqrt((nn + 1.0) * (nn + 2.0) * (nn + 3.0) * (nn + 4.0));
  return 0.0;
}

double ho_matrix_element(const HOState& a, const HOState& b, double omega, const HamiltonianParams& params) {
  const double hb = params.hbar;
  const double q = 0.25 * params.beta;
  double h = 0.5 * ho_x2(a.nx, b.nx, omega, hb) * ho_x2(a.ny, b.ny, omega, hb);
  if (a.ny == b.ny) h += 0.5 * ho_p2(a.nx, b.nx, omega, hb) + q * ho_x4(a.nx, b.nx, omega, hb);
  if (a.nx == b.nx) h += 0.5 * ho_p2(a.ny, b.ny, omega, hb) + q * ho_x4(a.ny, b.ny, omega, hb);
  return h;
}

namespace {

struct BlockRule {
  int parity_x;   // required nx mod 2
  int parity_y;
  int swap_sign;  // 0 when the block has no swap symmetry
};

BlockRule block_rule(Irrep irrep) {
  switch (irrep) {
    case Irrep::A1: return {0, 0, +1};
    case Irrep::B1: return {0, 0, -1};
    case Irrep::B2: return {1, 1, +1};
    case Irrep::A2: return {1, 1, -1};
    case Irrep::E1: return {1, 0, 0};
    case Irrep::E2: return {0, 1, 0};
  }
  throw std::invalid_argument("block_rule: unknown irrep");
}

struct Component {
  double c;
  HOState s;
};

int components(const AdaptedState& st, Component out[2]) {
  if (st.swap_sign == 0 || st.a == st.b) {
    out[0] = {1.0, {st.a, st.b}};
    return 1;
  }
  const double r = 1.0 / std::numbers::sqrt2;
  out[0] = {r, {st.a, st.b}};
  out[1] = {r * st.swap_sign, {st.b, st.a}};
  return 2;
}

}  // namespace

std::vector<AdaptedState> adapted_basis(const HOBasisSpec& spec) {
  spec.validate();
  const BlockRule rule = block_rule(spec.irrep);
  std::vector<AdaptedState> out;
  for (int a = rule.parity_x; a <= spec.n_max; a += 2) {
    for (int b = rule.parity_y; a + b <= spec.n_max; b += 2) {
      if (rule.swap_sign != 0) {
        if (b < a) continue;
        if (a == b && rule.swap_sign < 0) continue;
      }
      out.push_back({a, b, rule.swap_sign});
    }
  }
  return out;
}

double adapted_matrix_element(const AdaptedState& s, const AdaptedState& t, double omega,
                              const HamiltonianParams& params) {
  Component cs[2];
  Component ct[2];
  const int ns = components(s, cs);
  const int nt = components(t, ct);
  double h = 0.0;
  for (int i = 0; i < ns; ++i)
    for (int k = 0; k < nt; ++k) h += cs[i].c * ct[k].c * ho_matrix_element(cs[i].s, ct[k].s, omega, params);
  return h;
}

Eigen::MatrixXd reference_hamiltonian(const HOBasisSpec& spec, const HamiltonianParams& params,
                                      std::size_t max_block) {
  params.validate();
  const auto basis = adapted_basis(spec);
  if (basis.size() > max_block) {
    throw BasisSizeError("reference block of " + std::to_string(basis.size()) + " states exceeds the limit of " +
                         std::to_string(max_block));
  }
  const auto n = static_cast<Eigen::Index>(basis.size());
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = i; k < n; ++k) {
      const AdaptedState& s = basis[static_cast<std::size_t>(i)];
      const AdaptedState& t = basis[static_cast<std::size_t>(k)];
      h(i, k) = h(k, i) = adapted_matrix_element(s, t, spec.omega, params);
    }
  }
  return h;
}

ReferenceSpectrum build_reference_spectrum(const HOBasisSpec& spec, const HamiltonianParams& params, bool sweep,
                                           double conv_tol, std::size_t max_block) {
  ReferenceSpectrum out;
  out.spec = spec;
  out.basis = adapted_basis(spec);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(reference_hamiltonian(spec, params, max_block));
  if (es.info() != Eigen::Success) throw std::runtime_error("build_reference_spectrum: eigensolver failed");
  out.eigenvalues = es.eigenvalues();
  out.coefficients = es.eigenvectors();
  const auto n = out.eigenvalues.size();
  out.change = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::quiet_NaN());
  out.converged.assign(static_cast<std::size_t>(n), false);
  if (sweep) {
    HOBasisSpec bigger = spec;
    bigger.n_max += 4;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es2(reference_hamiltonian(bigger, params, max_block),
                                                       Eigen::EigenvaluesOnly);
    if (es2.info() != Eigen::Success) throw std::runtime_error("build_reference_spectrum: eigensolver failed");
    for (Eigen::Index k = 0; k < n; ++k) {
      out.change[k] = std::abs(out.eigenvalues[k] - es2.eigenvalues()[k]);
      out.converged[static_cast<std::size_t>(k)] = out.change[k] < conv_tol;
    }
  }
  return out;
}

namespace {

// phi_n(x_i) for n = 0..n_max, one column per n.
Eigen::MatrixXd ho_functions(const std::vector<double>& xs, int n_max, double omega, double hbar) {
  Eigen::MatrixXd phi(static_cast<Eigen::Index>(xs.size()), n_max + 1);
  const double w = omega / hbar;
  const double norm0 = std::pow(w / std::numbers::pi, 0.25);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double x = xs[i];
    const auto r = static_cast<Eigen::Index>(i);
    double prev = 0.0;
    double cur = norm0 * std::exp(-0.5 * w * x * x);
    phi(r, 0) = cur;
    for (int n = 0; n < n_max; ++n) {
      const double next = std::sqrt(2.0 * w / (n + 1.0)) * x * cur - std::sqrt(n / (n + 1.0)) * prev;
      prev = cur;
      cur = next;
      phi(r, n + 1) = cur;
    }
  }
  return phi;
}

}  // namespace

WaveFunction project_to_grid(const ReferenceSpectrum& spectrum, std::size_t k, const Grid2D& grid, double hbar) {
  if (k >= spectrum.size()) throw std::out_of_range("project_to_grid: state index out of range");
  grid.validate();
  const int nm = spectrum.spec.n_max;
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(nm + 1, nm + 1);  // c(nx, ny)
  for (std::size_t i = 0; i < spectrum.basis.size(); ++i) {
    Component comp[2];
    const int m = components(spectrum.basis[i], comp);
    const double v = spectrum.coefficients(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
    for (int q = 0; q < m; ++q) c(comp[q].s.nx, comp[q].s.ny) += comp[q].c * v;
  }
  std::vector<double> xs(static_cast<std::size_t>(grid.nx));
  std::vector<double> ys(static_cast<std::size_t>(grid.ny));
  for (int i = 0; i < grid.nx; ++i) xs[static_cast<std::size_t>(i)] = grid.x(i);
  for (int j = 0; j < grid.ny; ++j) ys[static_cast<std::size_t>(j)] = grid.y(j);
  const Eigen::MatrixXd fx = ho_functions(xs, nm, spectrum.spec.omega, hbar);
  const Eigen::MatrixXd fy = ho_functions(ys, nm, spectrum.spec.omega, hbar);
  // values(i, j) = sum fx(i, a) c(a, b) fy(j, b); column-major storage of an
  // nx-by-ny matrix matches index = j nx + i.
  const Eigen::MatrixXd values = fx * c * fy.transpose();
  WaveFunction psi(grid, Eigen::Map<const Eigen::VectorXd>(values.data(), values.size()).cast<cplx>());
  const double norm = psi.norm();
  if (!(norm * norm >= 0.9999)) {
    throw GridError("project_to_grid: grid holds only " + std::to_string(norm * norm) + " of the norm");
  }
  Eigen::Index imax = 0;
  spectrum.coefficients.col(static_cast<Eigen::Index>(k)).cwiseAbs().maxCoeff(&imax);
  if (spectrum.coefficients(imax, static_cast<Eigen::Index>(k)) < 0.0) psi.values() = -psi.values();
  psi.normalize();
  return psi;
}

void write_reference_csv(std::ostream& out, const ReferenceSpectrum& spectrum) {
  const auto old = out.precision(17);
  out << "index,E,sigma,converged\n";
  for (std::size_t k = 0; k < spectrum.size(); ++k) {
    out << k + 1 << ',' << spectrum.eigenvalues[static_cast<Eigen::Index>(k)] << ",0,"
        << (spectrum.converged[k] ? 1 : 0) << '\n';
  }
  out.precision(old);
}

}  // namespace scarbasis
