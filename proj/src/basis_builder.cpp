#include "scarbasis/basis_builder.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iomanip>
#include <limits>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <thread>

namespace scarbasis {

void SelectionWindow::validate() const {
  if (!(e_minus < e_plus)) throw std::invalid_argument("SelectionWindow: need E- < E+");
  if (!(c_b >= 0.0)) throw std::invalid_argument("SelectionWindow: c_b must be non-negative");
  if (!(sigma_bar >= 0.0)) throw std::invalid_argument("SelectionWindow: sigma_bar must be non-negative");
}

SelectionWindow SelectionWindow::make(double e_minus, double e_plus, Irrep irrep, double c_b, double hbar) {
  SelectionWindow w;
  w.e_minus = e_minus;
  w.e_plus = e_plus;
  w.c_b = c_b;
  w.irrep = irrep;
  w.validate();
  const double t_e = std::max(ehrenfest_time(e_plus, irrep, hbar), 0.0);
  w.sigma_bar = semiclassical_dispersion(mean_lyapunov(e_plus), t_e, hbar);
  return w;
}

double window_distance(double e, const SelectionWindow& window) {
  if (e < window.e_minus) return window.e_minus - e;
  if (e > window.e_plus) return e - window.e_plus;
  return 0.0;
}

double selection_parameter(double energy, double sigma, const SelectionWindow& window, double rho, double period,
                           int n_s, int n_t) {
  if (sigma < 0.0) throw std::invalid_argument("selection_parameter: negative dispersion");
  const double de = window_distance(energy, window);
  return rho * std::hypot(sigma, de) * period * n_s * n_t;
}

int basis_size(const SelectionWindow& window, const HamiltonianParams& params, WeylTerms terms) {
  auto count = [&](double e) { return e > 0.0 ? weyl_count(e, window.irrep, params, terms) : 0.0; };
  const double mid = window.midpoint();
  const double rho = mid > 0.0 ? density_of_states(mid, window.irrep, params, terms) : 0.0;
  const double nb = count(window.enlarged_hi()) - count(window.enlarged_lo()) + window.c_b * window.sigma_bar * rho;
  // Guard against 24.999999999 style round-off pushing the ceiling up.
  return std::max(0, static_cast<int>(std::ceil(nb - 1e-9)));
}

Grid2D grid_for_window(const SelectionWindow& window, const HamiltonianParams& params) {
  return Grid2D::for_energy(1.3 * window.enlarged_hi(), params);
}

std::vector<Candidate> build_candidates(const std::vector<PeriodicOrbit>& orbits, const DesymTable& desym,
                                        const SelectionWindow& window, const Grid2D& grid,
                                        const HamiltonianParams& params, const CandidateOptions& opts) {
  window.validate();
  const std::vector<BSLevel> levels =
      enumerate_levels(orbits, desym, window.irrep, std::max(0.0, window.enlarged_lo()), window.enlarged_hi(),
                       params.hbar);
  std::vector<std::optional<Candidate>> slots(levels.size());
  std::atomic<std::size_t> next{0};
  std::mutex err_mutex;
  std::exception_ptr error;

  auto worker = [&]() {
    try {
      GridHamiltonian h(grid, params);
      for (std::size_t k = next++; k < levels.size(); k = next++) {
        const BSLevel& lv = levels[k];
        const PeriodicOrbit& po = find_orbit(orbits, lv.orbit_id);
        WaveFunction tube;
        try {
          tube = tube_function(po, lv, grid, params, opts.tube);
        } catch (const NullProjectionError&) {
          continue;
        }
        Candidate c;
        c.scar = scar_function(tube, lv, ehrenfest_time(lv.energy, lv.irrep, params.hbar), h, opts.propagator);
        c.rho = density_of_states(lv.energy, lv.irrep, params);
        c.period = scale_time(po.period, 1.0, lv.energy);
        c.n_s = po.n_s;
        c.n_t = po.n_t;
        c.delta_e = window_distance(lv.energy, window);
        c.eta = selection_parameter(lv.energy, c.scar.sigma, window, c.rho, c.period, c.n_s, c.n_t);
        slots[k] = std::move(c);
        if (opts.progress) {
          const std::string msg = "scar PO" + std::to_string(lv.orbit_id) + " n=" + std::to_string(lv.n) +
                                  " E=" + std::to_string(lv.energy) + " sigma=" + std::to_string(slots[k]->scar.sigma);
          std::lock_guard lock(err_mutex);
          opts.progress(msg.c_str());
        }
      }
    } catch (...) {
      std::lock_guard lock(err_mutex);
      if (!error) error = std::current_exception();
      next = levels.size();
    }
  };

  const int n_threads = std::max(1, std::min<int>(opts.threads, static_cast<int>(levels.size())));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);

  std::vector<Candidate> out;
  for (auto& s : slots)
    if (s) out.push_back(std::move(*s));
  return out;
}

double BasisSelection::orthonormality_defect() const {
  double worst = 0.0;
  for (std::size_t i = 0; i < auxiliaries.size(); ++i) {
    for (std::size_t k = i; k < auxiliaries.size(); ++k) {
      const cplx g = inner_product(auxiliaries[i], auxiliaries[k]);
      worst = std::max(worst, std::abs(g - (i == k ? 1.0 : 0.0)));
    }
  }
  return worst;
}

BasisSelection sgsm_select(const std::vector<WaveFunction>& candidates, const std::vector<double>& etas,
                           std::size_t n_b, double min_residual) {
  if (candidates.size() != etas.size()) throw std::invalid_argument("sgsm_select: size mismatch");
  if (candidates.size() < n_b) {
    throw InsufficientCandidatesError("sgsm_select: " + std::to_string(candidates.size()) +
                                      " candidates for a basis of " + std::to_string(n_b) +
                                      "; more (longer) orbits must be included");
  }
  for (double e : etas)
    if (!(e > 0.0)) throw std::invalid_argument("sgsm_select: selection parameters must be positive");

  BasisSelection sel;
  if (n_b == 0) return sel;
  const Grid2D& grid = candidates.front().grid();
  const double area = grid.cell_area();

  std::vector<Eigen::VectorXcd> residual;
  residual.reserve(candidates.size());
  for (const auto& c : candidates) {
    if (!(c.grid() == grid)) throw GridError("sgsm_select: candidates on different grids");
    residual.push_back(c.values());
  }
  std::vector<bool> taken(candidates.size(), false);
  std::vector<Eigen::VectorXcd> aux;

  auto norm_of = [&](const Eigen::VectorXcd& v) { return std::sqrt(v.squaredNorm() * area); };

  for (std::size_t step = 0; step < n_b; ++step) {
    std::optional<std::size_t> pick;
    if (step == 0) {
      for (std::size_t j = 0; j < candidates.size(); ++j)
        if (!pick || etas[j] < etas[*pick]) pick = j;
    } else {
      double best = -1.0;
      for (std::size_t j = 0; j < candidates.size(); ++j) {
        if (taken[j]) continue;
        const double r = norm_of(residual[j]);
        if (r < min_residual) continue;
        const double score = r * r / etas[j];
        if (score > best) {
          best = score;
          pick = j;
        }
      }
    }
    if (!pick || norm_of(residual[*pick]) < min_residual) {
      throw RankDeficiencyError("sgsm_select: candidate pool exhausted after " + std::to_string(step) +
                                " of " + std::to_string(n_b) + " selections");
    }
    const std::size_t j = *pick;
    const double r = norm_of(residual[j]);
    Eigen::VectorXcd phi = residual[j] / r;
    // Second Gram-Schmidt pass keeps the auxiliaries orthonormal to round-off.
    for (const auto& a : aux) phi -= (a.dot(phi) * area) * a;
    phi /= norm_of(phi);

    taken[j] = true;
    sel.indices.push_back(j);
    sel.residual_norms.push_back(r);
    sel.etas.push_back(etas[j]);

    for (std::size_t k = 0; k < candidates.size(); ++k) {
      if (taken[k]) continue;
      residual[k] -= (phi.dot(residual[k]) * area) * phi;
    }
    residual[j].resize(0);
    aux.push_back(std::move(phi));
  }
  sel.auxiliaries.reserve(aux.size());
  for (auto& a : aux) sel.auxiliaries.emplace_back(grid, std::move(a));
  return sel;
}

BasisSelection sgsm_select(const std::vector<Candidate>& candidates, std::size_t n_b, double min_residual) {
  std::vector<WaveFunction> wfs;
  std::vector<double> etas;
  wfs.reserve(candidates.size());
  for (const auto& c : candidates) {
    wfs.push_back(c.scar.wf);
    etas.push_back(c.eta);
  }
  return sgsm_select(wfs, etas, n_b, min_residual);
}

BasisSelection sgsm_select(const std::vector<Candidate>& candidates, const SelectionWindow& window,
                           const HamiltonianParams& params) {
  return sgsm_select(candidates, static_cast<std::size_t>(basis_size(window, params)));
}

Eigen::MatrixXd assemble_hamiltonian(const BasisSelection& selection, GridHamiltonian& h, double* max_asymmetry) {
  const auto n = static_cast<Eigen::Index>(selection.size());
  Eigen::MatrixXd m(n, n);
  const double area = h.grid().cell_area();
  for (Eigen::Index k = 0; k < n; ++k) {
    const WaveFunction& phik = selection.auxiliaries[k];
    if (!(phik.grid() == h.grid())) throw GridError("assemble_hamiltonian: grid mismatch");
    const Eigen::VectorXcd hk = h.apply(phik.values());
    for (Eigen::Index i = 0; i < n; ++i) m(i, k) = (selection.auxiliaries[i].values().dot(hk) * area).real();
  }
  if (max_asymmetry) *max_asymmetry = n > 0 ? (m - m.transpose()).cwiseAbs().maxCoeff() : 0.0;
  return m;
}

SpectrumResult diagonalize(const Eigen::MatrixXd& hamiltonian, const BasisSelection& selection,
                           const SelectionWindow& window, GridHamiltonian& h) {
  if (hamiltonian.rows() != hamiltonian.cols() || hamiltonian.rows() != static_cast<Eigen::Index>(selection.size())) {
    throw std::invalid_argument("diagonalize: matrix does not match the basis");
  }
  const Eigen::MatrixXd sym = 0.5 * (hamiltonian + hamiltonian.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  if (es.info() != Eigen::Success) throw std::runtime_error("diagonalize: eigensolver failed");
  SpectrumResult out;
  out.eigenvalues = es.eigenvalues();
  out.eigenvectors = es.eigenvectors();
  out.irrep = window.irrep;
  out.window = window;
  out.sigma.resize(out.eigenvalues.size());
  out.converged.resize(out.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    const WaveFunction psi = eigenstate(out, selection, k);
    out.sigma[static_cast<Eigen::Index>(k)] = h.dispersion(psi, out.eigenvalues[static_cast<Eigen::Index>(k)]);
    out.converged[k] = window.contains(out.eigenvalues[static_cast<Eigen::Index>(k)]);
  }
  return out;
}

WaveFunction eigenstate(const SpectrumResult& spectrum, const BasisSelection& selection, std::size_t k) {
  if (k >= spectrum.size() || selection.size() == 0) throw std::out_of_range("eigenstate: index out of range");
  const Grid2D& grid = selection.auxiliaries.front().grid();
  Eigen::VectorXcd v = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(grid.size()));
  for (std::size_t i = 0; i < selection.size(); ++i) {
    v += spectrum.eigenvectors(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) *
         selection.auxiliaries[i].values();
  }
  return WaveFunction(grid, std::move(v));
}

void write_selection_csv(std::ostream& out, const BasisSelection& selection, const std::vector<Candidate>& candidates) {
  const auto old = out.precision(17);
  out << "step,candidate,orbit,n,energy,eta,residual_norm\n";
  for (std::size_t s = 0; s < selection.size(); ++s) {
    const std::size_t j = selection.indices[s];
    const ScarFunction& sc = candidates.at(j).scar;
    out << s + 1 << ',' << j << ',' << sc.orbit_id << ',' << sc.n << ',' << sc.bs_energy << ',' << selection.etas[s]
        << ',' << selection.residual_norms[s] << '\n';
  }
  out.precision(old);
}

void write_spectrum_csv(std::ostream& out, const SpectrumResult& spectrum) {
  const auto old = out.precision(17);
  out << "index,E,sigma,converged\n";
  for (std::size_t k = 0; k < spectrum.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    out << k + 1 << ',' << spectrum.eigenvalues[i] << ',' << spectrum.sigma[i] << ','
        << (spectrum.converged[k] ? 1 : 0) << '\n';
  }
  out.precision(old);
}

}  // namespace scarbasis
