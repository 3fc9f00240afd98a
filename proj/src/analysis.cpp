#include "scarbasis/analysis.hpp"

#include <boost/math/tools/toms748_solve.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <optional>
#include <ostream>
#include <string>

namespace scarbasis {

std::vector<double> LocalRepresentation::coefficients() const {
  std::vector<double> c;
  c.reserve(entries.size());
  for (const auto& e : entries) c.push_back(e.coefficient);
  return c;
}

LocalRepresentation local_representation(const WaveFunction& state, const std::vector<WaveFunction>& scars,
                                         double min_residual) {
  LocalRepresentation rep;
  if (scars.empty()) return rep;
  const double area = state.grid().cell_area();
  std::vector<Eigen::VectorXcd> residual;
  residual.reserve(scars.size());
  for (const auto& s : scars) {
    if (!(s.grid() == state.grid())) throw GridError("local_representation: grid mismatch");
    residual.push_back(s.values());
  }
  std::vector<bool> taken(scars.size(), false);
  const Eigen::VectorXcd& target = state.values();
  const double weight = target.squaredNorm() * area;
  double cumulative = 0.0;
  for (std::size_t step = 0; step < scars.size(); ++step) {
    std::size_t pick = scars.size();
    double best = -1.0;
    for (std::size_t j = 0; j < scars.size(); ++j) {
      if (taken[j]) continue;
      if (std::sqrt(residual[j].squaredNorm() * area) < min_residual) continue;
      const double x = std::norm(residual[j].dot(target) * area);
      if (x > best) {
        best = x;
        pick = j;
      }
    }
    if (pick == scars.size()) break;
    Eigen::VectorXcd phi = residual[pick] / std::sqrt(residual[pick].squaredNorm() * area);
    const cplx c = phi.dot(target) * area;
    // Eigenstates and scar functions are real; keep the magnitude with the
    // sign of the real part should a residual imaginary part appear.
    const double coef = std::abs(c.imag()) > 1e-10 ? std::copysign(std::abs(c), c.real()) : c.real();
    cumulative += coef * coef;
    rep.entries.push_back({pick, best, coef, cumulative});
    taken[pick] = true;
    for (std::size_t j = 0; j < scars.size(); ++j) {
      if (taken[j]) continue;
      residual[j] -= (phi.dot(residual[j]) * area) * phi;
    }
    residual[pick].resize(0);
    // The state is fully captured once its unexplained weight drops below min_residual.
    if (weight - cumulative < min_residual * weight) break;
  }
  return rep;
}

double scar_intensity_average(int j, double sigma_bar_r, double c_j) {
  if (j != 1 && j != 2) throw std::invalid_argument("scar_intensity_average: j must be 1 or 2");
  if (!(sigma_bar_r > 0.0)) throw SingularityError("scar_intensity_average: sigma_r must be positive");
  const double z = j == 1 ? 0.577 : 13.0 / 48.0;
  const double arg = std::numbers::sqrt2 * sigma_bar_r / j + c_j;
  if (!(arg > 0.0)) throw SingularityError("scar_intensity_average: logarithm argument not positive");
  const double alpha = z + std::log(arg);
  if (!(alpha + 9.0 / 8.0 > 0.0) || !(alpha + 287.0 / 128.0 > 0.0) || alpha + 17.0 / 8.0 == 0.0) {
    throw SingularityError("scar_intensity_average: expression singular at this dispersion");
  }
  const double b = std::log(alpha + 287.0 / 128.0) / (alpha + 17.0 / 8.0);
  return std::sqrt(2.0 / std::numbers::pi) / sigma_bar_r * (alpha - std::log(alpha + 9.0 / 8.0) + b + 0.5 * b * b);
}

double participation_ratio(const std::vector<double>& coefficients) {
  double s2 = 0.0;
  double s4 = 0.0;
  for (double c : coefficients) {
    s2 += c * c;
    s4 += c * c * c * c;
  }
  if (!(s2 > 0.0)) throw std::invalid_argument("participation_ratio: zero coefficient vector");
  return s2 * s2 / s4;
}

double mean_pr_estimate(double sigma_bar_r, Irrep irrep) {
  return (is_two_dimensional(irrep) ? 2.0 : 8.0 / 3.0) * sigma_bar_r;
}

double semiclassical_pr(double section_area, double hbar) { return section_area / (4.0 * std::numbers::pi * hbar); }

double weibull_pdf(double x, double k, double l) {
  if (x < 0.0) return 0.0;
  return k / l * std::pow(x / l, k - 1.0) * std::exp(-std::pow(x / l, k));
}

double weibull_cdf(double r, double k, double l) {
  if (r <= 0.0) return 0.0;
  return 1.0 - std::exp(-std::pow(r / l, k));
}

namespace {

WeibullFit weibull_least_squares(std::vector<double> x) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  int m = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0)) continue;
    const double f = (static_cast<double>(i) + 0.5) / n;
    const double u = std::log(x[i]);
    const double v = std::log(-std::log(1.0 - f));
    sx += u;
    sy += v;
    sxx += u * u;
    sxy += u * v;
    ++m;
  }
  const double den = m * sxx - sx * sx;
  if (m < 2 || !(std::abs(den) > 0.0)) throw WeibullFitError("weibull_fit: degenerate samples");
  const double k = (m * sxy - sx * sy) / den;
  const double c = (sy - k * sx) / m;  // c = -k ln l
  if (!(k > 0.0)) throw WeibullFitError("weibull_fit: non-positive shape");
  return {k, std::exp(-c / k), false};
}

}  // namespace

WeibullFit weibull_fit(const std::vector<double>& samples) {
  if (samples.size() < 20) throw WeibullFitError("weibull_fit: need at least 20 samples");
  for (double x : samples)
    if (!(x >= 0.0) || !std::isfinite(x)) throw WeibullFitError("weibull_fit: samples must be non-negative");
  const auto [mn, mx] = std::minmax_element(samples.begin(), samples.end());
  if (*mx - *mn <= 1e-14 * std::max(1.0, *mx)) throw WeibullFitError("weibull_fit: degenerate samples");
  if (*mn <= 0.0) return weibull_least_squares(samples);

  const double scale = *mx;
  std::vector<double> u(samples.size());
  std::vector<double> lu(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    u[i] = samples[i] / scale;
    lu[i] = std::log(u[i]);
  }
  const double mean_log = std::accumulate(lu.begin(), lu.end(), 0.0) / static_cast<double>(lu.size());
  auto g = [&](double k) {
    double s0 = 0.0, s1 = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      const double w = std::pow(u[i], k);
      s0 += w;
      s1 += w * lu[i];
    }
    return s1 / s0 - 1.0 / k - mean_log;
  };
  double lo = 0.05;
  double hi = 1.0;
  while (g(hi) < 0.0 && hi < 1e3) hi *= 2.0;
  while (g(lo) > 0.0 && lo > 1e-4) lo *= 0.5;
  if (g(lo) > 0.0 || g(hi) < 0.0) return weibull_least_squares(samples);
  std::uintmax_t iters = 200;
  const auto r = boost::math::tools::toms748_solve(g, lo, hi, boost::math::tools::eps_tolerance<double>(50), iters);
  const double k = 0.5 * (r.first + r.second);
  double s0 = 0.0;
  for (double x : u) s0 += std::pow(x, k);
  const double l = scale * std::pow(s0 / static_cast<double>(u.size()), 1.0 / k);
  return {k, l, true};
}

ErrorBounds error_bounds(double sigma_r) {
  if (sigma_r < 0.0) throw std::invalid_argument("error_bounds: negative dispersion");
  const double p = std::pow(sigma_r, 2.5);
  return {p / 4.0, p / 100.0, sigma_r < 0.3};
}

std::vector<double> mobile_mean(const std::vector<double>& series, int window) {
  if (window < 1) throw std::invalid_argument("mobile_mean: window must be at least 1");
  const auto n = static_cast<long>(series.size());
  const long half = window / 2;
  std::vector<double> out(series.size());
  for (long i = 0; i < n; ++i) {
    const long h = std::min({half, i, n - 1 - i});
    double s = 0.0;
    for (long k = i - h; k <= i + h; ++k) s += series[static_cast<std::size_t>(k)];
    out[static_cast<std::size_t>(i)] = s / static_cast<double>(2 * h + 1);
  }
  return out;
}

std::vector<StateComparison> compare_with_reference(const SpectrumResult& spectrum, const BasisSelection& selection,
                                                    const ReferenceSpectrum& reference,
                                                    const HamiltonianParams& params, double search) {
  if (reference.spec.irrep != spectrum.irrep) throw std::invalid_argument("compare_with_reference: irrep mismatch");
  std::vector<StateComparison> out;
  if (selection.size() == 0) return out;
  const Grid2D& grid = selection.auxiliaries.front().grid();
  std::vector<std::optional<WaveFunction>> ref_cache(reference.size());
  auto ref_state = [&](std::size_t k) -> const WaveFunction& {
    if (!ref_cache[k]) ref_cache[k] = project_to_grid(reference, k, grid, params.hbar);
    return *ref_cache[k];
  };
  for (std::size_t n = 0; n < spectrum.size(); ++n) {
    if (!spectrum.converged[n]) continue;
    const auto ni = static_cast<Eigen::Index>(n);
    const WaveFunction psi = eigenstate(spectrum, selection, n);
    StateComparison row;
    row.index = n;
    row.energy = spectrum.eigenvalues[ni];
    row.sigma = spectrum.sigma[ni];
    row.rho = density_of_states(row.energy, spectrum.irrep, params);
    row.sigma_r = row.sigma * row.rho;
    row.bounds = error_bounds(row.sigma_r);
    double best = -1.0;
    for (std::size_t k = 0; k < reference.size(); ++k) {
      const double ek = reference.eigenvalues[static_cast<Eigen::Index>(k)];
      if (std::abs(ek - row.energy) > search) continue;
      const double ov = std::norm(inner_product(ref_state(k), psi));
      if (ov > best) {
        best = ov;
        row.ref_index = k;
      }
    }
    if (best < 0.0) throw std::runtime_error("compare_with_reference: no reference state near E = " +
                                             std::to_string(row.energy));
    row.ref_energy = reference.eigenvalues[static_cast<Eigen::Index>(row.ref_index)];
    row.ref_converged = reference.converged[row.ref_index];
    row.delta_e_r = std::abs(row.energy - row.ref_energy) * row.rho;
    row.overlap_deficit = 1.0 - best;
    out.push_back(row);
  }
  return out;
}

void write_comparison_csv(std::ostream& out, const std::vector<StateComparison>& rows) {
  const auto old = out.precision(17);
  out << "index,E,E_ref,ref_index,sigma,sigma_r,dE_r,overlap_deficit,dE_bound,overlap_bound,valid,energy_ok,"
         "overlap_ok,ref_converged\n";
  for (const auto& r : rows) {
    out << r.index + 1 << ',' << r.energy << ',' << r.ref_energy << ',' << r.ref_index + 1 << ',' << r.sigma << ','
        << r.sigma_r << ',' << r.delta_e_r << ',' << r.overlap_deficit << ',' << r.bounds.energy << ','
        << r.bounds.overlap << ',' << r.bounds.valid << ',' << r.energy_ok() << ',' << r.overlap_ok() << ','
        << r.ref_converged << '\n';
  }
  out.precision(old);
}

void write_reconstruction_csv(std::ostream& out, const std::vector<ReconstructionRow>& rows, std::size_t max_entries) {
  const auto old = out.precision(17);
  out << "N,E,R";
  for (std::size_t i = 1; i <= max_entries; ++i) out << ",po" << i << ",n" << i << ",sum" << i;
  out << '\n';
  for (const auto& r : rows) {
    out << r.state << ',' << r.energy << ',' << r.participation;
    for (std::size_t i = 0; i < max_entries; ++i) {
      if (i < r.entries.size() && r.entries[i].first) {
        out << ',' << r.entries[i].first->orbit_id << ',' << r.entries[i].first->n << ',' << 100.0 * r.entries[i].second;
      } else {
        out << ",,,";
      }
    }
    out << '\n';
  }
  out.precision(old);
}

}  // namespace scarbasis
