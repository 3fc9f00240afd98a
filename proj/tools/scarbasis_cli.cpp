// Batch driver: orbits -> levels -> scar functions -> selection -> spectrum
// -> comparison / analysis. Every stage writes CSV files into --out.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "scarbasis/analysis.hpp"
#include "scarbasis/basis_builder.hpp"
#include "scarbasis/data_files.hpp"
#include "scarbasis/orbit_search.hpp"
#include "scarbasis/periodic_orbit.hpp"
#include "scarbasis/quantization.hpp"
#include "scarbasis/reference_solver.hpp"
#include "scarbasis/wavefunctions.hpp"

namespace fs = std::filesystem;
using namespace scarbasis;

namespace {

struct RunConfig {
  double beta = 0.01;
  double hbar = 1.0;
  std::string orbit_table = default_orbit_table().string();
  std::string desym_1d = default_desym_1d().string();
  std::string desym_e = default_desym_e().string();
  std::string catalogue = (data_dir() / "orbit_catalogue.txt").string();
  std::vector<std::string> irreps{"A1"};
  std::string window = "0:25";
  double c_b = 2.0;
  int grid = 0;  // 0: sized from the window
  double dt = 0.01;
  int order = 2;
  double leakage_tol = 1e-10;
  std::vector<int> orbit_ids;  // empty: all
  std::string out = "out";
  int threads = 1;
  int n_max = 140;
  double omega = 1.0;
  bool snapshots = false;
  bool search = false;
  std::size_t search_samples = 6000;
  bool verbose = false;

  [[nodiscard]] HamiltonianParams params() const { return {beta, hbar}; }
  [[nodiscard]] std::pair<double, double> window_edges() const {
    const auto colon = window.find(':');
    if (colon == std::string::npos) throw std::invalid_argument("window must be LO:HI, got " + window);
    return {std::stod(window.substr(0, colon)), std::stod(window.substr(colon + 1))};
  }
  [[nodiscard]] PropagatorConfig propagator() const { return {dt, order, leakage_tol}; }
};

class StageError : public std::runtime_error {
 public:
  StageError(const std::string& stage, const std::string& what) : std::runtime_error("[" + stage + "] " + what) {}
};

template <class F>
auto stage(const std::string& name, F&& f) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

std::ofstream open_out(const RunConfig& cfg, const std::string& name, std::vector<std::string>& artifacts) {
  fs::create_directories(cfg.out);
  const fs::path p = fs::path(cfg.out) / name;
  std::ofstream f(p);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  f.precision(17);
  artifacts.push_back(name);
  return f;
}

void log(const RunConfig& cfg, const std::string& msg) {
  if (cfg.verbose) std::cerr << msg << '\n';
}

std::vector<PeriodicOrbit> load_orbits(const RunConfig& cfg) {
  auto all = read_orbit_table(fs::path(cfg.orbit_table));
  if (cfg.orbit_ids.empty()) return all;
  std::vector<PeriodicOrbit> out;
  for (int id : cfg.orbit_ids) out.push_back(find_orbit(all, id));
  return out;
}

DesymTable load_desym(const RunConfig& cfg) {
  DesymTable t = DesymTable::read(fs::path(cfg.desym_1d));
  t.merge(DesymTable::read(fs::path(cfg.desym_e)));
  return t;
}

// State shared by the pipeline subcommands for one irrep.
struct Pipeline {
  const RunConfig& cfg;
  Irrep irrep;
  std::vector<std::string>& artifacts;
  HamiltonianParams params;
  SelectionWindow window;
  Grid2D grid;
  std::vector<Candidate> candidates;
  BasisSelection selection;
  std::unique_ptr<GridHamiltonian> h;
  SpectrumResult spectrum;

  Pipeline(const RunConfig& c, Irrep ir, std::vector<std::string>& a) : cfg(c), irrep(ir), artifacts(a) {
    params = cfg.params();
    const auto [lo, hi] = cfg.window_edges();
    window = SelectionWindow::make(lo, hi, irrep, cfg.c_b, params.hbar);
    grid = grid_for_window(window, params);
    if (cfg.grid > 0) {
      // Same box, different resolution.
      grid.nx = grid.ny = cfg.grid;
      grid.validate();
    }
  }

  [[nodiscard]] std::string tag() const { return std::string(to_string(irrep)); }

  void build() {
    stage("scars", [&] {
      CandidateOptions opts;
      opts.propagator = cfg.propagator();
      opts.threads = cfg.threads;
      if (cfg.verbose) opts.progress = [](const char* m) { std::cerr << m << '\n'; };
      log(cfg, "grid " + std::to_string(grid.nx) + " half extent " + std::to_string(grid.x_extent));
      candidates = build_candidates(load_orbits(cfg), load_desym(cfg), window, grid, params, opts);
      auto f = open_out(cfg, "scars_" + tag() + ".csv", artifacts);
      f << "candidate,orbit,n,energy,sigma,tube_sigma,ehrenfest_time,rho,period,eta\n";
      for (std::size_t j = 0; j < candidates.size(); ++j) {
        const Candidate& c = candidates[j];
        f << j << ',' << c.scar.orbit_id << ',' << c.scar.n << ',' << c.scar.bs_energy << ',' << c.scar.sigma << ','
          << c.scar.tube_sigma << ',' << c.scar.ehrenfest_time << ',' << c.rho << ',' << c.period << ',' << c.eta
          << '\n';
        if (cfg.snapshots) {
          const std::string name =
              "scar_" + tag() + "_po" + std::to_string(c.scar.orbit_id) + "_n" + std::to_string(c.scar.n) + ".bin";
          fs::create_directories(cfg.out);
          write_snapshot(fs::path(cfg.out) / name, c.scar.wf,
                         {c.scar.bs_energy, c.scar.orbit_id, c.scar.n, irrep, c.scar.sigma});
          artifacts.push_back(name);
        }
      }
      return 0;
    });
  }

  void select() {
    if (candidates.empty()) build();
    stage("select", [&] {
      const int nb = basis_size(window, params);
      log(cfg, "N_b = " + std::to_string(nb) + " from " + std::to_string(candidates.size()) + " candidates");
      selection = sgsm_select(candidates, static_cast<std::size_t>(nb));
      auto f = open_out(cfg, "selection_" + tag() + ".csv", artifacts);
      write_selection_csv(f, selection, candidates);
      return 0;
    });
  }

  void solve() {
    if (selection.size() == 0) select();
    stage("solve", [&] {
      h = std::make_unique<GridHamiltonian>(grid, params);
      double asym = 0.0;
      const Eigen::MatrixXd hm = assemble_hamiltonian(selection, *h, &asym);
      log(cfg, "matrix asymmetry " + std::to_string(asym));
      spectrum = diagonalize(hm, selection, window, *h);
      auto f = open_out(cfg, "spectrum_" + tag() + ".csv", artifacts);
      write_spectrum_csv(f, spectrum);
      if (cfg.snapshots) {
        for (std::size_t k = 0; k < spectrum.size(); ++k) {
          if (!spectrum.converged[k]) continue;
          const std::string name = "state_" + tag() + "_" + std::to_string(k + 1) + ".bin";
          write_snapshot(fs::path(cfg.out) / name, eigenstate(spectrum, selection, k),
                         {spectrum.eigenvalues[static_cast<Eigen::Index>(k)], 0, static_cast<int>(k + 1), irrep,
                          spectrum.sigma[static_cast<Eigen::Index>(k)]});
          artifacts.push_back(name);
        }
      }
      return 0;
    });
  }
};

ReferenceSpectrum run_reference(const RunConfig& cfg, Irrep irrep, std::vector<std::string>& artifacts) {
  return stage("reference", [&] {
    HOBasisSpec spec{cfg.omega, cfg.n_max, irrep};
    ReferenceSpectrum ref = build_reference_spectrum(spec, cfg.params());
    auto f = open_out(cfg, "reference_" + std::string(to_string(irrep)) + ".csv", artifacts);
    write_reference_csv(f, ref);
    return ref;
  });
}

void cmd_orbits(const RunConfig& cfg, std::vector<std::string>& artifacts) {
  std::vector<PeriodicOrbit> orbits;
  if (cfg.search) {
    orbits = stage("orbits", [&] {
      OrbitSearchOptions opts;
      opts.samples_per_family = cfg.search_samples;
      if (cfg.verbose) opts.progress = [](const char* m) { std::cerr << m << '\n'; };
      auto found = search_periodic_orbits(cfg.params(), opts);
      const CatalogueMatch m = match_catalogue(found, read_orbit_catalogue(fs::path(cfg.catalogue)));
      for (int id : m.missing) std::cerr << "catalogue orbit " << id << " not found\n";
      for (const auto& po : m.extra) std::cerr << "extra orbit S=" << po.action << " lambda=" << po.lambda << '\n';
      return m.matched;
    });
    auto f = open_out(cfg, "orbits.txt", artifacts);
    write_orbit_table(f, orbits);
  } else {
    orbits = stage("orbits", [&] { return load_orbits(cfg); });
  }
  auto f = open_out(cfg, "orbits.csv", artifacts);
  f << "id,S,lambda,mu,N_s,N_t,R,T\n";
  for (const auto& po : orbits) {
    f << po.id << ',' << po.action << ',' << po.lambda << ',' << po.mu << ',' << po.n_s << ',' << po.n_t << ','
      << relevance(po) << ',' << po.period << '\n';
  }
}

void cmd_quantize(const RunConfig& cfg, Irrep irrep, std::vector<std::string>& artifacts) {
  stage("quantize", [&] {
    const auto [lo, hi] = cfg.window_edges();
    const auto levels = enumerate_levels(load_orbits(cfg), load_desym(cfg), irrep, lo, hi, cfg.hbar);
    auto f = open_out(cfg, "levels_" + std::string(to_string(irrep)) + ".csv", artifacts);
    write_levels_csv(f, levels);
    return 0;
  });
}

void cmd_compare(Pipeline& p, const ReferenceSpectrum& ref) {
  stage("compare", [&] {
    const auto rows = compare_with_reference(p.spectrum, p.selection, ref, p.params);
    auto f = open_out(p.cfg, "compare_" + p.tag() + ".csv", p.artifacts);
    write_comparison_csv(f, rows);
    std::size_t valid = 0, both = 0;
    for (const auto& r : rows) {
      if (!r.bounds.valid) continue;
      ++valid;
      if (r.energy_ok() && r.overlap_ok()) ++both;
    }
    std::cout << p.tag() << ": " << rows.size() << " window states, " << valid << " with sigma_r < 0.3, " << both
              << " inside both error bounds\n";
    return 0;
  });
}

void cmd_analyze(Pipeline& p) {
  stage("analyze", [&] {
    std::vector<WaveFunction> scars;
    for (std::size_t j : p.selection.indices) scars.push_back(p.candidates[j].scar.wf);
    std::vector<ReconstructionRow> rows;
    std::vector<double> energies, x1, x2, pr, sigma_r;
    std::vector<LocalRepresentation> reps;
    for (std::size_t n = 0; n < p.spectrum.size(); ++n) {
      if (!p.spectrum.converged[n]) continue;
      const auto ni = static_cast<Eigen::Index>(n);
      LocalRepresentation rep = local_representation(eigenstate(p.spectrum, p.selection, n), scars);
      ReconstructionRow row;
      row.state = n + 1;
      row.energy = p.spectrum.eigenvalues[ni];
      row.participation = participation_ratio(rep.coefficients());
      for (const auto& e : rep.entries) row.entries.push_back({&p.candidates[p.selection.indices[e.scar]].scar, e.cumulative});
      energies.push_back(row.energy);
      x1.push_back(rep.entries.size() > 0 ? rep.entries[0].intensity : 0.0);
      x2.push_back(rep.entries.size() > 1 ? rep.entries[1].intensity : 0.0);
      pr.push_back(row.participation);
      sigma_r.push_back(p.spectrum.sigma[ni] * density_of_states(row.energy, p.irrep, p.params));
      rows.push_back(std::move(row));
    }
    {
      auto f = open_out(p.cfg, "reconstruction_" + p.tag() + ".csv", p.artifacts);
      write_reconstruction_csv(f, rows);
    }
    const auto m1 = mobile_mean(x1), m2 = mobile_mean(x2), mr = mobile_mean(pr);
    auto f = open_out(p.cfg, "intensities_" + p.tag() + ".csv", p.artifacts);
    f << "state,E,sigma_r,x1,x2,R,x1_mean,x2_mean,R_mean,sigma_bar_r,x1_sc,x2_sc,x1_sc_c,x2_sc_c,R_bar,R_sc\n";
    auto or_nan = [](auto&& fn) {
      try {
        return fn();
      } catch (const SingularityError&) {
        return std::numeric_limits<double>::quiet_NaN();
      }
    };
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const double e = energies[i];
      const double t_e = std::max(0.0, ehrenfest_time(e, p.irrep, p.params.hbar));
      const double sbr = semiclassical_dispersion(mean_lyapunov(e), t_e, p.params.hbar) *
                         density_of_states(e, p.irrep, p.params);
      f << rows[i].state << ',' << e << ',' << sigma_r[i] << ',' << x1[i] << ',' << x2[i] << ',' << pr[i] << ','
        << m1[i] << ',' << m2[i] << ',' << mr[i] << ',' << sbr << ','
        << or_nan([&] { return scar_intensity_average(1, sbr); }) << ','
        << or_nan([&] { return scar_intensity_average(2, sbr); }) << ','
        << or_nan([&] { return scar_intensity_average(1, sbr, 0.30); }) << ','
        << or_nan([&] { return scar_intensity_average(2, sbr, -0.30); }) << ',' << mean_pr_estimate(sbr, p.irrep)
        << ',' << semiclassical_pr(section_area(e, p.irrep), p.params.hbar) << '\n';
    }
    std::vector<double> r;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const double t_e = std::max(0.0, ehrenfest_time(energies[i], p.irrep, p.params.hbar));
      const double sbr = semiclassical_dispersion(mean_lyapunov(energies[i]), t_e, p.params.hbar) *
                         density_of_states(energies[i], p.irrep, p.params);
      r.push_back((pr[i] - 1.0) / mean_pr_estimate(sbr, p.irrep));
    }
    auto w = open_out(p.cfg, "weibull_" + p.tag() + ".csv", p.artifacts);
    w << "samples,k,l,method\n";
    try {
      const WeibullFit fit = weibull_fit(r);
      w << r.size() << ',' << fit.k << ',' << fit.l << ',' << (fit.maximum_likelihood ? "mle" : "lsq") << '\n';
    } catch (const WeibullFitError& e) {
      w << r.size() << ",,," << e.what() << '\n';
    }
    return 0;
  });
}

nlohmann::json manifest(const RunConfig& cfg, const std::string& command, const std::vector<std::string>& artifacts) {
  nlohmann::json j;
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  j["timestamp"] = stamp;
  j["command"] = command;
  j["params"] = {{"beta", cfg.beta}, {"hbar", cfg.hbar}};
  j["tables"] = {{"orbits", cfg.orbit_table}, {"desym_1d", cfg.desym_1d}, {"desym_e", cfg.desym_e}};
  j["irreps"] = cfg.irreps;
  j["window"] = cfg.window;
  j["c_b"] = cfg.c_b;
  j["orbit_ids"] = cfg.orbit_ids;
  j["grid"] = cfg.grid;
  j["propagator"] = {{"dt", cfg.dt}, {"order", cfg.order}, {"leakage_tol", cfg.leakage_tol}};
  j["reference"] = {{"n_max", cfg.n_max}, {"omega", cfg.omega}, {"convergence_tol", 1e-5}};
  j["tolerances"] = {{"sgsm_min_residual", 1e-8}, {"local_min_residual", 1e-8}, {"orbit_closure", 1e-10}};
  j["threads"] = cfg.threads;
  j["seeds"] = nlohmann::json::object();  // the pipeline draws no random numbers
  j["artifacts"] = artifacts;
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig cfg;
  CLI::App app{"Scar-function basis sets for the quartic oscillator"};
  app.set_config("--config", "", "key=value configuration file");
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--beta", cfg.beta, "quartic coupling");
  app.add_option("--hbar", cfg.hbar, "Planck constant");
  app.add_option("--orbits", cfg.orbit_table, "orbit table");
  app.add_option("--desym-1d", cfg.desym_1d, "boundary data, one-dimensional irreps");
  app.add_option("--desym-e", cfg.desym_e, "boundary data, E irrep");
  app.add_option("--catalogue", cfg.catalogue, "orbit catalogue used to label a search");
  app.add_option("--irrep", cfg.irreps, "irreps (A1 A2 B1 B2 E)")->delimiter(',');
  app.add_option("--window", cfg.window, "energy window LO:HI");
  app.add_option("--cb", cfg.c_b, "border coefficient of the basis size");
  app.add_option("--grid", cfg.grid, "grid points per axis (power of two; 0 = automatic)");
  app.add_option("--dt", cfg.dt, "propagation step");
  app.add_option("--order", cfg.order, "splitting order (2 or 4)");
  app.add_option("--leakage-tol", cfg.leakage_tol, "allowed boundary probability");
  app.add_option("--orbit-ids", cfg.orbit_ids, "subset of orbit ids")->delimiter(',');
  app.add_option("--out", cfg.out, "output directory");
  app.add_option("--threads", cfg.threads, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--nmax", cfg.n_max, "reference basis: maximum total quantum number");
  app.add_option("--omega", cfg.omega, "reference basis: oscillator frequency");
  app.add_flag("--snapshots", cfg.snapshots, "write binary wave-function snapshots");
  app.add_flag("-v,--verbose", cfg.verbose, "progress on stderr");

  auto* orbits = app.add_subcommand("orbits", "orbit table (optionally recomputed by search)");
  orbits->add_flag("--search", cfg.search, "search and refine orbits instead of reading the table");
  orbits->add_option("--samples", cfg.search_samples, "shooting samples per family");
  app.add_subcommand("quantize", "Bohr-Sommerfeld levels in the window");
  app.add_subcommand("scars", "scar functions for the enlarged window");
  app.add_subcommand("select", "selective Gram-Schmidt basis");
  app.add_subcommand("solve", "spectrum in the scar basis");
  app.add_subcommand("reference", "harmonic-oscillator reference spectrum");
  app.add_subcommand("compare", "scar-basis spectrum against the reference");
  app.add_subcommand("analyze", "local representation, intensities, participation ratios");

  CLI11_PARSE(app, argc, argv);
  const std::string command = app.get_subcommands().front()->get_name();
  std::vector<std::string> artifacts;
  try {
    std::vector<Irrep> irreps;
    for (const auto& s : cfg.irreps) irreps.push_back(parse_irrep(s));
    if (command == "orbits") {
      cmd_orbits(cfg, artifacts);
    } else {
      for (Irrep ir : irreps) {
        if (command == "quantize") {
          cmd_quantize(cfg, ir, artifacts);
        } else if (command == "reference") {
          run_reference(cfg, ir, artifacts);
        } else {
          Pipeline p(cfg, ir, artifacts);
          if (command == "scars") p.build();
          if (command == "select") p.select();
          if (command == "solve" || command == "compare" || command == "analyze") p.solve();
          if (command == "compare") cmd_compare(p, run_reference(cfg, ir, artifacts));
          if (command == "analyze") cmd_analyze(p);
        }
      }
    }
    fs::create_directories(cfg.out);
    std::ofstream(fs::path(cfg.out) / "manifest.json") << manifest(cfg, command, artifacts).dump(2) << '\n';
  } catch (const std::exception& e) {
    std::cerr << "scarbasis " << command << ": " << e.what() << '\n';
    return 1;
  }
  return 0;
}
