#include "scarbasis/orbit_search.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <sstream>
#include <numbers>
#include <optional>
#include <string>

namespace scarbasis {

namespace {

constexpr double kHalfPeriodMax = 10.2;
constexpr int kFamilies = 4;
constexpr int kTargets = 6;

// Radius of the E = 1 equipotential along direction phi.
double equipotential_radius(double phi, double beta) {
  const double c = std::cos(phi);
  const double s = std::sin(phi);
  const double a = 0.5 * c * c * s * s + 0.25 * beta * (c * c * c * c + s * s * s * s);
  return std::pow(1.0 / a, 0.25);
}

std::pair<double, double> family_range(int family, double beta) {
  switch (family) {
    case 0: return {0.0, std::numbers::pi / 4};                       // brake point angle
    case 1: return {0.0, std::pow(4.0 / beta, 0.25)};                 // x on the x axis
    case 2: return {0.0, std::pow(2.0 / (1.0 + beta), 0.25)};         // s on the diagonal
    default: return {0.0, std::numbers::pi / 4};                      // launch angle at origin
  }
}

PhaseSpaceState family_state(int family, double s, double beta) {
  switch (family) {
    case 0: {
      const double r = equipotential_radius(s, beta);
      return {r * std::cos(s), r * std::sin(s), 0.0, 0.0};
    }
    case 1: {
      const double py = std::sqrt(std::max(0.0, 2.0 * (1.0 - potential(s, 0.0, beta))));
      return {s, 0.0, 0.0, py};
    }
    case 2: {
      const double a = std::sqrt(std::max(0.0, 1.0 - potential(s, s, beta)));
      return {s, s, a, -a};
    }
    default: return {0.0, 0.0, std::sqrt(2.0) * std::cos(s), std::sqrt(2.0) * std::sin(s)};
  }
}

struct Hit {
  double t;
  double test;
  double action;
};

using HitTable = std::array<std::vector<Hit>, kTargets>;

HitTable shoot(const PhaseSpaceState& start, const HamiltonianParams& params, double tol) {
  const double beta = params.beta;
  const std::array<EventSpec, 5> events = {
      EventSpec{[beta](const PhaseSpaceState& z) {
                  const auto f = force(z.x, z.y, beta);
                  return z.px * f[0] + z.py * f[1];
                },
                +1},
      EventSpec{[](const PhaseSpaceState& z) { return z.y; }, 0},
      EventSpec{[](const PhaseSpaceState& z) { return z.x; }, 0},
      EventSpec{[](const PhaseSpaceState& z) { return z.x - z.y; }, 0},
      EventSpec{[](const PhaseSpaceState& z) { return z.x + z.y; }, 0},
  };
  HitTable table;
  for (const EventHit& h : find_events(start, kHalfPeriodMax, params, events, 100000, tol)) {
    const PhaseSpaceState& z = h.state;
    switch (h.event) {
      case 0: {
        const auto f = force(z.x, z.y, beta);
        const double fn = std::hypot(f[0], f[1]);
        table[0].push_back({h.t, (z.px * f[1] - z.py * f[0]) / fn, h.action});
        break;
      }
      case 1: table[1].push_back({h.t, z.px, h.action}); break;
      case 2:
        table[2].push_back({h.t, z.py, h.action});
        table[5].push_back({h.t, z.y, h.action});
        break;
      case 3: table[3].push_back({h.t, z.px + z.py, h.action}); break;
      case 4: table[4].push_back({h.t, z.px - z.py, h.action}); break;
      default: break;
    }
  }
  return table;
}

std::optional<Hit> kth_hit(int family, double s, int target, std::size_t k, const HamiltonianParams& params,
                           double tol) {
  const HitTable t = shoot(family_state(family, s, params.beta), params, tol);
  if (t[target].size() <= k) return std::nullopt;
  return t[target][k];
}

bool same_orbit(const PeriodicOrbit& a, const PeriodicOrbit& b) {
  return std::abs(a.action - b.action) < 1e-6 * a.action && std::abs(a.lambda - b.lambda) < 1e-4 * a.lambda;
}

}  // namespace

std::vector<OrbitCandidate> shoot_symmetric_candidates(const HamiltonianParams& params,
                                                       const OrbitSearchOptions& opts) {
  std::vector<OrbitCandidate> out;
  const std::size_t n = std::max<std::size_t>(opts.samples_per_family, 16);
  for (int family = 0; family < kFamilies; ++family) {
    const auto [lo, hi] = family_range(family, params.beta);
    auto param = [&, lo = lo, hi = hi](std::size_t i) { return lo + (hi - lo) * (i + 0.5) / n; };
    HitTable prev = shoot(family_state(family, param(0), params.beta), params, opts.tol);
    for (std::size_t i = 1; i < n; ++i) {
      HitTable cur = shoot(family_state(family, param(i), params.beta), params, opts.tol);
      for (int target = 0; target < kTargets; ++target) {
        const std::size_t m = std::min(prev[target].size(), cur[target].size());
        for (std::size_t k = 0; k < m; ++k) {
          const Hit& a = prev[target][k];
          const Hit& b = cur[target][k];
          if ((a.test > 0.0) == (b.test > 0.0) || std::abs(a.t - b.t) > 0.3) continue;
          if (2.0 * std::min(a.action, b.action) > 1.05 * opts.max_action) continue;
          double s_lo = param(i - 1);
          double s_hi = param(i);
          const bool lo_positive = a.test > 0.0;
          std::optional<Hit> mid;
          bool ok = true;
          for (int it = 0; it < 60 && s_hi - s_lo > 1e-15 * (1.0 + std::abs(s_hi)); ++it) {
            const double s_mid = 0.5 * (s_lo + s_hi);
            mid = kth_hit(family, s_mid, target, k, params, opts.tol);
            if (!mid) {
              ok = false;
              break;
            }
            ((mid->test > 0.0) == lo_positive ? s_lo : s_hi) = s_mid;
          }
          if (!ok || !mid || std::abs(mid->test) > 1e-5) continue;
          out.push_back({family_state(family, 0.5 * (s_lo + s_hi), params.beta), mid->t, family, target});
        }
      }
      prev = std::move(cur);
    }
    if (opts.progress) {
      const std::string msg = "family " + std::to_string(family) + ": " + std::to_string(out.size()) + " candidates";
      opts.progress(msg.c_str());
    }
  }
  return out;
}

std::vector<OrbitCandidate> invariant_line_candidates(const HamiltonianParams& params) {
  std::vector<OrbitCandidate> out;
  const std::array<std::pair<PhaseSpaceState, std::function<double(const PhaseSpaceState&)>>, 2> lines = {{
      {{0.0, 0.0, std::sqrt(2.0), 0.0}, [](const PhaseSpaceState& z) { return z.x; }},
      {{0.0, 0.0, 1.0, 1.0}, [](const PhaseSpaceState& z) { return z.x + z.y; }},
  }};
  for (const auto& [start, g] : lines) {
    const std::array<EventSpec, 1> ev = {EventSpec{g, 0}};
    const auto hits = find_events(start, 100.0, params, ev, 2);
    if (hits.size() < 2) throw RefinementError("invariant line orbit did not return");
    out.push_back({start, 0.5 * hits[1].t, -1, -1});
  }
  return out;
}

std::vector<PeriodicOrbit> search_periodic_orbits(const HamiltonianParams& params, const OrbitSearchOptions& opts) {
  std::vector<OrbitCandidate> candidates = invariant_line_candidates(params);
  const auto shot = shoot_symmetric_candidates(params, opts);
  candidates.insert(candidates.end(), shot.begin(), shot.end());

  RefineOptions ropts;
  ropts.classify_symmetry = false;
  std::vector<PeriodicOrbit> found;
  for (const auto& c : candidates) {
    try {
      double period = 2.0 * c.half_period;
      PeriodicOrbit po = refine_periodic_orbit(c.start, period, params, ropts).orbit;
      const double prime = minimal_period(po.initial_state, po.period, params, opts.max_repetition);
      if (prime < 0.99 * po.period) po = refine_periodic_orbit(po.initial_state, prime, params, ropts).orbit;
      if (po.action > opts.max_action) continue;
      const bool dup = std::any_of(found.begin(), found.end(), [&](const PeriodicOrbit& f) { return same_orbit(f, po); });
      if (!dup) found.push_back(po);
    } catch (const std::exception&) {
      // Candidates that do not converge or turn out marginal are dropped.
    }
  }
  for (auto& po : found) {
    const SymmetryCounts sc = classify_symmetry(po, params);
    po.n_s = sc.n_s;
    po.n_t = sc.n_t;
  }
  std::sort(found.begin(), found.end(),
            [](const PeriodicOrbit& a, const PeriodicOrbit& b) { return relevance(a) < relevance(b); });
  for (std::size_t i = 0; i < found.size(); ++i) found[i].id = static_cast<int>(i + 1);
  return found;
}

std::vector<CatalogueEntry> read_orbit_catalogue(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("orbit catalogue: cannot open " + file.string());
  std::vector<CatalogueEntry> out;
  std::string line;
  while (std::getline(in, line)) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    CatalogueEntry e;
    if (!(ls >> e.id)) continue;
    if (!(ls >> e.action >> e.lambda >> e.mu >> e.n_s >> e.n_t >> e.relevance)) {
      throw std::runtime_error("orbit catalogue: malformed entry " + std::to_string(e.id));
    }
    out.push_back(e);
  }
  return out;
}

CatalogueMatch match_catalogue(const std::vector<PeriodicOrbit>& found, const std::vector<CatalogueEntry>& catalogue,
                               double rel_s, double rel_lambda) {
  CatalogueMatch m;
  std::vector<bool> used(found.size(), false);
  for (const auto& e : catalogue) {
    bool hit = false;
    for (std::size_t i = 0; i < found.size(); ++i) {
      const PeriodicOrbit& po = found[i];
      if (used[i] || po.mu != e.mu) continue;
      if (std::abs(po.action - e.action) > rel_s * e.action) continue;
      if (std::abs(po.lambda - e.lambda) > rel_lambda * e.lambda) continue;
      used[i] = true;
      m.matched.push_back(po);
      m.matched.back().id = e.id;
      hit = true;
      break;
    }
    if (!hit) m.missing.push_back(e.id);
  }
  for (std::size_t i = 0; i < found.size(); ++i)
    if (!used[i]) m.extra.push_back(found[i]);
  return m;
}

}  // namespace scarbasis
