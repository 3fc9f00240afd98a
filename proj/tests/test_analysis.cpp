#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "scarbasis/analysis.hpp"

using namespace scarbasis;

namespace {

const Grid2D kSmall{8, 8, 2.0, 2.0};

WaveFunction random_state(std::mt19937& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  WaveFunction psi(kSmall);
  for (Eigen::Index i = 0; i < psi.values().size(); ++i) psi.values()[i] = cplx(n(rng), 0.0);
  return psi.normalize();
}

// Inverse-CDF sampling, independent of std::weibull_distribution.
std::vector<double> weibull_samples(double k, double l, std::size_t count, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> out(count);
  for (auto& x : out) x = l * std::pow(-std::log1p(-u(rng)), 1.0 / k);
  return out;
}

}  // namespace

TEST_CASE("participation ratio extremes") {
  CHECK(participation_ratio({0.0, 1.0, 0.0}) == 1.0);
  CHECK(participation_ratio({-0.3}) == doctest::Approx(1.0).epsilon(1e-15));
  for (int n : {2, 7, 40}) {
    const std::vector<double> flat(static_cast<std::size_t>(n), 1.0 / std::sqrt(n));
    CHECK(participation_ratio(flat) == doctest::Approx(n).epsilon(1e-13));
  }
  // Scale invariance.
  CHECK(participation_ratio({0.2, 0.5, 0.1}) == doctest::Approx(participation_ratio({2.0, 5.0, 1.0})).epsilon(1e-14));
  CHECK_THROWS(participation_ratio({0.0, 0.0}));
  CHECK(mean_pr_estimate(3.0, Irrep::A1) == doctest::Approx(8.0).epsilon(1e-15));
  CHECK(mean_pr_estimate(3.0, Irrep::E1) == doctest::Approx(6.0).epsilon(1e-15));
  CHECK(semiclassical_pr(4.0 * std::numbers::pi) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("Weibull distribution functions") {
  const double k = 1.2030, l = 2.8323;
  CHECK(weibull_cdf(l, k, l) == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-14));
  CHECK(weibull_cdf(0.0, k, l) == 0.0);
  CHECK(weibull_pdf(-1.0, k, l) == 0.0);
  for (double r : {0.1, 1.0, 3.5}) CHECK(weibull_cdf(r, 1.0, 1.0) == doctest::Approx(1.0 - std::exp(-r)).epsilon(1e-14));
  // Trapezoid integral of the density reproduces the CDF, away from the
  // integrable cusp at the origin.
  const int steps = 20000;
  const double bottom = 0.5, top = 6.0;
  double integral = 0.0;
  for (int i = 0; i < steps; ++i) {
    const double a = bottom + (top - bottom) * i / steps, b = bottom + (top - bottom) * (i + 1) / steps;
    integral += 0.5 * (b - a) * (weibull_pdf(a, k, l) + weibull_pdf(b, k, l));
  }
  CHECK(integral == doctest::Approx(weibull_cdf(top, k, l) - weibull_cdf(bottom, k, l)).epsilon(1e-7));
}

TEST_CASE("Weibull fit recovers its parameters") {
  const double k = 1.2030, l = 2.8323;
  for (unsigned seed : {1u, 2u, 3u}) {
    CAPTURE(seed);
    const WeibullFit fit = weibull_fit(weibull_samples(k, l, 2000, seed));
    CHECK(fit.maximum_likelihood);
    CHECK(fit.k == doctest::Approx(k).epsilon(0.05));
    CHECK(fit.l == doctest::Approx(l).epsilon(0.05));
  }
  // A zero sample forces the least-squares fallback, which still lands close.
  auto with_zero = weibull_samples(k, l, 2000, 4);
  with_zero[0] = 0.0;
  const WeibullFit ls = weibull_fit(with_zero);
  CHECK(!ls.maximum_likelihood);
  CHECK(ls.k == doctest::Approx(k).epsilon(0.1));
  CHECK(ls.l == doctest::Approx(l).epsilon(0.1));

  CHECK_THROWS_AS(weibull_fit(weibull_samples(k, l, 19, 5)), WeibullFitError);
  CHECK_THROWS_AS(weibull_fit(std::vector<double>(30, 1.0)), WeibullFitError);
  auto negative = weibull_samples(k, l, 30, 6);
  negative[3] = -0.1;
  CHECK_THROWS_AS(weibull_fit(negative), WeibullFitError);
}

TEST_CASE("error bounds") {
  const ErrorBounds b = error_bounds(0.1);
  CHECK(b.energy == doctest::Approx(7.9057e-4).epsilon(1e-4));
  CHECK(b.overlap == doctest::Approx(3.1623e-5).epsilon(1e-4));
  CHECK(b.valid);
  const ErrorBounds z = error_bounds(0.0);
  CHECK(z.energy == 0.0);
  CHECK(z.overlap == 0.0);
  CHECK(!error_bounds(0.3).valid);
  CHECK(error_bounds(0.299).valid);
  CHECK_THROWS(error_bounds(-0.1));
}

TEST_CASE("mobile mean") {
  const std::vector<double> flat(50, 0.7);
  for (double v : mobile_mean(flat)) CHECK(v == doctest::Approx(0.7).epsilon(1e-15));
  std::vector<double> noisy(30);
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto& v : noisy) v = u(rng);
  CHECK(mobile_mean(noisy, 1) == noisy);
  // A linear ramp is preserved everywhere by a symmetric window.
  std::vector<double> ramp(60);
  for (std::size_t i = 0; i < ramp.size(); ++i) ramp[i] = 0.3 * static_cast<double>(i) - 2.0;
  const auto m = mobile_mean(ramp, 20);
  for (std::size_t i = 0; i < ramp.size(); ++i) CHECK(m[i] == doctest::Approx(ramp[i]).epsilon(1e-12));
  // Direct 21-point average at an interior index.
  double direct = 0.0;
  for (std::size_t i = 5; i <= 25; ++i) direct += noisy[i];
  CHECK(mobile_mean(noisy, 20)[15] == doctest::Approx(direct / 21.0).epsilon(1e-14));
  CHECK(mobile_mean({}, 20).empty());
  CHECK_THROWS(mobile_mean(flat, 0));
}

TEST_CASE("averaged scar intensities") {
  // Hand evaluations of the closed form.
  CHECK(scar_intensity_average(1, 3.0) == doctest::Approx(0.3421675187583023).epsilon(1e-12));
  CHECK(scar_intensity_average(2, 3.0) == doctest::Approx(0.1874873751928826).epsilon(1e-12));
  CHECK(scar_intensity_average(1, 3.0, 0.3) == doctest::Approx(0.3539461005005834).epsilon(1e-12));
  CHECK(scar_intensity_average(2, 3.0, -0.3) == doctest::Approx(0.1676793436007592).epsilon(1e-12));
  CHECK(scar_intensity_average(1, 0.5) == doctest::Approx(0.6135792864941008).epsilon(1e-12));
  CHECK(scar_intensity_average(1, 1000.0) < 5e-3);
  // The closed form is asymptotic; below sigma ~ 0.7 the j = 2 branch overtakes.
  for (double s : {0.8, 1.0, 2.0, 5.0, 20.0}) CHECK(scar_intensity_average(1, s) > scar_intensity_average(2, s));
  CHECK_THROWS_AS(scar_intensity_average(1, 0.0), SingularityError);
  CHECK_THROWS_AS(scar_intensity_average(1, 0.5, -1.0), SingularityError);
  // alpha + 9/8 <= 0 once ln(sqrt(2) sigma) < -1.702.
  CHECK_THROWS_AS(scar_intensity_average(1, 0.1), SingularityError);
  CHECK_THROWS(scar_intensity_average(3, 1.0));
}

TEST_CASE("local representation") {
  std::mt19937 rng(17);
  std::vector<WaveFunction> scars;
  for (int i = 0; i < 6; ++i) scars.push_back(random_state(rng));

  const LocalRepresentation same = local_representation(scars[3], scars);
  REQUIRE(!same.entries.empty());
  CHECK(same.entries[0].scar == 3);
  CHECK(same.entries[0].intensity == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(same.entries[0].coefficient) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(same.entries.size() == 1);
  CHECK(participation_ratio(same.coefficients()) == doctest::Approx(1.0).epsilon(1e-10));

  // State inside the span of the scars: cumulative weight reaches one and
  // never decreases.
  WaveFunction mix(kSmall);
  mix.values() = 0.6 * scars[0].values() - 0.5 * scars[2].values() + 0.3 * scars[5].values();
  mix.normalize();
  const LocalRepresentation rep = local_representation(mix, scars);
  CHECK(rep.entries.size() <= scars.size());
  for (std::size_t k = 1; k < rep.entries.size(); ++k) CHECK(rep.entries[k].cumulative >= rep.entries[k - 1].cumulative);
  CHECK(rep.entries.back().cumulative == doctest::Approx(1.0).epsilon(1e-10));

  // Random states against a random scar set. Each pick is the largest
  // intensity among the remaining residuals (recomputed here), x_k <= C_k^2
  // since residual norms never exceed one, and the total is bounded.
  for (int trial = 0; trial < 20; ++trial) {
    CAPTURE(trial);
    std::vector<WaveFunction> pool;
    for (int i = 0; i < 12; ++i) pool.push_back(random_state(rng));
    const WaveFunction target = random_state(rng);
    const LocalRepresentation r = local_representation(target, pool);
    REQUIRE(r.entries.size() == pool.size());
    const double area = kSmall.cell_area();
    std::vector<Eigen::VectorXcd> res;
    for (const auto& p : pool) res.push_back(p.values());
    std::vector<bool> used(pool.size(), false);
    double total = 0.0;
    for (std::size_t k = 0; k < r.entries.size(); ++k) {
      double best = -1.0;
      for (std::size_t j = 0; j < pool.size(); ++j)
        if (!used[j]) best = std::max(best, std::norm(res[j].dot(target.values()) * area));
      CHECK(r.entries[k].intensity == doctest::Approx(best).epsilon(1e-10));
      const std::size_t j = r.entries[k].scar;
      REQUIRE(!used[j]);
      used[j] = true;
      const Eigen::VectorXcd phi = res[j] / std::sqrt(res[j].squaredNorm() * area);
      for (std::size_t i = 0; i < pool.size(); ++i)
        if (!used[i]) res[i] -= (phi.dot(res[i]) * area) * phi;
      const double c = r.entries[k].coefficient;
      CHECK(r.entries[k].intensity <= c * c + 1e-12);
      total += r.entries[k].intensity;
      if (k > 0) CHECK(r.entries[k].cumulative >= r.entries[k - 1].cumulative);
    }
    CHECK(total <= 1.0 + 1e-8);
  }

  // Orthonormal scars: intensities are the plain squared overlaps, sorted.
  std::vector<WaveFunction> units;
  for (int i = 0; i < 4; ++i) {
    WaveFunction u(kSmall);
    u.values()[i] = 1.0;
    units.push_back(u.normalize());
  }
  WaveFunction combo(kSmall);
  combo.values().head(4) << 0.1, 0.7, -0.4, 0.2;
  combo.normalize();
  const LocalRepresentation ordered = local_representation(combo, units);
  REQUIRE(ordered.entries.size() == 4);
  CHECK(ordered.entries[0].scar == 1);
  CHECK(ordered.entries[1].scar == 2);
  CHECK(ordered.entries[2].scar == 3);
  CHECK(ordered.entries[3].scar == 0);
  CHECK(ordered.entries[1].coefficient < 0.0);

  CHECK(local_representation(mix, {}).entries.empty());
  CHECK_THROWS_AS(local_representation(mix, {WaveFunction(Grid2D{4, 4, 2.0, 2.0})}), GridError);
}

TEST_CASE("comparison and reconstruction CSV") {
  std::ostringstream c;
  StateComparison row;
  row.index = 2;
  row.bounds = error_bounds(0.1);
  write_comparison_csv(c, {row});
  const std::string text = c.str();
  CHECK(std::count(text.begin(), text.end(), '\n') == 2);

  ScarFunction s;
  s.orbit_id = 5;
  s.n = 2;
  std::ostringstream r;
  write_reconstruction_csv(r, {{0, 1.5, 2.0, {{&s, 0.75}}}}, 2);
  const std::string rt = r.str();
  CHECK(rt.rfind("N,E,R,po1,n1,sum1,po2,n2,sum2\n", 0) == 0);
  CHECK(rt.find(",5,2,75") != std::string::npos);
  CHECK(rt.substr(rt.size() - 4) == ",,,\n");
}
