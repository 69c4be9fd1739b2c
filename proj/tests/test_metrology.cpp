#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <vector>

#include "sqmet/adaptive.hpp"
#include "sqmet/builtin.hpp"
#include "sqmet/metrology.hpp"
#include "support.hpp"

using namespace sqmet;
using testsupport::u_bs;
using testsupport::u_ps;

TEST_CASE("rho prefactor extremes and closed values") {
  REQUIRE(std::abs(rho_prefactor(0.25, 0.0) - 1.0) <= 1e-15);
  REQUIRE(std::abs(rho_prefactor(-0.25, 0.0) - 1.0) <= 1e-15);
  REQUIRE(rho_prefactor(0.0, 0.0) == 0.0);
  REQUIRE(rho_prefactor(0.0, 5.0) == 0.0);
  REQUIRE(rho_prefactor(0.25, 1.0) == Catch::Approx(1.0 / 9.0).margin(1e-15));
  REQUIRE_THROWS_AS(rho_prefactor(0.25, -0.1), std::invalid_argument);
}

TEST_CASE("rho prefactor is bounded and peaks at sqrt(4 ell + 1)/4") {
  rng::SplitMix64 gen(3);
  for (int i = 0; i < 200; ++i) {
    const double k = 10.0 * (gen.uniform01() - 0.5);
    const double ell = 10.0 * gen.uniform01();
    const double value = rho_prefactor(k, ell);
    REQUIRE(value >= 0.0);
    REQUIRE(value <= 1.0 + 1e-15);
  }
  for (double ell : {0.0, 0.5, 2.0}) {
    const double k_star = std::sqrt(4.0 * ell + 1.0) / 4.0;
    const double peak = rho_prefactor(k_star, ell);
    REQUIRE(peak == Catch::Approx(1.0 / (4.0 * ell + 1.0)).margin(1e-14));
    REQUIRE(peak > rho_prefactor(k_star * 1.01, ell));
    REQUIRE(peak > rho_prefactor(k_star * 0.99, ell));
  }
}

TEST_CASE("gamma curve of a phi-independent network is constant") {
  const auto spec = netdsl::parse("modes 2\nbs 1 2 pi/3\nps 1 0.4\n");
  const auto id = UnitaryMatrix::identity(2);
  std::vector<double> grid;
  for (int i = 0; i <= 20; ++i) grid.push_back(-1.0 + 0.1 * i);
  const auto curve = gamma_curve(spec, id, id, grid);
  for (const GammaPoint& pt : curve) {
    REQUIRE(pt.p == Catch::Approx(curve.front().p).margin(1e-12));
    REQUIRE(pt.gamma == Catch::Approx(curve.front().gamma).margin(1e-12));
  }
}

TEST_CASE("gamma curve of the two-mode example with pointwise-adapted output") {
  // With the output phases tuned at each phi the accumulated phase follows
  // (0.3 + 0.1)/2 phi + 0.7 phi + pi/2 = 0.9 phi + pi/2.
  const auto spec = builtin::two_mode_example();
  const auto v_in = builtin::two_mode_input_stage();
  for (double phi : {-0.7, 0.0, 0.4, 1.0, 2.2}) {
    const double alpha = 0.5 * (0.3 * phi - 0.1 * phi) - std::numbers::pi / 4.0;
    const auto v_out = u_bs(std::numbers::pi / 4) * u_ps(-alpha, alpha);
    const auto m = reduced_model(v_in, netdsl::evaluate(spec, phi), v_out, ProbeSpec(0.0));
    REQUIRE(m.p == Catch::Approx(1.0).margin(1e-12));
    REQUIRE(testsupport::angle_distance(m.gamma, 0.9 * phi + std::numbers::pi / 2.0) < 1e-10);
  }
}

TEST_CASE("gamma curve of the example network under a fixed refocused stage") {
  // Around the adaptation point the curve follows 0.9 phi + const with the
  // completion pinning gamma(phi_cl) = 0.
  const auto spec = builtin::two_mode_example();
  const auto v_in = builtin::two_mode_input_stage();
  const double phi_cl = 1.0;
  const auto v_out = build_refocusing_output(spec, v_in, phi_cl);
  std::vector<double> grid;
  for (int i = 0; i <= 80; ++i) grid.push_back(phi_cl - 0.4 + 0.01 * i);
  const auto curve = gamma_curve(spec, v_in, v_out, grid);
  for (std::size_t i = 0; i < curve.size(); ++i) {
    REQUIRE(curve[i].gamma ==
            Catch::Approx(0.9 * (grid[i] - phi_cl)).margin(1e-9));
    REQUIRE(curve[i].p >= 1.0 - 0.25 * 0.04 * 0.4 * 0.4 - 1e-6);
  }
}

TEST_CASE("gamma curve unwraps a pure phase shifter over many cycles") {
  const auto spec = netdsl::parse("modes 1\nps 1 phi\n");
  const auto id = UnitaryMatrix::identity(1);
  std::vector<double> grid;
  const int points = 200;
  for (int i = 0; i <= points; ++i) grid.push_back(4.0 * std::numbers::pi * i / points);
  const auto curve = gamma_curve(spec, id, id, grid);
  for (std::size_t i = 0; i < curve.size(); ++i)
    REQUIRE(curve[i].gamma == Catch::Approx(grid[i]).margin(1e-10));
}

TEST_CASE("gamma curve rejects bad grids and undefined phases") {
  const auto spec = builtin::two_mode_example();
  const auto v_in = builtin::two_mode_input_stage();
  const auto id = UnitaryMatrix::identity(2);
  const std::vector<double> not_increasing{0.0, 0.5, 0.4};
  REQUIRE_THROWS_AS(gamma_curve(spec, v_in, id, not_increasing), std::invalid_argument);

  // Output phases chosen so that P = 0 exactly at phi0: sin(0.2 phi0 - 2a) = -1.
  const double phi0 = 1.0;
  const double alpha = 0.5 * (0.2 * phi0 + std::numbers::pi / 2.0);
  const auto v_out = u_bs(std::numbers::pi / 4) * u_ps(-alpha, alpha);
  const std::vector<double> grid{phi0 - 0.02, phi0 - 0.01, phi0, phi0 + 0.01};
  REQUIRE_THROWS_AS(gamma_curve(spec, v_in, v_out, grid), std::domain_error);
}

TEST_CASE("dgamma closed forms and the zero-slope warning") {
  const auto ps = netdsl::parse("modes 1\nps 1 phi\n");
  const auto id1 = UnitaryMatrix::identity(1);
  REQUIRE(dgamma(ps, id1, id1, 0.3) == Catch::Approx(1.0).margin(1e-8));

  const auto spec = builtin::two_mode_example();
  const auto v_in = builtin::two_mode_input_stage();
  const double phi = 1.0;
  const auto v_out = build_refocusing_output(spec, v_in, phi);
  bool warn = true;
  REQUIRE(dgamma(spec, v_in, v_out, phi, &warn) == Catch::Approx(0.9).margin(1e-6));
  REQUIRE(!warn);

  const auto fixed = netdsl::parse("modes 2\nbs 1 2 pi/3\n");
  const auto id2 = UnitaryMatrix::identity(2);
  REQUIRE(dgamma(fixed, id2, id2, 0.5, &warn) == Catch::Approx(0.0).margin(1e-9));
  REQUIRE(warn);
}

TEST_CASE("exact Fisher information per sample") {
  const ReducedModeModel m{1.0, 0.0, 1.0};
  REQUIRE(exact_fisher_per_sample(m, 0.3, 0.0) == 0.0);
  const double s2 = quadrature_variance(m, 0.3);
  REQUIRE(exact_fisher_per_sample(m, 0.3, 0.01) ==
          Catch::Approx(1e-4 / (2.0 * s2 * s2)).margin(1e-18));
  // theta -> theta + pi leaves the variance, hence the FI, unchanged.
  REQUIRE(exact_fisher_per_sample(m, 0.3 + std::numbers::pi, 0.01) ==
          Catch::Approx(exact_fisher_per_sample(m, 0.3, 0.01)).margin(1e-15));
}

TEST_CASE("exact FI approaches the asymptotic form at the tuned point") {
  const auto spec = builtin::two_mode_example();
  const auto v_in = builtin::two_mode_input_stage();
  const double phi = 1.0;
  const auto v_out = build_refocusing_output(spec, v_in, phi);
  const double k = 0.25;
  const double n = 1e4;
  const ProbeSpec probe = ProbeSpec::from_mean_photons(n);
  const double theta = tuned_theta(0.0, k, n);
  const FisherPoint f = exact_fisher_at(spec, v_in, v_out, phi, probe, theta);
  const double asym = asymptotic_fisher(k, 0.0, f.dgamma, n);
  REQUIRE(f.fi / asym == Catch::Approx(1.0).margin(0.01));
}

TEST_CASE("fisher report bundles the tuned operating point") {
  const auto spec = builtin::two_mode_example();
  const auto v_in = builtin::two_mode_input_stage();
  const double phi = 1.0, k = 0.25, n = 1e4;
  const auto v_out = build_refocusing_output(spec, v_in, phi);
  const PhaseSlope s = phase_slope(spec, v_in, v_out, phi);

  const TuningParams exact{k, 0.0, tuned_theta(s.gamma, k, n)};
  const FisherReport rep = fisher_report(spec, v_in, v_out, phi, n, exact);
  REQUIRE(rep.dgamma == Catch::Approx(0.9).margin(1e-6));
  REQUIRE(rep.asymptotic_fi == Catch::Approx(8.0 * 0.81 * n * n).epsilon(1e-6));
  REQUIRE(rep.exact_fi_per_sample / rep.asymptotic_fi == Catch::Approx(1.0).margin(0.01));
  REQUIRE(rep.crb == Catch::Approx(1.0 / std::sqrt(rep.exact_fi_per_sample)).margin(1e-15));

  // Leakage ell = 1 scales the asymptote by rho(1/4, 1)/rho(1/4, 0) = 1/9.
  const TuningParams lossy{k, 1.0, tuned_theta(s.gamma, k, n)};
  const FisherReport rep_lossy = fisher_report(spec, v_in, v_out, phi, n, lossy);
  REQUIRE(rep_lossy.asymptotic_fi == Catch::Approx(rep.asymptotic_fi / 9.0).epsilon(1e-12));
  REQUIRE(rep_lossy.exact_fi_per_sample / rep_lossy.asymptotic_fi ==
          Catch::Approx(1.0).margin(0.01));
}

TEST_CASE("at k = 0 the exact FI collapses") {
  const auto spec = builtin::two_mode_example();
  const auto v_in = builtin::two_mode_input_stage();
  const double phi = 1.0;
  const auto v_out = build_refocusing_output(spec, v_in, phi);
  const ProbeSpec probe = ProbeSpec::from_mean_photons(1e4);
  // Local oscillator exactly at the squeezed direction: stationary variance.
  const FisherPoint f =
      exact_fisher_at(spec, v_in, v_out, phi, probe, std::numbers::pi / 2.0);
  REQUIRE(std::abs(f.fi) < 1e-10);
}

TEST_CASE("asymptotic Fisher information") {
  REQUIRE(asymptotic_fisher(0.25, 0.0, 1.0, 100.0) == Catch::Approx(80000.0).margin(1e-9));
  REQUIRE(asymptotic_fisher(0.0, 0.0, 1.0, 100.0) == 0.0);
  REQUIRE(asymptotic_fisher(0.17, 0.3, 0.8, 2000.0) ==
          Catch::Approx(4.0 * asymptotic_fisher(0.17, 0.3, 0.8, 1000.0)).margin(1e-9));
  REQUIRE_THROWS_AS(asymptotic_fisher(0.25, 0.0, 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("Cramer-Rao bound") {
  REQUIRE(cramer_rao(10000.0) == Catch::Approx(0.01).margin(1e-15));
  REQUIRE_THROWS_AS(cramer_rao(0.0), std::invalid_argument);
  REQUIRE_THROWS_AS(cramer_rao(-1.0), std::invalid_argument);
  // Inverting the asymptotic FI at rho = 1: delta phi = 1 / (sqrt(8) |dgamma| N).
  const double dg = 0.9, n = 1e4;
  REQUIRE(cramer_rao(asymptotic_fisher(0.25, 0.0, dg, n)) ==
          Catch::Approx(1.0 / (std::sqrt(8.0) * dg * n)).margin(1e-15));
}
