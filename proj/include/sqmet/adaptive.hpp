#pragma once

// The adapted stage: build a refocusing unitary from a coarse estimate
// phi_cl so that P(phi_cl) = 1, tune the local-oscillator phase, simulate
// the shot-noise-limited pre-estimation, and quantify how much refocusing
// quality is lost when the true phi differs from phi_cl.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>

#include "sqmet/gaussian.hpp"
#include "sqmet/netdsl.hpp"
#include "sqmet/rng.hpp"
#include "sqmet/unitary.hpp"

namespace sqmet {

enum class AdaptSide { adapt_output, adapt_input };

// Coarse classical estimate phi_cl = phi + eps with eps ~ Normal(0, (c/sqrt(N))^2),
// the shot-noise precision achievable with an N-photon classical strategy.
inline double classical_preestimate(double true_phi, double n_photons, double c,
                                    std::uint64_t seed) {
  if (!(n_photons >= 1.0))
    throw std::invalid_argument("classical_preestimate: N must be >= 1");
  if (!(c > 0.0)) throw std::invalid_argument("classical_preestimate: c must be > 0");
  rng::SplitMix64 gen(seed);
  return true_phi + (c / std::sqrt(n_photons)) * gen.normal();
}

// V_out = W' with W = complete_unitary(U_{phi_cl} V_in e1): the measured
// output vector is steered onto the propagated probe vector, so the full
// transfer matrix has (V_out U_{phi_cl} V_in)_{11} = 1 exactly. As a side
// effect the accumulated phase under the plan is 0 at phi_cl.
inline UnitaryMatrix build_refocusing_output(const netdsl::NetworkSpec& spec,
                                             const UnitaryMatrix& v_in, double phi_cl) {
  const UnitaryMatrix u = netdsl::evaluate(spec, phi_cl);
  const CMat prop = multiply(u.mat(), v_in.mat());
  return complete_unitary(prop.column(0)).adjoint();
}

// Mirror construction adapting the input stage instead, for an arbitrary
// fixed V_out: V_in's first column is set to U'_{phi_cl} V_out' e1.
inline UnitaryMatrix build_refocusing_input(const netdsl::NetworkSpec& spec,
                                            const UnitaryMatrix& v_out, double phi_cl) {
  const UnitaryMatrix u = netdsl::evaluate(spec, phi_cl);
  const CMat back = multiply(adjoint(u.mat()), adjoint(v_out.mat()));
  return complete_unitary(back.column(0));
}

// theta = gamma + sign*pi/2 + k/N, reduced to (-pi, pi]. k = 0 defeats the
// protocol (the variance is stationary there), so it is rejected.
inline double tuned_theta(double gamma, double k, double n_photons, int sign = +1) {
  if (k == 0.0)
    throw std::invalid_argument("tuned_theta: k must be nonzero (k = 0 gives a locally "
                                "insensitive outcome distribution)");
  if (!(n_photons > 0.0)) throw std::invalid_argument("tuned_theta: N must be > 0");
  if (sign != 1 && sign != -1) throw std::invalid_argument("tuned_theta: sign must be +-1");
  const double two_pi = 2.0 * std::numbers::pi;
  double theta = gamma + sign * 0.5 * std::numbers::pi + k / n_photons;
  theta -= two_pi * std::round(theta / two_pi);
  if (theta <= -std::numbers::pi) theta += two_pi;
  return theta;
}

// A fully resolved adapted stage: both unitaries, the tuning numbers and the
// local-oscillator phase as built at phi_cl.
struct AdaptationPlan {
  AdaptSide side = AdaptSide::adapt_output;
  UnitaryMatrix v_in;
  UnitaryMatrix v_out;
  double phi_cl = 0.0;
  double k = 0.25;
  double n_photons = 0.0;
  double theta = 0.0;  // tuned_theta at phi_cl; trackers may retune per shot
};

// Builds the adapted stage on the requested side, leaving the other stage
// exactly as given.
inline AdaptationPlan make_plan(const netdsl::NetworkSpec& spec,
                                const UnitaryMatrix& fixed_stage, double phi_cl, double k,
                                double n_photons, AdaptSide side = AdaptSide::adapt_output,
                                int sign = +1) {
  UnitaryMatrix v_in = fixed_stage;
  UnitaryMatrix v_out = fixed_stage;
  if (side == AdaptSide::adapt_output)
    v_out = build_refocusing_output(spec, v_in, phi_cl);
  else
    v_in = build_refocusing_input(spec, v_out, phi_cl);
  const ReducedModeModel m =
      reduced_model(v_in, netdsl::evaluate(spec, phi_cl), v_out, ProbeSpec(0.0));
  AdaptationPlan plan{side, std::move(v_in), std::move(v_out), phi_cl, k, n_photons,
                      tuned_theta(m.gamma, k, n_photons, sign)};
  return plan;
}

struct RobustnessReport {
  double one_minus_p = 0.0;
  double ell_equiv = 0.0;  // (1 - P) * N, mean photons leaked at budget N
};

// Evaluates the refocusing loss at the true phi under a plan built at
// phi_cl. For smooth networks 1 - P is quadratic in (phi - phi_cl), so a
// shot-noise pre-estimate keeps ell_equiv bounded as N grows.
inline RobustnessReport robustness_check(const netdsl::NetworkSpec& spec,
                                         const UnitaryMatrix& v_in, double true_phi,
                                         double phi_cl, double n_photons) {
  const UnitaryMatrix v_out = build_refocusing_output(spec, v_in, phi_cl);
  const ReducedModeModel m =
      reduced_model(v_in, netdsl::evaluate(spec, true_phi), v_out, ProbeSpec(0.0));
  RobustnessReport r;
  r.one_minus_p = std::max(0.0, 1.0 - m.p);
  r.ell_equiv = r.one_minus_p * n_photons;
  return r;
}

}  // namespace sqmet
