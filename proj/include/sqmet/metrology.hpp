#pragma once

// Fisher-information and precision-bound calculations: exact per-sample FI
// of the Gaussian outcome model, the asymptotic FI 8 rho(k,l) (dgamma)^2 N^2
// with prefactor rho(k,l) = [8k / (16k^2 + 4l + 1)]^2, phase-slope extraction
// with unwrapping, and the Cramer-Rao bound.

#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sqmet/gaussian.hpp"
#include "sqmet/netdsl.hpp"
#include "sqmet/unitary.hpp"

namespace sqmet {

// Homodyne/refocusing tuning state: k is the dimensionless local-oscillator
// offset (theta detuning k/N), ell the mean photons lost to unmeasured
// channels. Both are held independent of N.
struct TuningParams {
  double k = 0.25;
  double ell = 0.0;
  double theta = 0.0;
};

inline double rho_prefactor(double k, double ell) {
  if (!(ell >= 0.0)) throw std::invalid_argument("rho_prefactor: ell must be >= 0");
  const double q = 8.0 * k / (16.0 * k * k + 4.0 * ell + 1.0);
  return q * q;
}

inline constexpr double kPhaseDefinedTol = 1e-14;

struct GammaPoint {
  double phi = 0.0;
  double p = 0.0;
  double gamma = 0.0;  // unwrapped
};

namespace detail {

// Shift g by a multiple of 2*pi so it is nearest to ref.
inline double unwrap_near(double g, double ref) {
  const double two_pi = 2.0 * std::numbers::pi;
  return g - two_pi * std::round((g - ref) / two_pi);
}

}  // namespace detail

// (P, gamma) over a strictly increasing phi grid; gamma values unwrapped so
// the curve is continuous. The grid must be fine enough that successive
// unwrapped steps stay below pi/2, otherwise unwrapping is ambiguous and the
// call is rejected.
inline std::vector<GammaPoint> gamma_curve(const netdsl::NetworkSpec& spec,
                                           const UnitaryMatrix& v_in,
                                           const UnitaryMatrix& v_out,
                                           std::span<const double> phis) {
  if (phis.empty()) throw std::invalid_argument("gamma_curve: empty grid");
  for (std::size_t i = 1; i < phis.size(); ++i)
    if (!(phis[i] > phis[i - 1]))
      throw std::invalid_argument("gamma_curve: grid must be strictly increasing");

  std::vector<GammaPoint> out;
  out.reserve(phis.size());
  for (double phi : phis) {
    const ReducedModeModel m =
        reduced_model(v_in, netdsl::evaluate(spec, phi), v_out, ProbeSpec(0.0));
    if (m.p < kPhaseDefinedTol)
      throw std::domain_error("gamma_curve: P = 0 at phi = " + std::to_string(phi) +
                              ", accumulated phase undefined");
    GammaPoint pt{phi, m.p, m.gamma};
    if (!out.empty()) {
      pt.gamma = detail::unwrap_near(pt.gamma, out.back().gamma);
      if (std::abs(pt.gamma - out.back().gamma) > 0.5 * std::numbers::pi)
        throw std::invalid_argument(
            "gamma_curve: grid too coarse near phi = " + std::to_string(phi) +
            " (step moves gamma by more than pi/2); refine the grid");
    }
    out.push_back(pt);
  }
  return out;
}

// Central-difference slopes of P(phi) and unwrapped gamma(phi).
struct PhaseSlope {
  double p = 0.0;
  double gamma = 0.0;
  double dp = 0.0;
  double dgamma = 0.0;
};

inline PhaseSlope phase_slope(const netdsl::NetworkSpec& spec, const UnitaryMatrix& v_in,
                              const UnitaryMatrix& v_out, double phi) {
  const double h = netdsl::derivative_step(phi);
  const ProbeSpec probe(0.0);
  const ReducedModeModel mid = reduced_model(v_in, netdsl::evaluate(spec, phi), v_out, probe);
  const ReducedModeModel up = reduced_model(v_in, netdsl::evaluate(spec, phi + h), v_out, probe);
  const ReducedModeModel dn = reduced_model(v_in, netdsl::evaluate(spec, phi - h), v_out, probe);
  if (mid.p < kPhaseDefinedTol || up.p < kPhaseDefinedTol || dn.p < kPhaseDefinedTol)
    throw std::domain_error("phase_slope: P = 0 near phi = " + std::to_string(phi) +
                            ", accumulated phase undefined");
  const double g0 = mid.gamma;
  const double gu = detail::unwrap_near(up.gamma, g0);
  const double gd = detail::unwrap_near(dn.gamma, g0);
  PhaseSlope s;
  s.p = mid.p;
  s.gamma = g0;
  s.dp = (up.p - dn.p) / (2.0 * h);
  s.dgamma = (gu - gd) / (2.0 * h);
  return s;
}

// d gamma / d phi. The protocol assumes this is nonzero; when it is smaller
// than 1e-9 in magnitude, *assumption_violated is set (when provided).
inline double dgamma(const netdsl::NetworkSpec& spec, const UnitaryMatrix& v_in,
                     const UnitaryMatrix& v_out, double phi,
                     bool* assumption_violated = nullptr) {
  const PhaseSlope s = phase_slope(spec, v_in, v_out, phi);
  if (assumption_violated) *assumption_violated = std::abs(s.dgamma) < 1e-9;
  return s.dgamma;
}

// Fisher information of one homodyne sample, a zero-mean normal whose
// variance depends on phi: F = (d sigma^2 / d phi)^2 / (2 sigma^4).
inline double exact_fisher_per_sample(const ReducedModeModel& model, double theta,
                                      double dsigma2_dphi) {
  const double s2 = quadrature_variance(model, theta);
  if (!(s2 > 0.0)) throw std::invalid_argument("exact_fisher_per_sample: zero variance");
  return dsigma2_dphi * dsigma2_dphi / (2.0 * s2 * s2);
}

struct FisherPoint {
  double p = 0.0;
  double gamma = 0.0;
  double dgamma = 0.0;
  double sigma2 = 0.0;
  double dsigma2 = 0.0;
  double fi = 0.0;  // per sample
};

// Exact per-sample FI at (phi, theta): d sigma^2/d phi by chain rule through
// the finite-difference slopes of P and gamma,
//   d sigma^2 / d P     = [e^{2r} cos^2 D + e^{-2r} sin^2 D - 1] / 2,
//   d sigma^2 / d gamma = P sinh(2r) sin(2D),   D = theta - gamma.
inline FisherPoint exact_fisher_at(const netdsl::NetworkSpec& spec, const UnitaryMatrix& v_in,
                                   const UnitaryMatrix& v_out, double phi,
                                   const ProbeSpec& probe, double theta) {
  const PhaseSlope s = phase_slope(spec, v_in, v_out, phi);
  const ReducedModeModel model{s.p, s.gamma, probe.r};
  const double d = theta - s.gamma;
  const double c2 = std::cos(d) * std::cos(d);
  const double dvar_dp = 0.5 * (std::exp(2.0 * probe.r) * c2 +
                                std::exp(-2.0 * probe.r) * (1.0 - c2) - 1.0);
  const double dvar_dgamma = s.p * std::sinh(2.0 * probe.r) * std::sin(2.0 * d);
  FisherPoint f;
  f.p = s.p;
  f.gamma = s.gamma;
  f.dgamma = s.dgamma;
  f.sigma2 = quadrature_variance(model, theta);
  f.dsigma2 = dvar_dp * s.dp + dvar_dgamma * s.dgamma;
  f.fi = exact_fisher_per_sample(model, theta, f.dsigma2);
  return f;
}

// Asymptotic FI 8 rho(k, ell) (dgamma)^2 N^2 at the tuned operating point.
inline double asymptotic_fisher(double k, double ell, double dgamma, double n_photons) {
  if (!(n_photons > 0.0)) throw std::invalid_argument("asymptotic_fisher: N must be > 0");
  return 8.0 * rho_prefactor(k, ell) * dgamma * dgamma * n_photons * n_photons;
}

// delta phi >= 1 / sqrt(F)
inline double cramer_rao(double total_fisher) {
  if (!(total_fisher > 0.0))
    throw std::invalid_argument("cramer_rao: Fisher information must be > 0");
  return 1.0 / std::sqrt(total_fisher);
}

struct FisherReport {
  double exact_fi_per_sample = 0.0;
  double asymptotic_fi = 0.0;
  double dgamma = 0.0;
  double crb = 0.0;  // per sample, 1/sqrt(exact_fi_per_sample)
};

// Exact vs asymptotic per-sample FI for a photon budget N at the operating
// point described by the tuning state: local-oscillator phase tuning.theta
// and exit probability P = 1 - ell/N, with the leakage held phi-independent
// so the comparison isolates the asymptotic law.
inline FisherReport fisher_report(const netdsl::NetworkSpec& spec, const UnitaryMatrix& v_in,
                                  const UnitaryMatrix& v_out, double phi, double n_photons,
                                  const TuningParams& tuning) {
  if (!(n_photons > 0.0)) throw std::invalid_argument("fisher_report: N must be > 0");
  const ProbeSpec probe = ProbeSpec::from_mean_photons(n_photons);
  const PhaseSlope s = phase_slope(spec, v_in, v_out, phi);
  const ReducedModeModel model{std::max(0.0, 1.0 - tuning.ell / n_photons), s.gamma,
                               probe.r};
  const double d = tuning.theta - s.gamma;
  const double dvar_dgamma = model.p * std::sinh(2.0 * probe.r) * std::sin(2.0 * d);
  FisherReport rep;
  rep.dgamma = s.dgamma;
  rep.exact_fi_per_sample =
      exact_fisher_per_sample(model, tuning.theta, dvar_dgamma * s.dgamma);
  rep.asymptotic_fi = asymptotic_fisher(tuning.k, tuning.ell, s.dgamma, n_photons);
  rep.crb = cramer_rao(rep.exact_fi_per_sample);
  return rep;
}

}  // namespace sqmet
