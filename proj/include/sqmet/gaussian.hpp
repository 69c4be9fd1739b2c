#pragma once

// Exact Gaussian statistics of the first output mode for the pipeline
// squeezer (mode 1) -> V_in -> U_phi -> V_out -> homodyne x_theta on mode 1.
//
// Conventions (used consistently by the closed form, the covariance oracle
// and everything downstream):
//   x_theta = (a e^{-i theta} + a' e^{i theta}) / sqrt(2), vacuum variance 1/2;
//   the squeezer anti-squeezes x and squeezes p, so with accumulated phase
//   gamma the minimum-variance quadrature at the output is x_{gamma + pi/2}
//   with variance e^{-2r}/2.

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "sqmet/rng.hpp"
#include "sqmet/unitary.hpp"

namespace sqmet {

// Single-mode squeezed-vacuum probe; mean photon number N = sinh^2(r).
struct ProbeSpec {
  double r = 0.0;

  explicit ProbeSpec(double squeeze) : r(squeeze) {
    if (!std::isfinite(r) || r < 0.0)
      throw std::invalid_argument("ProbeSpec: squeezing parameter must be finite and >= 0");
  }

  static ProbeSpec from_mean_photons(double n) {
    if (!std::isfinite(n) || n < 0.0)
      throw std::invalid_argument("ProbeSpec: mean photon number must be finite and >= 0");
    return ProbeSpec(std::asinh(std::sqrt(n)));
  }

  double mean_photons() const { return std::sinh(r) * std::sinh(r); }
};

// (P, gamma, r) fully determine the first-output-mode quadrature statistics:
// P is the first-port exit probability, gamma the accumulated phase.
struct ReducedModeModel {
  double p = 1.0;
  double gamma = 0.0;
  double r = 0.0;
};

inline ReducedModeModel reduced_model(const UnitaryMatrix& v_in, const UnitaryMatrix& u_phi,
                                      const UnitaryMatrix& v_out, const ProbeSpec& probe) {
  if (v_in.dim() != u_phi.dim() || u_phi.dim() != v_out.dim())
    throw std::invalid_argument("reduced_model: dimension mismatch");
  const UnitaryMatrix t = v_out * u_phi * v_in;
  const cxd t11 = t(0, 0);
  ReducedModeModel m;
  m.p = std::min(1.0, std::norm(t11));
  m.gamma = std::arg(t11);  // (-pi, pi]
  if (m.gamma <= -std::numbers::pi) m.gamma = std::numbers::pi;
  m.r = probe.r;
  return m;
}

// sigma^2(theta) = [(1-P) + P (e^{2r} cos^2(theta-gamma) + e^{-2r} sin^2(theta-gamma))] / 2.
// Light scattered into unmeasured modes contributes exactly vacuum noise.
inline double quadrature_variance(const ReducedModeModel& m, double theta) {
  const double c = std::cos(theta - m.gamma);
  const double s = std::sin(theta - m.gamma);
  return 0.5 * ((1.0 - m.p) + m.p * (std::exp(2.0 * m.r) * c * c +
                                     std::exp(-2.0 * m.r) * s * s));
}

namespace detail {

// Cyclic Jacobi eigensolver for small real symmetric matrices.
// Returns eigenvalues; optionally accumulates eigenvectors (columns of q).
inline std::vector<double> sym_eigen(std::vector<double> a, int n,
                                     std::vector<double>* q_out = nullptr) {
  std::vector<double> q;
  if (q_out) {
    q.assign(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) q[static_cast<std::size_t>(i) * n + i] = 1.0;
  }
  const auto at = [&](std::vector<double>& m, int i, int j) -> double& {
    return m[static_cast<std::size_t>(i) * n + j];
  };
  double scale = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) scale = std::max(scale, std::abs(at(a, i, j)));
  const double tol = 1e-15 * std::max(scale, 1.0);

  for (int sweep = 0; sweep < 128; ++sweep) {
    double off = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) off = std::max(off, std::abs(at(a, i, j)));
    if (off <= tol) break;
    for (int p = 0; p < n - 1; ++p)
      for (int r = p + 1; r < n; ++r) {
        const double apr = at(a, p, r);
        if (std::abs(apr) <= tol) continue;
        const double theta = 0.5 * (at(a, r, r) - at(a, p, p)) / apr;
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = at(a, k, p), akr = at(a, k, r);
          at(a, k, p) = c * akp - s * akr;
          at(a, k, r) = s * akp + c * akr;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = at(a, p, k), ark = at(a, r, k);
          at(a, p, k) = c * apk - s * ark;
          at(a, r, k) = s * apk + c * ark;
        }
        if (q_out)
          for (int k = 0; k < n; ++k) {
            const double qkp = at(q, k, p), qkr = at(q, k, r);
            at(q, k, p) = c * qkp - s * qkr;
            at(q, k, r) = s * qkp + c * qkr;
          }
      }
  }
  std::vector<double> eig(n);
  for (int i = 0; i < n; ++i) eig[i] = at(a, i, i);
  if (q_out) *q_out = std::move(q);
  return eig;
}

}  // namespace detail

// 2M x 2M real covariance matrix in (x1, p1, ..., xM, pM) ordering with zero
// mean vector. Brute-force representation used as the oracle against the
// closed-form reduced model.
class CovarianceState {
 public:
  static CovarianceState vacuum(int modes) {
    CovarianceState st;
    st.modes_ = modes;
    const int n = 2 * modes;
    st.s_.assign(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) st.at(i, i) = 0.5;
    return st;
  }

  int modes() const { return modes_; }
  double entry(int i, int j) const { return s_[static_cast<std::size_t>(i) * 2 * modes_ + j]; }

  // diag(e^{r}, e^{-r}) on the (x, p) pair of one mode.
  void apply_squeezer(int mode, double r) {
    const int n = 2 * modes_;
    const double ex = std::exp(r), ep = std::exp(-r);
    for (int j = 0; j < n; ++j) {
      at(2 * mode, j) *= ex;
      at(2 * mode + 1, j) *= ep;
    }
    for (int i = 0; i < n; ++i) {
      at(i, 2 * mode) *= ex;
      at(i, 2 * mode + 1) *= ep;
    }
  }

  // Quadrature representation of a passive unitary: 2x2 block (j,k) equals
  // [[Re U_jk, -Im U_jk], [Im U_jk, Re U_jk]].
  void apply_unitary(const UnitaryMatrix& u) {
    if (u.dim() != modes_) throw std::invalid_argument("CovarianceState: dimension mismatch");
    const int n = 2 * modes_;
    std::vector<double> sym(static_cast<std::size_t>(n) * n, 0.0);
    const auto s_of = [&](int i, int j) -> double& {
      return sym[static_cast<std::size_t>(i) * n + j];
    };
    for (int j = 0; j < modes_; ++j)
      for (int k = 0; k < modes_; ++k) {
        const cxd z = u(j, k);
        s_of(2 * j, 2 * k) = z.real();
        s_of(2 * j, 2 * k + 1) = -z.imag();
        s_of(2 * j + 1, 2 * k) = z.imag();
        s_of(2 * j + 1, 2 * k + 1) = z.real();
      }
    congruence(sym);
  }

  // Phase-space rotation on one mode, mapping x -> x_theta.
  void rotate_mode(int mode, double theta) {
    const int n = 2 * modes_;
    std::vector<double> rot(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) rot[static_cast<std::size_t>(i) * n + i] = 1.0;
    const double c = std::cos(theta), s = std::sin(theta);
    rot[static_cast<std::size_t>(2 * mode) * n + 2 * mode] = c;
    rot[static_cast<std::size_t>(2 * mode) * n + 2 * mode + 1] = s;
    rot[static_cast<std::size_t>(2 * mode + 1) * n + 2 * mode] = -s;
    rot[static_cast<std::size_t>(2 * mode + 1) * n + 2 * mode + 1] = c;
    congruence(rot);
  }

  double max_asymmetry() const {
    const int n = 2 * modes_;
    double worst = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        worst = std::max(worst, std::abs(entry(i, j) - entry(j, i)));
    return worst;
  }

  // Smallest symplectic eigenvalue: singular values of sqrt(S) Omega sqrt(S)
  // are the symplectic eigenvalues of S. Physical states have all >= 1/2.
  double min_symplectic_eigenvalue() const {
    const int n = 2 * modes_;
    std::vector<double> q;
    std::vector<double> eig = detail::sym_eigen(s_, n, &q);
    // sqrt(S) = Q sqrt(D) Q^T
    std::vector<double> root(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double v = 0.0;
        for (int k = 0; k < n; ++k)
          v += q[static_cast<std::size_t>(i) * n + k] * std::sqrt(std::max(0.0, eig[k])) *
               q[static_cast<std::size_t>(j) * n + k];
        root[static_cast<std::size_t>(i) * n + j] = v;
      }
    // A = sqrt(S) Omega sqrt(S); Omega has 2x2 blocks [[0, 1], [-1, 0]].
    std::vector<double> om_root(static_cast<std::size_t>(n) * n, 0.0);
    for (int m = 0; m < modes_; ++m)
      for (int j = 0; j < n; ++j) {
        om_root[static_cast<std::size_t>(2 * m) * n + j] =
            root[static_cast<std::size_t>(2 * m + 1) * n + j];
        om_root[static_cast<std::size_t>(2 * m + 1) * n + j] =
            -root[static_cast<std::size_t>(2 * m) * n + j];
      }
    std::vector<double> a(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double v = 0.0;
        for (int k = 0; k < n; ++k)
          v += root[static_cast<std::size_t>(i) * n + k] *
               om_root[static_cast<std::size_t>(k) * n + j];
        a[static_cast<std::size_t>(i) * n + j] = v;
      }
    // Singular values of A = sqrt eigenvalues of A^T A.
    std::vector<double> ata(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double v = 0.0;
        for (int k = 0; k < n; ++k)
          v += a[static_cast<std::size_t>(k) * n + i] * a[static_cast<std::size_t>(k) * n + j];
        ata[static_cast<std::size_t>(i) * n + j] = v;
      }
    std::vector<double> sv = detail::sym_eigen(std::move(ata), n);
    double least = std::numeric_limits<double>::infinity();
    for (double v : sv) least = std::min(least, std::sqrt(std::max(0.0, v)));
    return least;
  }

 private:
  double& at(int i, int j) { return s_[static_cast<std::size_t>(i) * 2 * modes_ + j]; }

  // S <- T S T^T
  void congruence(const std::vector<double>& t) {
    const int n = 2 * modes_;
    std::vector<double> tmp(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k) {
        const double tik = t[static_cast<std::size_t>(i) * n + k];
        if (tik == 0.0) continue;
        for (int j = 0; j < n; ++j)
          tmp[static_cast<std::size_t>(i) * n + j] += tik * s_[static_cast<std::size_t>(k) * n + j];
      }
    std::vector<double> out(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k)
        for (int j = 0; j < n; ++j)
          out[static_cast<std::size_t>(i) * n + j] +=
              tmp[static_cast<std::size_t>(i) * n + k] * t[static_cast<std::size_t>(j) * n + k];
    s_ = std::move(out);
  }

  int modes_ = 0;
  std::vector<double> s_;
};

// Brute-force variance of x_theta on output mode 1: propagates the vacuum
// covariance through the squeezer and the three passive stages separately,
// rotates mode 1 by theta and reads the (x1, x1) element. Independent check
// of quadrature_variance(reduced_model(...)).
inline double oracle_variance(const UnitaryMatrix& v_in, const UnitaryMatrix& u_phi,
                              const UnitaryMatrix& v_out, const ProbeSpec& probe,
                              double theta) {
  if (v_in.dim() != u_phi.dim() || u_phi.dim() != v_out.dim())
    throw std::invalid_argument("oracle_variance: dimension mismatch");
  CovarianceState st = CovarianceState::vacuum(v_in.dim());
  st.apply_squeezer(0, probe.r);
  st.apply_unitary(v_in);
  st.apply_unitary(u_phi);
  st.apply_unitary(v_out);
  st.rotate_mode(0, theta);
  return st.entry(0, 0);
}

// i.i.d. homodyne outcomes: zero-mean normal draws with variance
// quadrature_variance(model, theta). Deterministic per seed.
inline std::vector<double> sample_homodyne(const ReducedModeModel& model, double theta,
                                           int count, std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("sample_homodyne: count must be >= 1");
  const double sd = std::sqrt(quadrature_variance(model, theta));
  rng::SplitMix64 gen(seed);
  std::vector<double> out(static_cast<std::size_t>(count));
  for (double& x : out) x = sd * gen.normal();
  return out;
}

}  // namespace sqmet
