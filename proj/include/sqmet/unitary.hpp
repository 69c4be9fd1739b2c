#pragma once

// Dense complex linear algebra for small mode counts: products, adjoints,
// unitarity checks and unitary completion from a prescribed first column.
// Matrices are immutable after construction and safe to share across threads.

#include <cmath>
#include <complex>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sqmet/rng.hpp"

namespace sqmet {

using cxd = std::complex<double>;

// Entrywise tolerance for ||U'U - I||_max. Wide enough to survive products
// of a few hundred elementary factors in double precision.
inline constexpr double kUnitaryTol = 1e-10;

// Largest supported dimension; the regime of interest is few-mode, so the
// dense O(M^3) routines below are adequate.
inline constexpr int kMaxDim = 64;

// Plain dense complex matrix, row-major. No invariants enforced.
class CMat {
 public:
  CMat() = default;
  explicit CMat(int dim) : dim_(check_dim(dim)), a_(static_cast<std::size_t>(dim) * dim) {}
  CMat(int dim, std::vector<cxd> entries) : dim_(check_dim(dim)), a_(std::move(entries)) {
    if (a_.size() != static_cast<std::size_t>(dim_) * dim_)
      throw std::invalid_argument("CMat: entry count does not match dimension");
  }

  static CMat identity(int dim) {
    CMat m(dim);
    for (int i = 0; i < dim; ++i) m(i, i) = 1.0;
    return m;
  }

  int dim() const { return dim_; }
  cxd& operator()(int i, int j) { return a_[static_cast<std::size_t>(i) * dim_ + j]; }
  cxd operator()(int i, int j) const { return a_[static_cast<std::size_t>(i) * dim_ + j]; }
  const std::vector<cxd>& entries() const { return a_; }

  std::vector<cxd> column(int j) const {
    std::vector<cxd> c(dim_);
    for (int i = 0; i < dim_; ++i) c[i] = (*this)(i, j);
    return c;
  }

 private:
  static int check_dim(int dim) {
    if (dim < 1 || dim > kMaxDim)
      throw std::invalid_argument("CMat: dimension must be in [1, " +
                                  std::to_string(kMaxDim) + "]");
    return dim;
  }

  int dim_ = 0;
  std::vector<cxd> a_;
};

inline CMat multiply(const CMat& a, const CMat& b) {
  if (a.dim() != b.dim())
    throw std::invalid_argument("matrix product: dimension mismatch (" +
                                std::to_string(a.dim()) + " vs " + std::to_string(b.dim()) + ")");
  const int n = a.dim();
  CMat c(n);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) {
      const cxd aik = a(i, k);
      if (aik == cxd{}) continue;
      for (int j = 0; j < n; ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

inline CMat adjoint(const CMat& a) {
  const int n = a.dim();
  CMat c(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) c(i, j) = std::conj(a(j, i));
  return c;
}

// ||a'a - I||_max. Accepts arbitrary matrices, not just near-unitary ones.
inline double unitarity_defect(const CMat& a) {
  const int n = a.dim();
  double worst = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      cxd s = 0.0;
      for (int k = 0; k < n; ++k) s += std::conj(a(k, i)) * a(k, j);
      if (i == j) s -= 1.0;
      worst = std::max(worst, std::abs(s));
    }
  return worst;
}

inline bool all_finite(const CMat& a) {
  for (const cxd& z : a.entries())
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
  return true;
}

// Complex matrix validated to be unitary (||U'U - I||_max <= kUnitaryTol)
// at construction and after every product.
class UnitaryMatrix {
 public:
  explicit UnitaryMatrix(CMat m) : m_(std::move(m)) {
    if (!all_finite(m_))
      throw std::invalid_argument("UnitaryMatrix: non-finite entry");
    const double defect = sqmet::unitarity_defect(m_);
    if (defect > kUnitaryTol)
      throw std::invalid_argument("UnitaryMatrix: unitarity defect " +
                                  std::to_string(defect) + " exceeds tolerance");
  }

  static UnitaryMatrix identity(int dim) { return UnitaryMatrix(CMat::identity(dim)); }

  int dim() const { return m_.dim(); }
  cxd operator()(int i, int j) const { return m_(i, j); }
  const CMat& mat() const { return m_; }
  std::vector<cxd> column(int j) const { return m_.column(j); }

  UnitaryMatrix adjoint() const { return UnitaryMatrix(sqmet::adjoint(m_)); }

  friend UnitaryMatrix operator*(const UnitaryMatrix& a, const UnitaryMatrix& b) {
    return UnitaryMatrix(multiply(a.mat(), b.mat()));
  }

 private:
  CMat m_;
};

inline double unitarity_defect(const UnitaryMatrix& u) { return unitarity_defect(u.mat()); }

// Builds a unitary W with W e1 = v for a unit vector v, by a Householder
// reflection followed by a column phase. The construction w = v + e^{ia} e1
// with a = arg(v1) has ||w||^2 = 2(1 + |v1|) >= 2, so there is no
// cancellation and no branch; the result is deterministic and the first
// column matches v exactly, including global phase.
inline UnitaryMatrix complete_unitary(std::span<const cxd> first_column) {
  const int n = static_cast<int>(first_column.size());
  if (n < 1 || n > kMaxDim)
    throw std::invalid_argument("complete_unitary: bad vector length");
  double norm2 = 0.0;
  for (const cxd& z : first_column) {
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
      throw std::invalid_argument("complete_unitary: non-finite entry");
    norm2 += std::norm(z);
  }
  if (std::abs(std::sqrt(norm2) - 1.0) > kUnitaryTol)
    throw std::invalid_argument("complete_unitary: input is not a unit vector (norm " +
                                std::to_string(std::sqrt(norm2)) + ")");

  const cxd v1 = first_column[0];
  const cxd phase = (v1 == cxd{}) ? cxd{1.0, 0.0} : v1 / std::abs(v1);

  std::vector<cxd> w(first_column.begin(), first_column.end());
  w[0] += phase;
  double wnorm2 = 0.0;
  for (const cxd& z : w) wnorm2 += std::norm(z);

  // H = I - 2 w w' / ||w||^2, then flip the first column by -e^{ia}.
  CMat m(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      cxd h = (i == j) ? cxd{1.0, 0.0} : cxd{};
      h -= 2.0 * w[i] * std::conj(w[j]) / wnorm2;
      m(i, j) = (j == 0) ? -phase * h : h;
    }
  return UnitaryMatrix(std::move(m));
}

// Haar-ish random unitary via modified Gram-Schmidt on a complex Gaussian
// matrix. Test/diagnostic plumbing; not part of the estimation protocol.
inline UnitaryMatrix random_unitary(int dim, std::uint64_t seed) {
  rng::SplitMix64 gen(seed);
  CMat m(dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) m(i, j) = cxd{gen.normal(), gen.normal()};
  for (int j = 0; j < dim; ++j) {
    for (int k = 0; k < j; ++k) {
      cxd dot = 0.0;
      for (int i = 0; i < dim; ++i) dot += std::conj(m(i, k)) * m(i, j);
      for (int i = 0; i < dim; ++i) m(i, j) -= dot * m(i, k);
    }
    double norm = 0.0;
    for (int i = 0; i < dim; ++i) norm += std::norm(m(i, j));
    norm = std::sqrt(norm);
    for (int i = 0; i < dim; ++i) m(i, j) /= norm;
  }
  return UnitaryMatrix(std::move(m));
}

}  // namespace sqmet
