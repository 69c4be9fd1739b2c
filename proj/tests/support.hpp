#pragma once

// Shared helpers for the test suites: independently built 2x2 elements
// (closed forms, not routed through netdsl), random network generation and
// small comparison utilities.

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <vector>

#include "sqmet/netdsl.hpp"
#include "sqmet/rng.hpp"
#include "sqmet/unitary.hpp"

namespace testsupport {

using sqmet::cxd;

// Beam splitter cos(eta) I + i sin(eta) sigma_y = [[c, s], [-s, c]].
inline sqmet::UnitaryMatrix u_bs(double eta) {
  sqmet::CMat m(2);
  m(0, 0) = std::cos(eta);
  m(0, 1) = std::sin(eta);
  m(1, 0) = -std::sin(eta);
  m(1, 1) = std::cos(eta);
  return sqmet::UnitaryMatrix(std::move(m));
}

// Phase shifts diag(e^{i l}, e^{i lp}).
inline sqmet::UnitaryMatrix u_ps(double l, double lp) {
  sqmet::CMat m(2);
  m(0, 0) = std::polar(1.0, l);
  m(1, 1) = std::polar(1.0, lp);
  return sqmet::UnitaryMatrix(std::move(m));
}

inline double max_entry_distance(const sqmet::UnitaryMatrix& a, const sqmet::UnitaryMatrix& b) {
  double worst = 0.0;
  for (int i = 0; i < a.dim(); ++i)
    for (int j = 0; j < a.dim(); ++j) worst = std::max(worst, std::abs(a(i, j) - b(i, j)));
  return worst;
}

// Distance between two angles modulo 2*pi.
inline double angle_distance(double a, double b) {
  const double two_pi = 2.0 * std::numbers::pi;
  double d = std::fmod(a - b, two_pi);
  if (d > std::numbers::pi) d -= two_pi;
  if (d < -std::numbers::pi) d += two_pi;
  return std::abs(d);
}

// Random phi-dependent network: 3..10 elements with angles a*phi + b. The
// first element always carries a nonzero phi coefficient.
inline sqmet::netdsl::NetworkSpec random_network(int modes, std::uint64_t seed) {
  using sqmet::netdsl::Element;
  using sqmet::netdsl::Expr;
  sqmet::rng::SplitMix64 gen(seed);
  sqmet::netdsl::NetworkSpec spec;
  spec.modes = modes;
  const int count = 3 + static_cast<int>(gen.next() % 8);
  for (int i = 0; i < count; ++i) {
    Element el;
    double a = 2.0 * gen.uniform01() - 1.0;
    if (i == 0 && std::abs(a) < 0.1) a = a < 0 ? -0.5 : 0.5;
    const double b = (2.0 * gen.uniform01() - 1.0) * std::numbers::pi;
    el.angle = Expr::binary(Expr::Op::add,
                            Expr::binary(Expr::Op::mul, Expr::number(a), Expr::leaf(Expr::Op::phi)),
                            Expr::number(b));
    if (modes >= 2 && gen.next() % 2 == 0) {
      el.kind = Element::Kind::beam_splitter;
      el.mode_a = static_cast<int>(gen.next() % modes);
      el.mode_b = static_cast<int>(gen.next() % (modes - 1));
      if (el.mode_b >= el.mode_a) ++el.mode_b;
    } else {
      el.kind = Element::Kind::phase_shifter;
      el.mode_a = static_cast<int>(gen.next() % modes);
    }
    spec.elements.push_back(std::move(el));
  }
  return spec;
}

}  // namespace testsupport
