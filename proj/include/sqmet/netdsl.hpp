#pragma once

// Line-oriented description language for phi-parametrized passive linear
// networks, plus evaluation to a UnitaryMatrix at a given phi.
//
//   # comment
//   modes 2
//   bs 1 2 0.7*phi        beam splitter on modes (1,2), angle 0.7*phi
//   ps 1 0.3*phi + 0.1    phase shifter on mode 1
//
// Angle expressions support numeric literals, `phi`, `pi`, + - * /, unary
// minus, parentheses and sin, cos, tan, asin, exp, sqrt; angles are radians.
// Elements are listed in physical propagation order: each element's matrix
// multiplies the accumulated product from the left.

#include <cctype>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <memory>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sqmet/unitary.hpp"

namespace sqmet::netdsl {

class ParseError : public std::runtime_error {
 public:
  ParseError(int line, int column, const std::string& what)
      : std::runtime_error("parse error at " + std::to_string(line) + ":" +
                           std::to_string(column) + ": " + what),
        line_(line),
        column_(column) {}
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_, column_;
};

// Raised when an angle expression does not evaluate to a finite real.
class EvalError : public std::domain_error {
  using std::domain_error::domain_error;
};

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
  enum class Op {
    number, phi, pi,          // leaves
    add, sub, mul, div,       // binary
    neg,                      // unary
    sin, cos, tan, asin, exp, sqrt  // functions
  };

  Op op;
  double value = 0.0;  // for Op::number
  ExprPtr lhs, rhs;

  static ExprPtr number(double v) { return std::make_shared<Expr>(Expr{Op::number, v, nullptr, nullptr}); }
  static ExprPtr leaf(Op o) { return std::make_shared<Expr>(Expr{o, 0.0, nullptr, nullptr}); }
  static ExprPtr unary(Op o, ExprPtr e) { return std::make_shared<Expr>(Expr{o, 0.0, std::move(e), nullptr}); }
  static ExprPtr binary(Op o, ExprPtr l, ExprPtr r) {
    return std::make_shared<Expr>(Expr{o, 0.0, std::move(l), std::move(r)});
  }

  double eval(double phi) const {
    double r = 0.0;
    switch (op) {
      case Op::number: r = value; break;
      case Op::phi: r = phi; break;
      case Op::pi: r = std::numbers::pi; break;
      case Op::add: r = lhs->eval(phi) + rhs->eval(phi); break;
      case Op::sub: r = lhs->eval(phi) - rhs->eval(phi); break;
      case Op::mul: r = lhs->eval(phi) * rhs->eval(phi); break;
      case Op::div: r = lhs->eval(phi) / rhs->eval(phi); break;
      case Op::neg: r = -lhs->eval(phi); break;
      case Op::sin: r = std::sin(lhs->eval(phi)); break;
      case Op::cos: r = std::cos(lhs->eval(phi)); break;
      case Op::tan: r = std::tan(lhs->eval(phi)); break;
      case Op::asin: r = std::asin(lhs->eval(phi)); break;
      case Op::exp: r = std::exp(lhs->eval(phi)); break;
      case Op::sqrt: r = std::sqrt(lhs->eval(phi)); break;
    }
    if (!std::isfinite(r))
      throw EvalError("expression '" + to_string() + "' is not finite at phi=" +
                      std::to_string(phi));
    return r;
  }

  bool equals(const Expr& other) const {
    if (op != other.op) return false;
    if (op == Op::number && value != other.value) return false;
    if (static_cast<bool>(lhs) != static_cast<bool>(other.lhs)) return false;
    if (static_cast<bool>(rhs) != static_cast<bool>(other.rhs)) return false;
    if (lhs && !lhs->equals(*other.lhs)) return false;
    if (rhs && !rhs->equals(*other.rhs)) return false;
    return true;
  }

  // Precedence-aware printing; the output reparses to an identical AST.
  void print(std::ostream& os, int parent_prec = 0) const {
    const auto fn = [&](const char* name) {
      os << name << '(';
      lhs->print(os, 0);
      os << ')';
    };
    switch (op) {
      case Op::number: {
        // Shortest representation that parses back to the same double.
        char buf[40];
        for (int prec = 15; prec <= 17; ++prec) {
          std::snprintf(buf, sizeof buf, "%.*g", prec, value);
          if (std::strtod(buf, nullptr) == value) break;
        }
        os << buf;
        break;
      }
      case Op::phi: os << "phi"; break;
      case Op::pi: os << "pi"; break;
      case Op::add: print_binary(os, '+', 1, 2, parent_prec); break;
      case Op::sub: print_binary(os, '-', 1, 2, parent_prec); break;
      case Op::mul: print_binary(os, '*', 3, 4, parent_prec); break;
      case Op::div: print_binary(os, '/', 3, 4, parent_prec); break;
      case Op::neg: {
        const bool parens = parent_prec > 5;
        if (parens) os << '(';
        os << '-';
        lhs->print(os, 6);
        if (parens) os << ')';
        break;
      }
      case Op::sin: fn("sin"); break;
      case Op::cos: fn("cos"); break;
      case Op::tan: fn("tan"); break;
      case Op::asin: fn("asin"); break;
      case Op::exp: fn("exp"); break;
      case Op::sqrt: fn("sqrt"); break;
    }
  }

  std::string to_string() const {
    std::ostringstream os;
    print(os);
    return os.str();
  }

 private:
  void print_binary(std::ostream& os, char sym, int prec, int rhs_prec, int parent_prec) const {
    const bool parens = parent_prec > prec;
    if (parens) os << '(';
    lhs->print(os, prec);
    os << sym;
    rhs->print(os, rhs_prec);
    if (parens) os << ')';
  }
};

struct Element {
  enum class Kind { phase_shifter, beam_splitter };
  Kind kind;
  int mode_a = 0;   // 0-based
  int mode_b = -1;  // beam splitter only
  ExprPtr angle;
};

struct NetworkSpec {
  int modes = 0;
  std::vector<Element> elements;

  bool depends_on_phi() const {
    for (const Element& e : elements)
      if (expr_has_phi(*e.angle)) return true;
    return false;
  }

  std::string print() const {
    std::ostringstream os;
    os << "modes " << modes << '\n';
    for (const Element& e : elements) {
      if (e.kind == Element::Kind::phase_shifter)
        os << "ps " << (e.mode_a + 1) << ' ';
      else
        os << "bs " << (e.mode_a + 1) << ' ' << (e.mode_b + 1) << ' ';
      e.angle->print(os);
      os << '\n';
    }
    return os.str();
  }

 private:
  static bool expr_has_phi(const Expr& e) {
    if (e.op == Expr::Op::phi) return true;
    if (e.lhs && expr_has_phi(*e.lhs)) return true;
    if (e.rhs && expr_has_phi(*e.rhs)) return true;
    return false;
  }
};

namespace detail {

// Recursive-descent expression parser over one source line.
// Precedence: unary minus > * / > + -.
class ExprParser {
 public:
  ExprParser(std::string_view text, int line, int col0)
      : text_(text), line_(line), col0_(col0) {}

  ExprPtr parse_all() {
    ExprPtr e = parse_sum();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected trailing input");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(line_, col0_ + static_cast<int>(pos_), msg);
  }

  void skip_ws() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t')) ++pos_;
  }

  bool consume(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  ExprPtr parse_sum() {
    ExprPtr e = parse_term();
    for (;;) {
      if (consume('+')) e = Expr::binary(Expr::Op::add, e, parse_term());
      else if (consume('-')) e = Expr::binary(Expr::Op::sub, e, parse_term());
      else return e;
    }
  }

  ExprPtr parse_term() {
    ExprPtr e = parse_unary();
    for (;;) {
      if (consume('*')) e = Expr::binary(Expr::Op::mul, e, parse_unary());
      else if (consume('/')) e = Expr::binary(Expr::Op::div, e, parse_unary());
      else return e;
    }
  }

  ExprPtr parse_unary() {
    if (consume('-')) return Expr::unary(Expr::Op::neg, parse_unary());
    return parse_primary();
  }

  ExprPtr parse_primary() {
    skip_ws();
    if (pos_ >= text_.size()) fail("expected expression");
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      ExprPtr e = parse_sum();
      if (!consume(')')) fail("expected ')'");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c))) return parse_word();
    fail(std::string("unexpected character '") + c + "'");
  }

  ExprPtr parse_number() {
    const char* begin = text_.data() + pos_;
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin) fail("malformed number");
    pos_ += static_cast<std::size_t>(end - begin);
    return Expr::number(v);
  }

  ExprPtr parse_word() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           std::isalnum(static_cast<unsigned char>(text_[pos_])))
      ++pos_;
    const std::string_view word = text_.substr(start, pos_ - start);
    if (word == "phi") return Expr::leaf(Expr::Op::phi);
    if (word == "pi") return Expr::leaf(Expr::Op::pi);
    Expr::Op fn;
    if (word == "sin") fn = Expr::Op::sin;
    else if (word == "cos") fn = Expr::Op::cos;
    else if (word == "tan") fn = Expr::Op::tan;
    else if (word == "asin") fn = Expr::Op::asin;
    else if (word == "exp") fn = Expr::Op::exp;
    else if (word == "sqrt") fn = Expr::Op::sqrt;
    else {
      pos_ = start;
      fail("unknown symbol '" + std::string(word) + "'");
    }
    if (!consume('(')) fail("expected '(' after function name");
    ExprPtr arg = parse_sum();
    if (!consume(')')) fail("expected ')'");
    return Expr::unary(fn, arg);
  }

  std::string_view text_;
  int line_;
  int col0_;
  std::size_t pos_ = 0;
};

inline std::string_view strip_comment(std::string_view line) {
  const std::size_t hash = line.find('#');
  if (hash != std::string_view::npos) line = line.substr(0, hash);
  while (!line.empty() && (line.back() == ' ' || line.back() == '\t' || line.back() == '\r'))
    line.remove_suffix(1);
  return line;
}

}  // namespace detail

inline NetworkSpec parse(std::string_view source) {
  NetworkSpec spec;
  bool have_modes = false;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= source.size()) {
    const std::size_t nl = source.find('\n', pos);
    std::string_view raw = source.substr(pos, nl == std::string_view::npos ? source.size() - pos
                                                                           : nl - pos);
    ++line_no;
    pos = (nl == std::string_view::npos) ? source.size() + 1 : nl + 1;

    std::string_view line = detail::strip_comment(raw);
    std::size_t i = 0;
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    if (i == line.size()) continue;

    const auto read_word = [&]() {
      const std::size_t start = i;
      while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
      return line.substr(start, i - start);
    };
    const auto read_mode_index = [&](std::string_view what) {
      while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
      const int col = static_cast<int>(i) + 1;
      const std::string_view w = read_word();
      int v = 0;
      for (char c : w) {
        if (!std::isdigit(static_cast<unsigned char>(c)) || v > kMaxDim)
          throw ParseError(line_no, col, "expected " + std::string(what) + ", got '" +
                                             std::string(w) + "'");
        v = v * 10 + (c - '0');
      }
      if (w.empty())
        throw ParseError(line_no, col, "expected " + std::string(what));
      return v;
    };

    const int kw_col = static_cast<int>(i) + 1;
    const std::string_view keyword = read_word();

    if (keyword == "modes") {
      if (have_modes) throw ParseError(line_no, kw_col, "duplicate 'modes' header");
      const int m = read_mode_index("mode count");
      if (m < 1 || m > kMaxDim)
        throw ParseError(line_no, kw_col, "mode count must be in [1, " +
                                              std::to_string(kMaxDim) + "]");
      spec.modes = m;
      have_modes = true;
      continue;
    }
    if (!have_modes)
      throw ParseError(line_no, kw_col, "'modes M' header must come first");

    Element el;
    if (keyword == "ps") {
      el.kind = Element::Kind::phase_shifter;
      el.mode_a = read_mode_index("mode index") - 1;
      if (el.mode_a < 0 || el.mode_a >= spec.modes)
        throw ParseError(line_no, kw_col, "mode index out of range [1, " +
                                              std::to_string(spec.modes) + "]");
    } else if (keyword == "bs") {
      el.kind = Element::Kind::beam_splitter;
      el.mode_a = read_mode_index("mode index") - 1;
      el.mode_b = read_mode_index("mode index") - 1;
      if (el.mode_a < 0 || el.mode_a >= spec.modes || el.mode_b < 0 ||
          el.mode_b >= spec.modes)
        throw ParseError(line_no, kw_col, "mode index out of range [1, " +
                                              std::to_string(spec.modes) + "]");
      if (el.mode_a == el.mode_b)
        throw ParseError(line_no, kw_col, "beam splitter requires two distinct modes");
    } else {
      throw ParseError(line_no, kw_col,
                       "unknown element '" + std::string(keyword) + "' (expected ps or bs)");
    }

    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    if (i == line.size())
      throw ParseError(line_no, static_cast<int>(i) + 1, "missing angle expression");
    detail::ExprParser ep(line.substr(i), line_no, static_cast<int>(i) + 1);
    el.angle = ep.parse_all();
    spec.elements.push_back(std::move(el));
  }
  if (!have_modes) throw ParseError(1, 1, "missing 'modes M' header");
  return spec;
}

// Product over elements at the given phi, each embedded as identity outside
// its mode(s). A phase shifter multiplies its mode's rows by e^{i*angle}; a
// beam splitter applies [[cos a, sin a], [-sin a, cos a]] on its mode pair.
inline UnitaryMatrix evaluate(const NetworkSpec& spec, double phi) {
  CMat m = CMat::identity(spec.modes);
  for (const Element& e : spec.elements) {
    const double angle = e.angle->eval(phi);
    if (e.kind == Element::Kind::phase_shifter) {
      const cxd f = std::polar(1.0, angle);
      for (int j = 0; j < spec.modes; ++j) m(e.mode_a, j) *= f;
    } else {
      const double c = std::cos(angle), s = std::sin(angle);
      for (int j = 0; j < spec.modes; ++j) {
        const cxd ra = m(e.mode_a, j), rb = m(e.mode_b, j);
        m(e.mode_a, j) = c * ra + s * rb;
        m(e.mode_b, j) = -s * ra + c * rb;
      }
    }
  }
  return UnitaryMatrix(std::move(m));
}

inline double derivative_step(double phi) { return 1e-6 * std::max(1.0, std::abs(phi)); }

// Central finite difference of one matrix entry with respect to phi.
// Pass h = 0 to use the default step 1e-6 * max(1, |phi|).
inline cxd entry_derivative(const NetworkSpec& spec, double phi, int row, int col,
                            double h = 0.0) {
  if (row < 0 || row >= spec.modes || col < 0 || col >= spec.modes)
    throw std::invalid_argument("entry_derivative: index out of range");
  if (h <= 0.0) h = derivative_step(phi);
  const UnitaryMatrix up = evaluate(spec, phi + h);
  const UnitaryMatrix dn = evaluate(spec, phi - h);
  return (up(row, col) - dn(row, col)) / (2.0 * h);
}

}  // namespace sqmet::netdsl
