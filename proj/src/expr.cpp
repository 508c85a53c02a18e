#include "ionsim/expr.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <tuple>

namespace ionsim {

namespace {

constexpr double kDropTol = 1e-14;

SpinKind spin_adjoint(SpinKind s) {
  switch (s) {
    case SpinKind::sigma_plus: return SpinKind::sigma_minus;
    case SpinKind::sigma_minus: return SpinKind::sigma_plus;
    default: return s;
  }
}

// Product table in the sigma_pm = sigma_x +- i sigma_y convention:
//   s+ s- = 2I + 2sz,  s- s+ = 2I - 2sz,  sz s+- = +-s+-,  s+- sz = -+s+-.
std::vector<std::pair<SpinKind, cplx>> spin_product(SpinKind a, SpinKind b) {
  using K = SpinKind;
  if (a == K::identity) return {{b, 1.0}};
  if (b == K::identity) return {{a, 1.0}};
  if (a == K::sigma_plus) {
    if (b == K::sigma_plus) return {};
    if (b == K::sigma_minus) return {{K::identity, 2.0}, {K::sigma_z, 2.0}};
    return {{K::sigma_plus, -1.0}};  // s+ sz
  }
  if (a == K::sigma_minus) {
    if (b == K::sigma_plus) return {{K::identity, 2.0}, {K::sigma_z, -2.0}};
    if (b == K::sigma_minus) return {};
    return {{K::sigma_minus, 1.0}};  // s- sz
  }
  // a == sigma_z
  if (b == K::sigma_plus) return {{K::sigma_plus, 1.0}};
  if (b == K::sigma_minus) return {{K::sigma_minus, -1.0}};
  return {{K::identity, 1.0}};  // sz sz
}

double binom(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

double factorial(int n) {
  double f = 1.0;
  for (int k = 2; k <= n; ++k) f *= k;
  return f;
}

using TermKey = std::tuple<int, int, int>;  // (spin, p, q)

OperatorExpr merged(std::vector<ExprTerm> terms, bool hermitize) {
  std::map<TermKey, cplx> acc;
  for (const auto& t : terms)
    acc[{static_cast<int>(t.spin), t.p, t.q}] += t.coeff;
  double scale = 1.0;
  for (const auto& [k, c] : acc) scale = std::max(scale, std::abs(c));
  OperatorExpr out;
  out.hermitize = hermitize;
  for (const auto& [k, c] : acc) {
    if (std::abs(c) <= kDropTol * scale) continue;
    out.terms.push_back(
        {static_cast<SpinKind>(std::get<0>(k)), std::get<1>(k), std::get<2>(k), c});
  }
  return out;
}

}  // namespace

OperatorExpr OperatorExpr::single(SpinKind s, int p, int q, cplx c, bool hermitize) {
  if (p < 0 || q < 0) throw std::invalid_argument("OperatorExpr: monomial powers must be >= 0");
  OperatorExpr e;
  e.terms.push_back({s, p, q, c});
  e.hermitize = hermitize;
  return e;
}

int OperatorExpr::max_order() const {
  int order = 0;
  for (const auto& t : terms) order = std::max(order, std::max(t.p, t.q));
  return order;
}

OperatorExpr OperatorExpr::materialized() const {
  std::vector<ExprTerm> all = terms;
  if (hermitize)
    for (const auto& t : terms)
      all.push_back({spin_adjoint(t.spin), t.q, t.p, std::conj(t.coeff)});
  return merged(std::move(all), false);
}

OperatorExpr OperatorExpr::adjoint() const {
  OperatorExpr m = materialized();
  std::vector<ExprTerm> adj;
  adj.reserve(m.terms.size());
  for (const auto& t : m.terms)
    adj.push_back({spin_adjoint(t.spin), t.q, t.p, std::conj(t.coeff)});
  return merged(std::move(adj), false);
}

bool OperatorExpr::is_hermitian(double tol) const {
  OperatorExpr m = materialized();
  OperatorExpr diff = m - m.adjoint();
  double scale = 1.0;
  for (const auto& t : m.terms) scale = std::max(scale, std::abs(t.coeff));
  for (const auto& t : diff.terms)
    if (std::abs(t.coeff) > tol * scale) return false;
  return true;
}

cplx OperatorExpr::coefficient(SpinKind s, int p, int q) const {
  for (const auto& t : materialized().terms)
    if (t.spin == s && t.p == p && t.q == q) return t.coeff;
  return 0.0;
}

OperatorExpr operator+(const OperatorExpr& a, const OperatorExpr& b) {
  OperatorExpr am = a.materialized(), bm = b.materialized();
  std::vector<ExprTerm> all = am.terms;
  all.insert(all.end(), bm.terms.begin(), bm.terms.end());
  return merged(std::move(all), false);
}

OperatorExpr operator-(const OperatorExpr& a, const OperatorExpr& b) {
  return a + (cplx(-1.0) * b);
}

OperatorExpr operator*(cplx scale, const OperatorExpr& e) {
  OperatorExpr out = e;
  for (auto& t : out.terms) t.coeff *= scale;
  return out;
}

OperatorExpr operator*(const OperatorExpr& a, const OperatorExpr& b) {
  OperatorExpr am = a.materialized(), bm = b.materialized();
  std::vector<ExprTerm> out;
  for (const auto& ta : am.terms) {
    for (const auto& tb : bm.terms) {
      auto spins = spin_product(ta.spin, tb.spin);
      if (spins.empty()) continue;
      // (a^dag)^p1 a^q1 (a^dag)^p2 a^q2, reordering the middle pair.
      int kmax = std::min(ta.q, tb.p);
      for (int k = 0; k <= kmax; ++k) {
        cplx w = ta.coeff * tb.coeff * factorial(k) * binom(ta.q, k) * binom(tb.p, k);
        for (const auto& [s, sc] : spins)
          out.push_back({s, ta.p + tb.p - k, ta.q + tb.q - k, w * sc});
      }
    }
  }
  return merged(std::move(out), false);
}

OperatorExpr commutator(const OperatorExpr& a, const OperatorExpr& b) {
  return a * b - b * a;
}

Matrix monomial_matrix(const HilbertSpace& space, int p, int q) {
  Matrix up = raising_op(space).m;
  Matrix down = lowering_op(space).m;
  int d = space.motional_dim();
  Matrix out = Matrix::Identity(d, d);
  for (int k = 0; k < q; ++k) out = down * out;
  for (int k = 0; k < p; ++k) out = up * out;
  return out;
}

OperatorMatrix expr_to_matrix(const OperatorExpr& expr, const HilbertSpace& space) {
  OperatorExpr m = expr.materialized();
  if (space.n_max < m.max_order() + 2)
    throw std::invalid_argument("expr_to_matrix: need n_max >= max monomial order + 2");
  Matrix out = Matrix::Zero(space.dim(), space.dim());
  for (const auto& t : m.terms) {
    Matrix spin = spin_op(space, t.spin).m;
    out += t.coeff * kron(spin, monomial_matrix(space, t.p, t.q));
  }
  Flag herm = m.is_hermitian() ? Flag::yes : Flag::unknown;
  return OperatorMatrix(space, Subsystem::joint, std::move(out), herm, Flag::unknown);
}

// --- text format -------------------------------------------------------------

ExprParseError::ExprParseError(int line_, int column_, const std::string& what_)
    : std::invalid_argument("expression parse error at line " + std::to_string(line_) +
                            ", column " + std::to_string(column_) + ": " + what_),
      line(line_),
      column(column_) {}

namespace {

std::optional<SpinKind> spin_from_name(const std::string& s) {
  if (s == "I") return SpinKind::identity;
  if (s == "SP") return SpinKind::sigma_plus;
  if (s == "SM") return SpinKind::sigma_minus;
  if (s == "SZ") return SpinKind::sigma_z;
  return std::nullopt;
}

struct Tok {
  std::string text;
  int column;  // 1-based
};

std::vector<Tok> tokenize(const std::string& line) {
  std::vector<Tok> toks;
  size_t i = 0;
  while (i < line.size()) {
    if (std::isspace(static_cast<unsigned char>(line[i]))) { ++i; continue; }
    if (line[i] == '#') break;
    size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    toks.push_back({line.substr(i, j - i), static_cast<int>(i) + 1});
    i = j;
  }
  return toks;
}

}  // namespace

OperatorExpr parse_expr_text(const std::string& text) {
  OperatorExpr expr;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto toks = tokenize(line);
    if (toks.empty()) continue;
    if (toks[0].text == "HERMITIZE") {
      if (toks.size() != 1)
        throw ExprParseError(lineno, toks[1].column, "unexpected token after HERMITIZE");
      expr.hermitize = true;
      continue;
    }
    auto spin = spin_from_name(toks[0].text);
    if (!spin)
      throw ExprParseError(lineno, toks[0].column,
                           "unknown spin factor '" + toks[0].text + "' (expected I, SP, SM or SZ)");
    if (toks.size() != 5)
      throw ExprParseError(lineno, static_cast<int>(line.size()) + 1,
                           "expected `SPIN p q RE IM` (5 fields), got " +
                               std::to_string(toks.size()));
    auto parse_int = [&](const Tok& t) {
      try {
        size_t pos = 0;
        int v = std::stoi(t.text, &pos);
        if (pos != t.text.size()) throw std::invalid_argument("");
        return v;
      } catch (...) {
        throw ExprParseError(lineno, t.column, "expected integer, got '" + t.text + "'");
      }
    };
    auto parse_real = [&](const Tok& t) {
      try {
        size_t pos = 0;
        double v = std::stod(t.text, &pos);
        if (pos != t.text.size()) throw std::invalid_argument("");
        return v;
      } catch (...) {
        throw ExprParseError(lineno, t.column, "expected real number, got '" + t.text + "'");
      }
    };
    int p = parse_int(toks[1]);
    int q = parse_int(toks[2]);
    if (p < 0 || q < 0)
      throw ExprParseError(lineno, toks[p < 0 ? 1 : 2].column, "monomial powers must be >= 0");
    double re = parse_real(toks[3]);
    double im = parse_real(toks[4]);
    expr.terms.push_back({*spin, p, q, cplx(re, im)});
  }
  return expr;
}

std::string format_expr_text(const OperatorExpr& expr) {
  std::string out;
  if (expr.hermitize) out += "HERMITIZE\n";
  for (const auto& t : expr.terms) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%s %d %d %.17g %.17g\n", spin_name(t.spin), t.p, t.q,
                  t.coeff.real(), t.coeff.imag());
    out += buf;
  }
  return out;
}

const char* spin_name(SpinKind s) {
  switch (s) {
    case SpinKind::identity: return "I";
    case SpinKind::sigma_plus: return "SP";
    case SpinKind::sigma_minus: return "SM";
    case SpinKind::sigma_z: return "SZ";
  }
  return "?";
}

}  // namespace ionsim
