#pragma once

// Sum-of-terms operator IR: each term is coeff * spin_factor * (a^dag)^p a^q,
// kept in normal order. Supports exact symbolic products and commutators via
// the reordering identity
//   a^q (a^dag)^p = sum_k k! C(q,k) C(p,k) (a^dag)^{p-k} a^{q-k},
// which is what the compiler uses to plan commutator gadgets and to identify
// lower-order byproducts.
//
// Spin factors follow the paper convention sigma_pm = sigma_x +- i sigma_y
// (so sigma_plus = 2|up><down|); expr_to_matrix uses the same convention.

#include <optional>
#include <string>
#include <vector>

#include "ionsim/hilbert.hpp"

namespace ionsim {

struct ExprTerm {
  SpinKind spin = SpinKind::identity;
  int p = 0;  // a^dag power
  int q = 0;  // a power
  cplx coeff = 0.0;
};

struct OperatorExpr {
  std::vector<ExprTerm> terms;
  bool hermitize = false;  // if set, the expression denotes terms + h.c.

  static OperatorExpr zero() { return {}; }
  static OperatorExpr single(SpinKind s, int p, int q, cplx c, bool hermitize = false);

  /// Largest max(p, q) over all terms (0 for the empty expression).
  int max_order() const;

  /// Expands the hermitize flag, merges like terms and drops numerically
  /// vanishing ones. The result has hermitize = false.
  OperatorExpr materialized() const;

  OperatorExpr adjoint() const;
  bool is_hermitian(double tol = 1e-12) const;

  /// Coefficient of a given normal-ordered monomial in the materialized form.
  cplx coefficient(SpinKind s, int p, int q) const;
};

OperatorExpr operator+(const OperatorExpr& a, const OperatorExpr& b);
OperatorExpr operator-(const OperatorExpr& a, const OperatorExpr& b);
OperatorExpr operator*(cplx scale, const OperatorExpr& e);
/// Normal-ordered operator product.
OperatorExpr operator*(const OperatorExpr& a, const OperatorExpr& b);
/// Exact normal-ordered commutator [a, b].
OperatorExpr commutator(const OperatorExpr& a, const OperatorExpr& b);

/// Dense matrix of the expression on the truncated joint space. Requires
/// n_max >= max_order + 2 so that monomial products are represented faithfully
/// away from the cutoff.
OperatorMatrix expr_to_matrix(const OperatorExpr& expr, const HilbertSpace& space);

/// Motional-factor matrix of (a^dag)^p a^q.
Matrix monomial_matrix(const HilbertSpace& space, int p, int q);

// --- text format -------------------------------------------------------------
//
// One term per line: `SPIN p q RE IM` with SPIN in {I, SP, SM, SZ}; a line
// `HERMITIZE` sets the flag. Blank lines and `#` comments are ignored.

struct ExprParseError : std::invalid_argument {
  int line;
  int column;
  ExprParseError(int line_, int column_, const std::string& what_);
};

OperatorExpr parse_expr_text(const std::string& text);
std::string format_expr_text(const OperatorExpr& expr);

const char* spin_name(SpinKind s);

}  // namespace ionsim
