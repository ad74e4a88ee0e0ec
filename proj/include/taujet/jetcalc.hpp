#pragma once

// Jet coordinates over a base of n spatial directions plus a distinguished
// line coordinate, total derivatives, prolongations, contact forms and a
// small exterior algebra over the jet coordinates.

#include <map>
#include <utility>
#include <vector>

#include "taujet/symexpr.hpp"

namespace taujet {

// Immutable coordinate chart: spatial base coordinates x^lambda, the line
// coordinate tau, fields y^i and optionally their momenta. Jet symbols are
// created on demand and deterministically (the same head and multi-index
// always yield the same symbol).
class JetSpace {
 public:
  JetSpace(std::vector<Symbol> base, Symbol line, std::vector<Symbol> fields,
           std::vector<Symbol> momenta = {});

  int dimension() const { return static_cast<int>(base_.size()); }
  const std::vector<Symbol>& base() const { return base_; }
  const Symbol& line() const { return line_; }
  const std::vector<Symbol>& fields() const { return fields_; }
  const std::vector<Symbol>& momenta() const { return momenta_; }

  // The coordinate symbol for a direction: 0..n-1 spatial,
  // MultiIndex::kTauDir the line.
  const Symbol& coordinate(int dir) const;
  // Inverse of coordinate(): BaseCoord -> its index, LineCoord -> kTauDir.
  int direction_index(const Symbol& coord) const;

  // y^i_alpha and friends; a zero multi-index returns the head itself.
  // head must be a field, momentum or the line coordinate of this chart.
  Symbol jet(const Symbol& head, const MultiIndex& idx) const;
  // Same, from an explicit direction list (the d(y, x, tau) syntax).
  Symbol jet_dirs(const Symbol& head, const std::vector<Symbol>& dirs) const;
  // One more derivative along dir; s may be a head or a jet coordinate.
  Symbol bump(const Symbol& s, int dir) const;
  // The head coordinate a jet symbol belongs to (identity on heads).
  Symbol head_of(const Symbol& s) const;

  // D_dir: the total derivative, treating fields, momenta and their jets as
  // functions of the base. With line_as_fiber the line coordinate is treated
  // as one more field (the two-step bundle picture), so spatial total
  // derivatives send tau to its jet instead of ignoring it.
  ExprPtr total_derivative(const ExprPtr& e, int dir,
                           bool line_as_fiber = false) const;

  // Jet bindings of a section: every field (and, when present as a key, the
  // line coordinate) is bound to an expression in the base coordinates; all
  // jets up to the given total order are bound to iterated derivatives.
  Bindings prolongation(const std::map<Symbol, ExprPtr>& section,
                        int order) const;

  // All multi-indices with 1 <= |alpha| + k <= order.
  std::vector<MultiIndex> multi_indices(int order) const;

  // A parseable name scope over the chart's coordinates (plus extras, e.g.
  // parameters). Jet syntax d(y, x, tau) resolves through jet_dirs.
  SymbolScope scope(std::vector<Symbol> extras = {}) const;

 private:
  std::vector<Symbol> base_;
  Symbol line_;
  std::vector<Symbol> fields_;
  std::vector<Symbol> momenta_;
};

// ---------------------------------------------------------------------------
// Exterior algebra
// ---------------------------------------------------------------------------

// Finite sum of coefficient * d xi_1 ^ ... ^ d xi_k terms over jet-space
// coordinates. Keys are kept sorted; reordering tracks the sign. Inhomogeneous
// degrees are allowed (each term carries its own key length).
class DifferentialForm {
 public:
  DifferentialForm() = default;

  static DifferentialForm zero() { return {}; }
  // coeff * d diffs[0] ^ ... (diffs in any order; duplicates give zero).
  static DifferentialForm monomial(ExprPtr coeff, std::vector<Symbol> diffs);
  // A 0-form.
  static DifferentialForm scalar(ExprPtr value);

  DifferentialForm operator+(const DifferentialForm& o) const;
  DifferentialForm operator-(const DifferentialForm& o) const;
  DifferentialForm operator*(const ExprPtr& scale) const;
  DifferentialForm wedge(const DifferentialForm& o) const;

  // Exterior derivative; parameters are treated as constants, every other
  // symbol is an independent coordinate.
  DifferentialForm exterior_derivative() const;

  // Contraction with the vector field sum_s components[s] * d/ds (interior
  // product on the leftmost slot of each term).
  DifferentialForm contract(const std::map<Symbol, ExprPtr>& components) const;

  // Coefficient substitution (e.g. restriction to a section); the basis
  // covectors are untouched.
  DifferentialForm map_coefficients(const Bindings& b, SubstMode mode) const;

  bool is_zero() const { return terms_.empty(); }
  bool operator==(const DifferentialForm& o) const;

  const std::map<std::vector<Symbol>, ExprPtr>& terms() const {
    return terms_;
  }

  std::string str() const;

 private:
  void accumulate(std::vector<Symbol> key, const ExprPtr& coeff);

  std::map<std::vector<Symbol>, ExprPtr> terms_;  // sorted keys, no zeros
};

// The n+1 contact forms of weight one for each field: theta^i = dy^i -
// y^i_lambda dx^lambda - y^i_tau dtau, and their higher-order versions
// theta^i_alpha for |alpha| + k < order.
std::vector<DifferentialForm> contact_forms(const JetSpace& js, int order);

// Raised when a splitting needs jets of higher order than the space carries.
struct OrderTooLow : Error {
  using Error::Error;
};

// The unique splitting of a 1-form into a part spanned by the base and line
// differentials and a part spanned by contact forms.
struct ContactSplit {
  DifferentialForm horizontal;
  DifferentialForm contact;
};

// Split a 1-form on jets of order < `order` viewed on the order-`order` jet
// space: base and line differentials stay horizontal, each fiber differential
// d y^i_alpha contributes y^i_{alpha+lambda} dx^lambda + y^i_{alpha+tau} dtau
// horizontally and the matching contact form. Throws OrderTooLow when
// order < 1 and Error on forms that are not of degree one.
ContactSplit contact_decompose(const JetSpace& js, const DifferentialForm& w,
                               int order);

}  // namespace taujet
