#pragma once

// Exact symbolic expression kernel: immutable expression trees over a typed
// symbol set, with canonical simplification, partial differentiation,
// substitution and IEEE-double evaluation. Everything else in the library is
// built on top of this.

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace taujet {

using Integer = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DomainError : Error {
  using Error::Error;
};
struct UnboundSymbol : Error {
  using Error::Error;
};
struct CyclicBinding : Error {
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Symbols
// ---------------------------------------------------------------------------

// A multi-index over the n spatial base directions plus a separate count of
// derivatives along the line coordinate tau.
struct MultiIndex {
  std::vector<int> spatial;
  int tau = 0;

  static constexpr int kTauDir = -1;

  MultiIndex() = default;
  explicit MultiIndex(int n) : spatial(static_cast<std::size_t>(n), 0) {}

  int order() const {  // |alpha|
    int s = 0;
    for (int a : spatial) s += a;
    return s;
  }
  int total_order() const { return order() + tau; }
  bool is_zero() const { return total_order() == 0; }

  // alpha + lambda: raise exactly one slot (kTauDir bumps the tau count).
  MultiIndex bumped(int dir) const {
    MultiIndex r = *this;
    if (dir == kTauDir)
      ++r.tau;
    else
      ++r.spatial.at(static_cast<std::size_t>(dir));
    return r;
  }

  friend auto operator<=>(const MultiIndex&, const MultiIndex&) = default;
};

enum class SymbolKind : std::uint8_t {
  BaseCoord,  // x^lambda
  LineCoord,  // tau
  Field,      // y^i
  JetCoord,   // y^i_alpha (also jets of momenta and of tau, see parent)
  Momentum,   // p_i
  Parameter,
};

int kind_rank(SymbolKind k);

// Immutable value type; uniqueness of names within a model is the
// responsibility of the factory that creates them (JetSpace / the model
// parser). A JetCoord with an all-zero multi-index is never created: the
// factory returns the parent symbol itself.
struct Symbol {
  std::string name;
  SymbolKind kind = SymbolKind::Parameter;
  int index = -1;                              // base direction or field index
  SymbolKind parent = SymbolKind::Parameter;   // JetCoord only: Field/Momentum/LineCoord
  MultiIndex jet;                              // JetCoord only

  static Symbol base_coord(std::string name, int lambda);
  static Symbol line_coord(std::string name);
  static Symbol field(std::string name, int i);
  static Symbol momentum(std::string name, int i);
  static Symbol parameter(std::string name);

  bool jettable() const {
    return kind == SymbolKind::Field || kind == SymbolKind::Momentum ||
           kind == SymbolKind::LineCoord;
  }

  friend bool operator==(const Symbol& a, const Symbol& b);
  friend bool operator<(const Symbol& a, const Symbol& b);  // (kind rank, name, index, jet)
};

// ---------------------------------------------------------------------------
// Expressions
// ---------------------------------------------------------------------------

enum class NodeKind : std::uint8_t {
  Integer,
  Rational,
  Sym,
  Sum,
  Product,
  Power,  // rational exponent; sqrt(e) is stored as Power(e, 1/2)
  Apply,
};

enum class Builtin : std::uint8_t { Sin, Cos, Exp, Ln };

class Expr;
using ExprPtr = std::shared_ptr<const Expr>;

class Expr {
 public:
  NodeKind kind() const { return kind_; }
  bool is_constant() const {
    return kind_ == NodeKind::Integer || kind_ == NodeKind::Rational;
  }
  bool is_integer_value(long v) const;
  bool is_zero_literal() const { return is_integer_value(0); }
  bool is_one_literal() const { return is_integer_value(1); }

  const Rational& value() const { return value_; }      // Integer / Rational
  const Symbol& symbol() const { return sym_; }         // Sym
  const std::vector<ExprPtr>& children() const { return kids_; }  // Sum / Product
  const ExprPtr& base() const { return kids_.front(); }  // Power
  const Rational& exponent() const { return value_; }    // Power
  Builtin builtin() const { return fn_; }                // Apply
  const ExprPtr& arg() const { return kids_.front(); }   // Apply

  std::size_t hash() const { return hash_; }

  // Node factories perform only local structural normalization (flattening,
  // literal folding); canonical form is the job of simplify().
  static ExprPtr make_integer(Integer v);
  static ExprPtr make_rational(Rational v);
  static ExprPtr make_symbol(Symbol s);
  static ExprPtr make_sum(std::vector<ExprPtr> kids);
  static ExprPtr make_product(std::vector<ExprPtr> kids);
  static ExprPtr make_power(ExprPtr base, Rational expo);
  static ExprPtr make_apply(Builtin fn, ExprPtr arg);

 private:
  Expr() = default;
  static ExprPtr build(NodeKind kind, Rational value, Symbol sym,
                       std::vector<ExprPtr> kids, Builtin fn);

  NodeKind kind_ = NodeKind::Integer;
  Rational value_;             // Integer/Rational value, or Power exponent
  Symbol sym_;                 // Sym
  std::vector<ExprPtr> kids_;  // Sum/Product children, Power base, Apply arg
  Builtin fn_ = Builtin::Sin;  // Apply
  std::size_t hash_ = 0;
};

// Structural total order / equality (used for canonical sorting; stable
// across runs, never pointer-based).
int compare(const ExprPtr& a, const ExprPtr& b);
bool structural_equal(const ExprPtr& a, const ExprPtr& b);

// Convenience constructors.
ExprPtr integer(long v);
ExprPtr rational(long num, long den);
ExprPtr rational(Rational v);
ExprPtr sym(const Symbol& s);
ExprPtr add(std::vector<ExprPtr> terms);
ExprPtr mul(std::vector<ExprPtr> factors);
ExprPtr pow(const ExprPtr& base, const Rational& expo);
ExprPtr pow(const ExprPtr& base, long expo);
ExprPtr neg(const ExprPtr& e);
ExprPtr sqrt(const ExprPtr& e);
ExprPtr sin(const ExprPtr& e);
ExprPtr cos(const ExprPtr& e);
ExprPtr exp(const ExprPtr& e);
ExprPtr ln(const ExprPtr& e);

ExprPtr operator+(const ExprPtr& a, const ExprPtr& b);
ExprPtr operator-(const ExprPtr& a, const ExprPtr& b);
ExprPtr operator*(const ExprPtr& a, const ExprPtr& b);
ExprPtr operator/(const ExprPtr& a, const ExprPtr& b);
ExprPtr operator-(const ExprPtr& a);
ExprPtr operator+(const ExprPtr& a, long b);
ExprPtr operator-(const ExprPtr& a, long b);
ExprPtr operator*(long a, const ExprPtr& b);
ExprPtr operator/(const ExprPtr& a, long b);
ExprPtr operator/(long a, const ExprPtr& b);

// ---------------------------------------------------------------------------
// Core operations
// ---------------------------------------------------------------------------

// Canonical form. Total; idempotent; value-preserving wherever the input is
// defined. Expands integer powers of sums, collects over a common monomial
// denominator, reduces cos^2 -> 1 - sin^2, and cancels sum-valued
// denominator factors by exact polynomial division. Fractional powers of
// symbols follow the positive-real convention (documented in the README).
ExprPtr simplify(const ExprPtr& e);

// Exact partial derivative; every symbol is an independent coordinate (a jet
// coordinate is not a function of its field). Result is simplified.
ExprPtr differentiate(const ExprPtr& e, const Symbol& s);

enum class SubstMode {
  Simultaneous,  // one pass; bindings never see each other
  Resolved,      // bindings are first resolved against each other;
                 // a dependency cycle raises CyclicBinding
};

using Bindings = std::map<Symbol, ExprPtr>;

ExprPtr substitute(const ExprPtr& e, const Bindings& bindings,
                   SubstMode mode = SubstMode::Simultaneous);

using NumericEnv = std::map<Symbol, double>;

// Evaluates the tree as given (no simplification). Raises UnboundSymbol for
// symbols missing from env and DomainError for sqrt/ln/pow domain faults.
double eval_numeric(const ExprPtr& e, const NumericEnv& env);

void collect_symbols(const ExprPtr& e, std::set<Symbol>& out);
std::set<Symbol> free_symbols(const ExprPtr& e);
bool contains_symbol(const ExprPtr& e, const Symbol& s);

// simplify(e) == literal 0 / simplify(a - b) == literal 0.
bool is_zero(const ExprPtr& e);
bool symbolic_equal(const ExprPtr& a, const ExprPtr& b);

// ---------------------------------------------------------------------------
// Text form
// ---------------------------------------------------------------------------

// Infix syntax with + - * / ^, calls sqrt/sin/cos/exp/ln, and jet
// coordinates written d(y, x, x, tau). to_string output re-parses to an
// expression with the same canonical form.
std::string to_string(const ExprPtr& e);

struct ParseError : Error {
  int line = 0;
  int column = 0;
  ParseError(std::string msg, int line_, int col_)
      : Error(std::move(msg)), line(line_), column(col_) {}
};

// Resolves identifiers while parsing. `jet` is called for d(f, c1, ..., ck)
// with the already-resolved head symbol and direction symbols.
struct SymbolScope {
  std::function<const Symbol*(std::string_view)> lookup;
  std::function<Symbol(const Symbol& head, const std::vector<Symbol>& dirs)> jet;
};

ExprPtr parse_expression(std::string_view text, const SymbolScope& scope);

}  // namespace taujet
