#include "taujet/symexpr.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace taujet {

namespace {

using boost::multiprecision::denominator;
using boost::multiprecision::gcd;
using boost::multiprecision::lcm;
using boost::multiprecision::numerator;
using boost::multiprecision::pow;

bool rat_is_integer(const Rational& q) { return denominator(q) == 1; }

Integer rat_floor(const Rational& q) {
  Integer n = numerator(q), d = denominator(q);  // d > 0 always
  if (n >= 0) return n / d;
  return -((-n + d - 1) / d);
}

Rational rat_pow_int(const Rational& base, Integer e) {
  bool invert = e < 0;
  if (invert) e = -e;
  Rational r(1), b = base;
  while (e > 0) {
    if ((e & 1) != 0) r *= b;
    b *= b;
    e >>= 1;
  }
  if (invert) return Rational(1) / r;
  return r;
}

// Largest r with r^k <= x, for x >= 0.
Integer int_kth_root(const Integer& x, unsigned k) {
  if (x <= 1 || k == 1) return x;
  Integer lo = 0, hi = x;
  while (lo < hi) {
    Integer mid = (lo + hi + 1) / 2;
    if (pow(mid, k) <= x)
      lo = mid;
    else
      hi = mid - 1;
  }
  return lo;
}

bool perfect_root(const Integer& x, unsigned k, Integer& out) {
  if (x < 0) return false;
  Integer r = int_kth_root(x, k);
  if (pow(r, k) == x) {
    out = r;
    return true;
  }
  return false;
}

std::size_t hash_mix(std::size_t h, std::size_t v) {
  h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  return h;
}

std::size_t hash_integer(const Integer& n) {
  static const Integer kMod = (Integer(1) << 61) - 1;
  Integer r = n % kMod;
  return std::hash<long long>{}(r.convert_to<long long>());
}

std::size_t hash_rational(const Rational& q) {
  return hash_mix(hash_integer(numerator(q)), hash_integer(denominator(q)));
}

std::size_t hash_symbol(const Symbol& s) {
  std::size_t h = std::hash<std::string>{}(s.name);
  h = hash_mix(h, static_cast<std::size_t>(kind_rank(s.kind)));
  h = hash_mix(h, static_cast<std::size_t>(s.index + 1));
  h = hash_mix(h, static_cast<std::size_t>(s.jet.tau));
  for (int a : s.jet.spatial) h = hash_mix(h, static_cast<std::size_t>(a + 1));
  return h;
}

}  // namespace

// ---------------------------------------------------------------------------
// Symbols
// ---------------------------------------------------------------------------

int kind_rank(SymbolKind k) { return static_cast<int>(k); }

Symbol Symbol::base_coord(std::string name, int lambda) {
  Symbol s;
  s.name = std::move(name);
  s.kind = SymbolKind::BaseCoord;
  s.index = lambda;
  return s;
}
Symbol Symbol::line_coord(std::string name) {
  Symbol s;
  s.name = std::move(name);
  s.kind = SymbolKind::LineCoord;
  return s;
}
Symbol Symbol::field(std::string name, int i) {
  Symbol s;
  s.name = std::move(name);
  s.kind = SymbolKind::Field;
  s.index = i;
  return s;
}
Symbol Symbol::momentum(std::string name, int i) {
  Symbol s;
  s.name = std::move(name);
  s.kind = SymbolKind::Momentum;
  s.index = i;
  return s;
}
Symbol Symbol::parameter(std::string name) {
  Symbol s;
  s.name = std::move(name);
  s.kind = SymbolKind::Parameter;
  return s;
}

bool operator==(const Symbol& a, const Symbol& b) {
  return a.kind == b.kind && a.index == b.index && a.name == b.name &&
         a.parent == b.parent && a.jet == b.jet;
}

bool operator<(const Symbol& a, const Symbol& b) {
  if (a.kind != b.kind) return kind_rank(a.kind) < kind_rank(b.kind);
  if (a.name != b.name) return a.name < b.name;
  if (a.index != b.index) return a.index < b.index;
  if (a.parent != b.parent) return kind_rank(a.parent) < kind_rank(b.parent);
  return a.jet < b.jet;
}

// ---------------------------------------------------------------------------
// Node construction
// ---------------------------------------------------------------------------

ExprPtr Expr::build(NodeKind kind, Rational value, Symbol sym,
                    std::vector<ExprPtr> kids, Builtin fn) {
  std::shared_ptr<Expr> node(new Expr());
  node->kind_ = kind;
  node->value_ = std::move(value);
  node->sym_ = std::move(sym);
  node->kids_ = std::move(kids);
  node->fn_ = fn;
  std::size_t h = static_cast<std::size_t>(kind) * 1099511628211ULL;
  switch (kind) {
    case NodeKind::Integer:
    case NodeKind::Rational:
      h = hash_mix(h, hash_rational(node->value_));
      break;
    case NodeKind::Sym:
      h = hash_mix(h, hash_symbol(node->sym_));
      break;
    case NodeKind::Sum:
    case NodeKind::Product:
      for (const auto& k : node->kids_) h = hash_mix(h, k->hash());
      break;
    case NodeKind::Power:
      h = hash_mix(h, node->kids_.front()->hash());
      h = hash_mix(h, hash_rational(node->value_));
      break;
    case NodeKind::Apply:
      h = hash_mix(h, static_cast<std::size_t>(node->fn_));
      h = hash_mix(h, node->kids_.front()->hash());
      break;
  }
  node->hash_ = h;
  return node;
}

bool Expr::is_integer_value(long v) const {
  return is_constant() && value_ == v;
}

ExprPtr Expr::make_integer(Integer v) {
  return build(NodeKind::Integer, Rational(std::move(v)), Symbol{}, {},
               Builtin::Sin);
}

ExprPtr Expr::make_rational(Rational v) {
  NodeKind k = rat_is_integer(v) ? NodeKind::Integer : NodeKind::Rational;
  return build(k, std::move(v), Symbol{}, {}, Builtin::Sin);
}

ExprPtr Expr::make_symbol(Symbol s) {
  return build(NodeKind::Sym, Rational(0), std::move(s), {}, Builtin::Sin);
}

ExprPtr Expr::make_sum(std::vector<ExprPtr> kids) {
  std::vector<ExprPtr> flat;
  Rational c(0);
  for (auto& k : kids) {
    if (!k) throw Error("null expression in sum");
    if (k->kind() == NodeKind::Sum) {
      for (const auto& g : k->children()) {
        if (g->is_constant())
          c += g->value();
        else
          flat.push_back(g);
      }
    } else if (k->is_constant()) {
      c += k->value();
    } else {
      flat.push_back(std::move(k));
    }
  }
  if (c != 0) flat.push_back(make_rational(c));
  if (flat.empty()) return make_integer(0);
  if (flat.size() == 1) return flat.front();
  return build(NodeKind::Sum, Rational(0), Symbol{}, std::move(flat),
               Builtin::Sin);
}

ExprPtr Expr::make_product(std::vector<ExprPtr> kids) {
  std::vector<ExprPtr> flat;
  Rational c(1);
  for (auto& k : kids) {
    if (!k) throw Error("null expression in product");
    if (k->kind() == NodeKind::Product) {
      for (const auto& g : k->children()) {
        if (g->is_constant())
          c *= g->value();
        else
          flat.push_back(g);
      }
    } else if (k->is_constant()) {
      c *= k->value();
    } else {
      flat.push_back(std::move(k));
    }
  }
  if (c == 0) return make_integer(0);
  if (flat.empty()) return make_rational(c);
  if (c != 1) flat.insert(flat.begin(), make_rational(c));
  if (flat.size() == 1) return flat.front();
  return build(NodeKind::Product, Rational(0), Symbol{}, std::move(flat),
               Builtin::Sin);
}

ExprPtr Expr::make_power(ExprPtr base, Rational expo) {
  if (!base) throw Error("null expression in power");
  if (expo == 0) return make_integer(1);
  if (expo == 1) return base;
  if (base->is_constant()) {
    const Rational& c = base->value();
    if (c == 0) {
      if (expo < 0) throw DomainError("zero raised to a negative power");
      return make_integer(0);
    }
    if (rat_is_integer(expo))
      return make_rational(rat_pow_int(c, numerator(expo)));
    if (c > 0 && denominator(expo) <= 64) {
      unsigned k = denominator(expo).convert_to<unsigned>();
      Integer rn, rd;
      if (perfect_root(numerator(c), k, rn) &&
          perfect_root(denominator(c), k, rd))
        return make_rational(rat_pow_int(Rational(rn, rd), numerator(expo)));
    }
  }
  if (base->kind() == NodeKind::Power) {
    // (b^p)^q -> b^(pq); fractional powers follow the positive-real
    // convention throughout the kernel.
    Rational inner = base->exponent();
    return make_power(base->base(), inner * expo);
  }
  std::vector<ExprPtr> kid{std::move(base)};
  return build(NodeKind::Power, std::move(expo), Symbol{}, std::move(kid),
               Builtin::Sin);
}

ExprPtr Expr::make_apply(Builtin fn, ExprPtr a) {
  if (!a) throw Error("null expression in apply");
  if (a->is_constant()) {
    if (a->value() == 0) {
      switch (fn) {
        case Builtin::Sin: return make_integer(0);
        case Builtin::Cos: return make_integer(1);
        case Builtin::Exp: return make_integer(1);
        case Builtin::Ln: break;  // keep; eval reports the domain fault
      }
    }
    if (a->value() == 1 && fn == Builtin::Ln) return make_integer(0);
  }
  if (fn == Builtin::Ln && a->kind() == NodeKind::Apply &&
      a->builtin() == Builtin::Exp)
    return a->arg();
  if (fn == Builtin::Exp && a->kind() == NodeKind::Apply &&
      a->builtin() == Builtin::Ln)
    return a->arg();
  std::vector<ExprPtr> kid{std::move(a)};
  return build(NodeKind::Apply, Rational(0), Symbol{}, std::move(kid), fn);
}

// ---------------------------------------------------------------------------
// Structural order
// ---------------------------------------------------------------------------

namespace {

int cmp3(long a, long b) { return a < b ? -1 : (a > b ? 1 : 0); }

int cmp_rat(const Rational& a, const Rational& b) {
  if (a < b) return -1;
  if (b < a) return 1;
  return 0;
}

}  // namespace

int compare(const ExprPtr& a, const ExprPtr& b) {
  if (a.get() == b.get()) return 0;
  bool ca = a->is_constant(), cb = b->is_constant();
  if (ca != cb) return ca ? -1 : 1;
  if (ca) return cmp_rat(a->value(), b->value());
  if (a->kind() != b->kind())
    return cmp3(static_cast<long>(a->kind()), static_cast<long>(b->kind()));
  switch (a->kind()) {
    case NodeKind::Sym: {
      if (a->symbol() == b->symbol()) return 0;
      return a->symbol() < b->symbol() ? -1 : 1;
    }
    case NodeKind::Sum:
    case NodeKind::Product: {
      const auto& ka = a->children();
      const auto& kb = b->children();
      if (ka.size() != kb.size())
        return cmp3(static_cast<long>(ka.size()),
                    static_cast<long>(kb.size()));
      for (std::size_t i = 0; i < ka.size(); ++i)
        if (int c = compare(ka[i], kb[i])) return c;
      return 0;
    }
    case NodeKind::Power: {
      if (int c = compare(a->base(), b->base())) return c;
      return cmp_rat(a->exponent(), b->exponent());
    }
    case NodeKind::Apply: {
      if (a->builtin() != b->builtin())
        return cmp3(static_cast<long>(a->builtin()),
                    static_cast<long>(b->builtin()));
      return compare(a->arg(), b->arg());
    }
    default:
      return 0;
  }
}

bool structural_equal(const ExprPtr& a, const ExprPtr& b) {
  if (a.get() == b.get()) return true;
  if (a->hash() != b->hash()) return false;
  return compare(a, b) == 0;
}

// ---------------------------------------------------------------------------
// Convenience constructors
// ---------------------------------------------------------------------------

ExprPtr integer(long v) { return Expr::make_integer(Integer(v)); }
ExprPtr rational(long num, long den) {
  if (den == 0) throw DomainError("rational with zero denominator");
  return Expr::make_rational(Rational(Integer(num), Integer(den)));
}
ExprPtr rational(Rational v) { return Expr::make_rational(std::move(v)); }
ExprPtr sym(const Symbol& s) { return Expr::make_symbol(s); }
ExprPtr add(std::vector<ExprPtr> terms) {
  return Expr::make_sum(std::move(terms));
}
ExprPtr mul(std::vector<ExprPtr> factors) {
  return Expr::make_product(std::move(factors));
}
ExprPtr pow(const ExprPtr& base, const Rational& expo) {
  return Expr::make_power(base, expo);
}
ExprPtr pow(const ExprPtr& base, long expo) {
  return Expr::make_power(base, Rational(expo));
}
ExprPtr neg(const ExprPtr& e) { return mul({integer(-1), e}); }
ExprPtr sqrt(const ExprPtr& e) { return pow(e, Rational(1, 2)); }
ExprPtr sin(const ExprPtr& e) { return Expr::make_apply(Builtin::Sin, e); }
ExprPtr cos(const ExprPtr& e) { return Expr::make_apply(Builtin::Cos, e); }
ExprPtr exp(const ExprPtr& e) { return Expr::make_apply(Builtin::Exp, e); }
ExprPtr ln(const ExprPtr& e) { return Expr::make_apply(Builtin::Ln, e); }

ExprPtr operator+(const ExprPtr& a, const ExprPtr& b) { return add({a, b}); }
ExprPtr operator-(const ExprPtr& a, const ExprPtr& b) {
  return add({a, neg(b)});
}
ExprPtr operator*(const ExprPtr& a, const ExprPtr& b) { return mul({a, b}); }
ExprPtr operator/(const ExprPtr& a, const ExprPtr& b) {
  if (b->is_constant() && b->value() == 0)
    throw DomainError("division by zero");
  return mul({a, pow(b, -1)});
}
ExprPtr operator-(const ExprPtr& a) { return neg(a); }
ExprPtr operator+(const ExprPtr& a, long b) { return add({a, integer(b)}); }
ExprPtr operator-(const ExprPtr& a, long b) { return add({a, integer(-b)}); }
ExprPtr operator*(long a, const ExprPtr& b) { return mul({integer(a), b}); }
ExprPtr operator/(const ExprPtr& a, long b) {
  if (b == 0) throw DomainError("division by zero");
  return mul({rational(1, b), a});
}
ExprPtr operator/(long a, const ExprPtr& b) { return integer(a) / b; }

// ---------------------------------------------------------------------------
// Polynomial normal form
// ---------------------------------------------------------------------------
//
// simplify() translates the tree into a distributed generalized polynomial: a
// sum of terms, each a rational coefficient times a monomial of
// (atom, rational exponent) factors. Atoms are symbols, function
// applications, non-expandable sums and irrational constants such as 2^(1/2).
// The normal form additionally rewrites cos^2 u -> 1 - sin^2 u and cancels
// sum-valued denominators by exact polynomial division, which keeps
// simplifies-to-zero decidable for the expression class the library uses.

namespace {

struct Factor {
  ExprPtr atom;
  Rational exp;  // never 0
};

struct Mono {
  std::vector<Factor> f;  // sorted by atom order, atoms unique
};

struct Term {
  Mono m;
  Rational c;
};

using Poly = std::vector<Term>;  // sorted by monomial order, coeffs nonzero

Rational mono_grade(const Mono& m) {
  Rational g(0);
  for (const auto& x : m.f) g += x.exp;
  return g;
}

// Leading (largest) monomials first: higher grade, then atoms ascending with
// higher exponents first.
int mono_cmp(const Mono& a, const Mono& b) {
  if (int c = cmp_rat(mono_grade(b), mono_grade(a))) return c;
  std::size_t n = std::min(a.f.size(), b.f.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (int c = compare(a.f[i].atom, b.f[i].atom)) return c;
    if (int c = cmp_rat(b.f[i].exp, a.f[i].exp)) return c;
  }
  return cmp3(static_cast<long>(a.f.size()), static_cast<long>(b.f.size()));
}

bool mono_equal(const Mono& a, const Mono& b) { return mono_cmp(a, b) == 0; }

Poly poly_sorted(std::vector<Term> terms) {
  std::sort(terms.begin(), terms.end(), [](const Term& x, const Term& y) {
    return mono_cmp(x.m, y.m) < 0;
  });
  Poly out;
  for (auto& t : terms) {
    if (t.c == 0) continue;
    if (!out.empty() && mono_equal(out.back().m, t.m)) {
      out.back().c += t.c;
      if (out.back().c == 0) out.pop_back();
    } else {
      out.push_back(std::move(t));
    }
  }
  return out;
}

Poly poly_const(Rational c) {
  if (c == 0) return {};
  return {Term{Mono{}, std::move(c)}};
}

Poly poly_add(const Poly& a, const Poly& b) {
  std::vector<Term> all;
  all.reserve(a.size() + b.size());
  all.insert(all.end(), a.begin(), a.end());
  all.insert(all.end(), b.begin(), b.end());
  return poly_sorted(std::move(all));
}

Poly poly_scale(const Poly& a, const Rational& c) {
  if (c == 0) return {};
  Poly out = a;
  for (auto& t : out) t.c *= c;
  return out;
}

Poly poly_neg(const Poly& a) { return poly_scale(a, Rational(-1)); }

Poly poly_sub(const Poly& a, const Poly& b) { return poly_add(a, poly_neg(b)); }

// Multiplies two terms, merging exponents. Constant-base atoms spill integer
// exponent parts into the coefficient (integer exponents fold entirely;
// positive bases also spill the floor of a fractional exponent).
Term term_mul(const Term& a, const Term& b) {
  Term out;
  out.c = a.c * b.c;
  auto push = [&out](const ExprPtr& atom, Rational exp) {
    if (exp == 0) return;
    if (atom->is_constant()) {
      const Rational& base = atom->value();
      if (rat_is_integer(exp)) {
        out.c *= rat_pow_int(base, numerator(exp));
        return;
      }
      if (base > 0) {
        Integer fl = rat_floor(exp);
        if (fl != 0) {
          out.c *= rat_pow_int(base, fl);
          exp -= Rational(fl);
        }
        if (exp == 0) return;
      }
    }
    out.m.f.push_back(Factor{atom, std::move(exp)});
  };
  const auto& fa = a.m.f;
  const auto& fb = b.m.f;
  std::size_t i = 0, j = 0;
  while (i < fa.size() && j < fb.size()) {
    int c = compare(fa[i].atom, fb[j].atom);
    if (c < 0) {
      push(fa[i].atom, fa[i].exp);
      ++i;
    } else if (c > 0) {
      push(fb[j].atom, fb[j].exp);
      ++j;
    } else {
      push(fa[i].atom, fa[i].exp + fb[j].exp);
      ++i;
      ++j;
    }
  }
  for (; i < fa.size(); ++i) push(fa[i].atom, fa[i].exp);
  for (; j < fb.size(); ++j) push(fb[j].atom, fb[j].exp);
  return out;
}

Poly raw_mul(const Poly& a, const Poly& b) {
  std::vector<Term> all;
  all.reserve(a.size() * b.size());
  for (const auto& ta : a)
    for (const auto& tb : b) all.push_back(term_mul(ta, tb));
  return poly_sorted(std::move(all));
}

Poly raw_pow(const Poly& a, Integer n) {
  Poly r = poly_const(Rational(1));
  Poly b = a;
  while (n > 0) {
    if ((n & 1) != 0) r = raw_mul(r, b);
    b = raw_mul(b, b);
    n >>= 1;
  }
  return r;
}

Poly to_poly(const ExprPtr& e);    // forward
ExprPtr from_poly(const Poly& p);  // forward
Poly poly_reduce(const Poly& p);   // forward

// Rewrites cos^k (k >= 2) via cos^2 = 1 - sin^2 and expands sum atoms that
// acquired a positive integer exponent through exponent arithmetic.
Poly poly_fix(const Poly& in) {
  Poly out;
  std::vector<Term> work(in.begin(), in.end());
  long guard = 0;
  while (!work.empty()) {
    if (++guard > 2000000) throw Error("simplification did not terminate");
    Term t = std::move(work.back());
    work.pop_back();
    bool rewritten = false;
    for (std::size_t i = 0; i < t.m.f.size(); ++i) {
      const Factor& f = t.m.f[i];
      bool cos_sq = f.atom->kind() == NodeKind::Apply &&
                    f.atom->builtin() == Builtin::Cos && f.exp >= 2;
      bool sum_pow = f.atom->kind() == NodeKind::Sum && f.exp > 0 &&
                     rat_is_integer(f.exp);
      if (!cos_sq && !sum_pow) continue;
      Term rest = t;
      Factor fac = rest.m.f[i];
      rest.m.f.erase(rest.m.f.begin() + static_cast<long>(i));
      Poly expansion;
      if (cos_sq) {
        Integer q = rat_floor(fac.exp / 2);
        Rational rem = fac.exp - Rational(2 * q);
        ExprPtr u = fac.atom->arg();
        Poly one_minus_sin2 = poly_sub(
            poly_const(Rational(1)),
            Poly{Term{
                Mono{{Factor{Expr::make_apply(Builtin::Sin, u), Rational(2)}}},
                Rational(1)}});
        expansion = raw_pow(one_minus_sin2, q);
        if (rem != 0)
          expansion = raw_mul(
              expansion,
              Poly{Term{Mono{{Factor{fac.atom, rem}}}, Rational(1)}});
      } else {
        expansion = raw_pow(to_poly(fac.atom), numerator(fac.exp));
      }
      for (auto& p : raw_mul(Poly{rest}, expansion))
        work.push_back(std::move(p));
      rewritten = true;
      break;
    }
    if (!rewritten) out.push_back(std::move(t));
  }
  return poly_sorted(std::move(out));
}

Poly poly_mul(const Poly& a, const Poly& b) { return poly_fix(raw_mul(a, b)); }

// Rational content: gcd of coefficients, carrying the sign of the leading
// term so primitive parts lead with a positive coefficient.
Rational poly_content(const Poly& p) {
  Integer n(0), d(1);
  for (const auto& t : p) {
    n = gcd(n, numerator(t.c));
    d = lcm(d, denominator(t.c));
  }
  if (n == 0) return Rational(1);
  Rational c(n, d);
  if (p.front().c < 0) c = -c;
  return c;
}

// Common monomial factor: per-atom minimum exponent across all terms.
Mono poly_mono_content(const Poly& p) {
  if (p.empty()) return Mono{};
  Mono m = p.front().m;
  for (std::size_t k = 1; k < p.size() && !m.f.empty(); ++k) {
    const auto& f = p[k].m.f;
    std::vector<Factor> kept;
    for (const auto& fac : m.f) {
      auto it = std::find_if(f.begin(), f.end(), [&](const Factor& g) {
        return structural_equal(g.atom, fac.atom);
      });
      if (it == f.end()) continue;
      Rational e = fac.exp < it->exp ? fac.exp : it->exp;
      if (e != 0) kept.push_back(Factor{fac.atom, e});
    }
    m.f = std::move(kept);
  }
  return m;
}

Mono mono_inverse(const Mono& m) {
  Mono r = m;
  for (auto& f : r.f) f.exp = -f.exp;
  return r;
}

// Divides every term by the given monomial (exact, exponent arithmetic).
Poly poly_div_mono(const Poly& p, const Mono& m) {
  Term inv{mono_inverse(m), Rational(1)};
  std::vector<Term> out;
  out.reserve(p.size());
  for (const auto& t : p) out.push_back(term_mul(t, inv));
  return poly_sorted(std::move(out));
}

// Exact multivariate division by a primitive sum polynomial; true plus the
// quotient on success. Bails out (false) instead of looping on inputs that
// are not exactly divisible.
bool exact_divide(const Poly& num, const Poly& div, Poly& quotient) {
  if (div.empty()) return false;
  const Term& lead = div.front();
  Term lead_inv{mono_inverse(lead.m), Rational(1) / lead.c};
  Poly q, r = num;
  int steps = 0;
  while (!r.empty()) {
    if (++steps > 4000) return false;
    Term t = term_mul(r.front(), lead_inv);
    // Exact division never sends a divisor atom to a negative exponent.
    for (const auto& dt : div)
      for (const auto& df : dt.m.f)
        for (const auto& tf : t.m.f)
          if (tf.exp < 0 && structural_equal(tf.atom, df.atom)) return false;
    q.push_back(t);
    r = poly_sub(r, raw_mul(Poly{t}, div));
  }
  quotient = poly_sorted(std::move(q));
  return true;
}

ExprPtr from_poly(const Poly& p) {
  if (p.empty()) return integer(0);
  std::vector<ExprPtr> terms;
  terms.reserve(p.size());
  for (const auto& t : p) {
    std::vector<ExprPtr> factors;
    if (t.c != 1 || t.m.f.empty()) factors.push_back(rational(t.c));
    for (const auto& f : t.m.f)
      factors.push_back(f.exp == 1 ? f.atom : Expr::make_power(f.atom, f.exp));
    if (factors.size() == 1)
      terms.push_back(std::move(factors.front()));
    else
      terms.push_back(Expr::make_product(std::move(factors)));
  }
  if (terms.size() == 1) return terms.front();
  return Expr::make_sum(std::move(terms));
}

ExprPtr canonical(const ExprPtr& e) {
  return from_poly(poly_reduce(to_poly(e)));
}

Poly poly_reduce(const Poly& in) {
  Poly p = poly_fix(in);
  // Sum atoms occurring with negative integer exponents, with multiplicity.
  std::vector<std::pair<ExprPtr, Integer>> denoms;
  for (const auto& t : p)
    for (const auto& f : t.m.f) {
      if (f.atom->kind() != NodeKind::Sum) continue;
      if (f.exp >= 0 || !rat_is_integer(f.exp)) continue;
      Integer mult = -numerator(f.exp);
      auto it = std::find_if(denoms.begin(), denoms.end(), [&](const auto& d) {
        return structural_equal(d.first, f.atom);
      });
      if (it == denoms.end())
        denoms.emplace_back(f.atom, mult);
      else
        it->second = std::max(it->second, mult);
    }
  if (denoms.empty()) return p;
  std::sort(denoms.begin(), denoms.end(), [](const auto& a, const auto& b) {
    return compare(a.first, b.first) < 0;
  });
  // Multiply through by the common denominator; poly_fix expands every sum
  // atom whose exponent lands on a positive integer, so the numerator comes
  // out free of those atoms.
  Mono d;
  for (const auto& [atom, mult] : denoms)
    d.f.push_back(Factor{atom, Rational(mult)});
  Poly num = poly_mul(p, Poly{Term{d, Rational(1)}});
  if (num.empty()) return {};
  // Pull out the monomial content so the division trials see primitive
  // input (a quotient may legitimately be a pure monomial).
  Mono content = poly_mono_content(num);
  if (!content.f.empty()) num = poly_div_mono(num, content);
  for (auto& [atom, mult] : denoms) {
    Poly datom = to_poly(atom);
    while (mult > 0) {
      Poly quotient;
      if (!exact_divide(num, datom, quotient)) break;
      num = std::move(quotient);
      --mult;
    }
  }
  Mono attach = content;
  for (const auto& [atom, mult] : denoms)
    if (mult > 0) attach.f.push_back(Factor{atom, Rational(-mult)});
  std::sort(attach.f.begin(), attach.f.end(),
            [](const Factor& a, const Factor& b) {
              return compare(a.atom, b.atom) < 0;
            });
  if (attach.f.empty()) return num;
  return poly_mul(num, Poly{Term{attach, Rational(1)}});
}

Poly poly_power(const Poly& base, const Rational& q);

Poly factor_to_poly(const ExprPtr& atom, const Rational& exp) {
  if (exp == 0) return poly_const(Rational(1));
  if (atom->kind() == NodeKind::Sum && exp > 0 && rat_is_integer(exp))
    return raw_pow(to_poly(atom), numerator(exp));
  return Poly{term_mul(Term{Mono{}, Rational(1)},
                       Term{Mono{{Factor{atom, exp}}}, Rational(1)})};
}

// c^q as a polynomial (possibly a single irrational atom).
Poly rational_power(const Rational& c, const Rational& q) {
  if (c == 0) {
    if (q > 0) return {};
    throw DomainError("zero raised to a negative power");
  }
  if (rat_is_integer(q)) return poly_const(rat_pow_int(c, numerator(q)));
  if (c > 0) {
    if (denominator(q) <= 64) {
      unsigned k = denominator(q).convert_to<unsigned>();
      Integer rn, rd;
      if (perfect_root(numerator(c), k, rn) &&
          perfect_root(denominator(c), k, rd))
        return poly_const(rat_pow_int(Rational(rn, rd), numerator(q)));
    }
    Integer fl = rat_floor(q);
    Rational frac = q - Rational(fl);
    return Poly{Term{Mono{{Factor{Expr::make_rational(c), frac}}},
                     rat_pow_int(c, fl)}};
  }
  // Negative radicand with a fractional exponent: keep opaque.
  return Poly{Term{Mono{{Factor{Expr::make_rational(c), q}}}, Rational(1)}};
}

Poly poly_power(const Poly& base, const Rational& q) {
  if (q == 0) return poly_const(Rational(1));
  if (q == 1) return base;
  if (base.empty()) {
    if (q > 0) return {};
    throw DomainError("zero raised to a negative power");
  }
  if (rat_is_integer(q) && q > 0)
    return poly_fix(raw_pow(base, numerator(q)));
  if (base.size() == 1) {
    const Term& t = base.front();
    Poly out = rational_power(t.c, q);
    for (const auto& f : t.m.f)
      out = raw_mul(out, factor_to_poly(f.atom, f.exp * q));
    return poly_fix(out);
  }
  // Non-expandable power of a sum: atomize a primitive copy and reattach
  // the extracted content.
  Rational content = poly_content(base);
  Mono mono = poly_mono_content(base);
  Poly prim = base;
  if (!mono.f.empty()) prim = poly_div_mono(prim, mono);
  if (content != Rational(1)) prim = poly_scale(prim, Rational(1) / content);
  Poly out;
  if (!rat_is_integer(q) && content < 0) {
    // A fractional power cannot carry the sign outside; keep it inside.
    out = rational_power(-content, q);
    prim = poly_neg(prim);
  } else {
    out = rational_power(content, q);
  }
  ExprPtr atom = from_poly(prim);
  if (atom->kind() == NodeKind::Sum)
    out = raw_mul(out, Poly{Term{Mono{{Factor{atom, q}}}, Rational(1)}});
  else
    out = raw_mul(out, poly_power(to_poly(atom), q));
  for (const auto& f : mono.f)
    out = raw_mul(out, factor_to_poly(f.atom, f.exp * q));
  return poly_fix(out);
}

bool expr_leading_negative(const ExprPtr& e) {
  switch (e->kind()) {
    case NodeKind::Integer:
    case NodeKind::Rational:
      return e->value() < 0;
    case NodeKind::Product:
    case NodeKind::Sum:
      return expr_leading_negative(e->children().front());
    default:
      return false;
  }
}

Poly to_poly(const ExprPtr& e) {
  switch (e->kind()) {
    case NodeKind::Integer:
    case NodeKind::Rational:
      return poly_const(e->value());
    case NodeKind::Sym:
      return Poly{Term{Mono{{Factor{e, Rational(1)}}}, Rational(1)}};
    case NodeKind::Sum: {
      Poly p;
      for (const auto& k : e->children()) p = poly_add(p, to_poly(k));
      return p;
    }
    case NodeKind::Product: {
      Poly p = poly_const(Rational(1));
      for (const auto& k : e->children()) p = poly_mul(p, to_poly(k));
      return p;
    }
    case NodeKind::Power: {
      Poly pb = poly_reduce(to_poly(e->base()));
      return poly_power(pb, e->exponent());
    }
    case NodeKind::Apply: {
      ExprPtr a = canonical(e->arg());
      Builtin fn = e->builtin();
      Rational sign(1);
      if ((fn == Builtin::Sin || fn == Builtin::Cos) &&
          expr_leading_negative(a)) {
        a = canonical(neg(a));
        if (fn == Builtin::Sin) sign = -1;
      }
      ExprPtr folded = Expr::make_apply(fn, a);
      if (folded->kind() != NodeKind::Apply)
        return poly_scale(to_poly(folded), sign);
      return Poly{Term{Mono{{Factor{folded, Rational(1)}}}, sign}};
    }
  }
  throw Error("unreachable expression kind");
}

}  // namespace

ExprPtr simplify(const ExprPtr& e) {
  if (!e) throw Error("null expression");
  return canonical(e);
}

// ---------------------------------------------------------------------------
// Differentiation
// ---------------------------------------------------------------------------

namespace {

ExprPtr diff_raw(const ExprPtr& e, const Symbol& s) {
  switch (e->kind()) {
    case NodeKind::Integer:
    case NodeKind::Rational:
      return integer(0);
    case NodeKind::Sym:
      return e->symbol() == s ? integer(1) : integer(0);
    case NodeKind::Sum: {
      std::vector<ExprPtr> parts;
      parts.reserve(e->children().size());
      for (const auto& k : e->children()) parts.push_back(diff_raw(k, s));
      return add(std::move(parts));
    }
    case NodeKind::Product: {
      const auto& kids = e->children();
      std::vector<ExprPtr> parts;
      for (std::size_t i = 0; i < kids.size(); ++i) {
        std::vector<ExprPtr> fs;
        fs.push_back(diff_raw(kids[i], s));
        for (std::size_t j = 0; j < kids.size(); ++j)
          if (j != i) fs.push_back(kids[j]);
        parts.push_back(mul(std::move(fs)));
      }
      return add(std::move(parts));
    }
    case NodeKind::Power: {
      const Rational& q = e->exponent();
      return mul({rational(q), Expr::make_power(e->base(), q - 1),
                  diff_raw(e->base(), s)});
    }
    case NodeKind::Apply: {
      ExprPtr da = diff_raw(e->arg(), s);
      switch (e->builtin()) {
        case Builtin::Sin:
          return mul({cos(e->arg()), da});
        case Builtin::Cos:
          return mul({integer(-1), sin(e->arg()), da});
        case Builtin::Exp:
          return mul({exp(e->arg()), da});
        case Builtin::Ln:
          return mul({pow(e->arg(), -1), da});
      }
    }
  }
  throw Error("unreachable expression kind");
}

}  // namespace

ExprPtr differentiate(const ExprPtr& e, const Symbol& s) {
  if (!e) throw Error("null expression");
  return simplify(diff_raw(e, s));
}

// ---------------------------------------------------------------------------
// Substitution
// ---------------------------------------------------------------------------

namespace {

ExprPtr subst_raw(const ExprPtr& e, const Bindings& b) {
  switch (e->kind()) {
    case NodeKind::Integer:
    case NodeKind::Rational:
      return e;
    case NodeKind::Sym: {
      auto it = b.find(e->symbol());
      return it == b.end() ? e : it->second;
    }
    case NodeKind::Sum: {
      std::vector<ExprPtr> kids;
      kids.reserve(e->children().size());
      for (const auto& k : e->children()) kids.push_back(subst_raw(k, b));
      return add(std::move(kids));
    }
    case NodeKind::Product: {
      std::vector<ExprPtr> kids;
      kids.reserve(e->children().size());
      for (const auto& k : e->children()) kids.push_back(subst_raw(k, b));
      return mul(std::move(kids));
    }
    case NodeKind::Power:
      return Expr::make_power(subst_raw(e->base(), b), e->exponent());
    case NodeKind::Apply:
      return Expr::make_apply(e->builtin(), subst_raw(e->arg(), b));
  }
  throw Error("unreachable expression kind");
}

// Resolves bindings against each other in dependency order; a cycle
// (including a self-reference) has no well-defined resolved form.
Bindings resolve_bindings(const Bindings& b) {
  Bindings resolved;
  std::map<Symbol, int> state;  // 1 visiting, 2 done
  std::function<void(const Symbol&)> visit = [&](const Symbol& s) {
    auto st = state.find(s);
    if (st != state.end()) {
      if (st->second == 1)
        throw CyclicBinding("cyclic binding through " + s.name);
      return;
    }
    state[s] = 1;
    const ExprPtr& rhs = b.at(s);
    for (const auto& dep : free_symbols(rhs))
      if (b.count(dep)) visit(dep);
    resolved[s] = subst_raw(rhs, resolved);
    state[s] = 2;
  };
  for (const auto& [s, rhs] : b) visit(s);
  return resolved;
}

}  // namespace

ExprPtr substitute(const ExprPtr& e, const Bindings& bindings, SubstMode mode) {
  if (!e) throw Error("null expression");
  if (mode == SubstMode::Resolved)
    return simplify(subst_raw(e, resolve_bindings(bindings)));
  return simplify(subst_raw(e, bindings));
}

// ---------------------------------------------------------------------------
// Numeric evaluation
// ---------------------------------------------------------------------------

double eval_numeric(const ExprPtr& e, const NumericEnv& env) {
  switch (e->kind()) {
    case NodeKind::Integer:
    case NodeKind::Rational:
      return e->value().convert_to<double>();
    case NodeKind::Sym: {
      auto it = env.find(e->symbol());
      if (it == env.end())
        throw UnboundSymbol("unbound symbol " + e->symbol().name);
      return it->second;
    }
    case NodeKind::Sum: {
      double s = 0;
      for (const auto& k : e->children()) s += eval_numeric(k, env);
      return s;
    }
    case NodeKind::Product: {
      double s = 1;
      for (const auto& k : e->children()) s *= eval_numeric(k, env);
      return s;
    }
    case NodeKind::Power: {
      double b = eval_numeric(e->base(), env);
      const Rational& q = e->exponent();
      if (b == 0 && q < 0) throw DomainError("division by zero");
      if (!rat_is_integer(q) && b < 0)
        throw DomainError("fractional power of a negative value");
      return std::pow(b, q.convert_to<double>());
    }
    case NodeKind::Apply: {
      double a = eval_numeric(e->arg(), env);
      switch (e->builtin()) {
        case Builtin::Sin:
          return std::sin(a);
        case Builtin::Cos:
          return std::cos(a);
        case Builtin::Exp:
          return std::exp(a);
        case Builtin::Ln:
          if (a <= 0) throw DomainError("ln of a non-positive value");
          return std::log(a);
      }
    }
  }
  throw Error("unreachable expression kind");
}

// ---------------------------------------------------------------------------
// Symbol collection, zero tests
// ---------------------------------------------------------------------------

void collect_symbols(const ExprPtr& e, std::set<Symbol>& out) {
  switch (e->kind()) {
    case NodeKind::Sym:
      out.insert(e->symbol());
      return;
    case NodeKind::Sum:
    case NodeKind::Product:
    case NodeKind::Power:
    case NodeKind::Apply:
      for (const auto& k : e->children()) collect_symbols(k, out);
      return;
    default:
      return;
  }
}

std::set<Symbol> free_symbols(const ExprPtr& e) {
  std::set<Symbol> out;
  collect_symbols(e, out);
  return out;
}

bool contains_symbol(const ExprPtr& e, const Symbol& s) {
  switch (e->kind()) {
    case NodeKind::Sym:
      return e->symbol() == s;
    case NodeKind::Sum:
    case NodeKind::Product:
    case NodeKind::Power:
    case NodeKind::Apply:
      for (const auto& k : e->children())
        if (contains_symbol(k, s)) return true;
      return false;
    default:
      return false;
  }
}

bool is_zero(const ExprPtr& e) { return simplify(e)->is_zero_literal(); }

bool symbolic_equal(const ExprPtr& a, const ExprPtr& b) {
  return is_zero(a - b);
}

}  // namespace taujet
