#include <cctype>
#include <string>

#include "taujet/symexpr.hpp"

// Text form: an infix syntax that round-trips through parse_expression.
// Negative exponents print as divisions, Power(e, 1/2) prints as sqrt(e).

namespace taujet {

namespace {

using boost::multiprecision::denominator;
using boost::multiprecision::numerator;

std::string rat_str(const Rational& q) {
  std::string s = numerator(q).str();
  if (denominator(q) != 1) s += "/" + denominator(q).str();
  return s;
}

std::string print(const ExprPtr& e);

bool needs_parens_as_factor(const ExprPtr& e) {
  return e->kind() == NodeKind::Sum || e->kind() == NodeKind::Product ||
         (e->is_constant() && e->value() < 0) ||
         (e->is_constant() && denominator(e->value()) != 1);
}

std::string factor_str(const ExprPtr& e) {
  std::string s = print(e);
  if (needs_parens_as_factor(e)) return "(" + s + ")";
  return s;
}

// base^q with q > 0.
std::string pow_str(const ExprPtr& base, const Rational& q) {
  if (q == Rational(1, 2)) return "sqrt(" + print(base) + ")";
  std::string b = factor_str(base);
  if (denominator(q) == 1) return b + "^" + numerator(q).str();
  return b + "^(" + rat_str(q) + ")";
}

std::string positive_part(const ExprPtr& e, const Rational& q) {
  return q == 1 ? factor_str(e) : pow_str(e, q);
}

std::string product_str(const Rational& coeff,
                        const std::vector<ExprPtr>& factors) {
  std::string sign = coeff < 0 ? "-" : "";
  Rational c = coeff < 0 ? Rational(-coeff) : coeff;
  std::vector<std::string> num, den;
  if (numerator(c) != 1) num.push_back(numerator(c).str());
  if (denominator(c) != 1) den.push_back(denominator(c).str());
  for (const auto& f : factors) {
    if (f->kind() == NodeKind::Power) {
      const Rational& q = f->exponent();
      if (q < 0) {
        den.push_back(positive_part(f->base(), Rational(-q)));
        continue;
      }
      num.push_back(pow_str(f->base(), q));
    } else {
      num.push_back(factor_str(f));
    }
  }
  std::string top;
  if (num.empty()) {
    top = "1";
  } else {
    for (std::size_t i = 0; i < num.size(); ++i)
      top += (i ? "*" : "") + num[i];
  }
  if (den.empty()) return sign + top;
  std::string bottom;
  for (std::size_t i = 0; i < den.size(); ++i)
    bottom += (i ? "*" : "") + den[i];
  if (den.size() > 1) bottom = "(" + bottom + ")";
  return sign + top + "/" + bottom;
}

std::string print(const ExprPtr& e) {
  switch (e->kind()) {
    case NodeKind::Integer:
    case NodeKind::Rational:
      return rat_str(e->value());
    case NodeKind::Sym:
      return e->symbol().name;
    case NodeKind::Sum: {
      std::string out;
      bool first = true;
      for (const auto& k : e->children()) {
        std::string s = print(k);
        if (first) {
          out = s;
          first = false;
        } else if (!s.empty() && s[0] == '-') {
          out += " - " + s.substr(1);
        } else {
          out += " + " + s;
        }
      }
      return out;
    }
    case NodeKind::Product: {
      const auto& kids = e->children();
      Rational c(1);
      std::vector<ExprPtr> factors;
      for (const auto& k : kids) {
        if (k->is_constant())
          c *= k->value();
        else
          factors.push_back(k);
      }
      return product_str(c, factors);
    }
    case NodeKind::Power: {
      const Rational& q = e->exponent();
      if (q < 0) return product_str(Rational(1), {e});
      return pow_str(e->base(), q);
    }
    case NodeKind::Apply: {
      const char* name = "";
      switch (e->builtin()) {
        case Builtin::Sin: name = "sin"; break;
        case Builtin::Cos: name = "cos"; break;
        case Builtin::Exp: name = "exp"; break;
        case Builtin::Ln: name = "ln"; break;
      }
      return std::string(name) + "(" + print(e->arg()) + ")";
    }
  }
  throw Error("unreachable expression kind");
}

}  // namespace

std::string to_string(const ExprPtr& e) {
  if (!e) throw Error("null expression");
  return print(e);
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

namespace {

struct Cursor {
  std::string_view text;
  std::size_t pos = 0;
  int line = 1;
  int col = 1;

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(msg, line, col);
  }

  bool at_end() const { return pos >= text.size(); }
  char peek() const { return at_end() ? '\0' : text[pos]; }

  char advance() {
    char c = text[pos++];
    if (c == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
    return c;
  }

  void skip_ws() {
    while (!at_end() && std::isspace(static_cast<unsigned char>(peek())))
      advance();
  }

  bool eat(char c) {
    skip_ws();
    if (peek() == c) {
      advance();
      return true;
    }
    return false;
  }

  void expect(char c, const char* what) {
    if (!eat(c)) fail(std::string("expected '") + c + "' " + what);
  }
};

bool ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}
bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

std::string lex_ident(Cursor& cur) {
  std::string name;
  while (!cur.at_end() && ident_char(cur.peek())) name += cur.advance();
  return name;
}

// Integer, decimal or scientific literal as an exact rational (1e-3 ==
// 1/1000, 2.5 == 5/2).
ExprPtr lex_number(Cursor& cur) {
  std::string digits;
  long scale = 0;  // decimal places
  while (!cur.at_end() && std::isdigit(static_cast<unsigned char>(cur.peek())))
    digits += cur.advance();
  if (cur.peek() == '.') {
    cur.advance();
    if (!std::isdigit(static_cast<unsigned char>(cur.peek())))
      cur.fail("expected digits after decimal point");
    while (!cur.at_end() &&
           std::isdigit(static_cast<unsigned char>(cur.peek()))) {
      digits += cur.advance();
      ++scale;
    }
  }
  long expo = 0;
  if (cur.peek() == 'e' || cur.peek() == 'E') {
    std::size_t mark_pos = cur.pos;
    int mark_line = cur.line, mark_col = cur.col;
    cur.advance();
    bool neg = false;
    if (cur.peek() == '+' || cur.peek() == '-') neg = cur.advance() == '-';
    if (!std::isdigit(static_cast<unsigned char>(cur.peek()))) {
      // Not an exponent after all (say, "2e" where e is an identifier);
      // rewind and let the caller treat it as adjacency (a parse error).
      cur.pos = mark_pos;
      cur.line = mark_line;
      cur.col = mark_col;
    } else {
      std::string ds;
      while (!cur.at_end() &&
             std::isdigit(static_cast<unsigned char>(cur.peek())))
        ds += cur.advance();
      expo = std::stol(ds);
      if (neg) expo = -expo;
    }
  }
  Integer mantissa(digits);
  Rational v(mantissa);
  long net = expo - scale;
  Integer ten(10);
  if (net > 0)
    v *= Rational(boost::multiprecision::pow(ten, static_cast<unsigned>(net)));
  else if (net < 0)
    v /= Rational(boost::multiprecision::pow(ten, static_cast<unsigned>(-net)));
  return Expr::make_rational(v);
}

struct Parser {
  Cursor cur;
  const SymbolScope& scope;

  ExprPtr parse_expr() {
    ExprPtr lhs = parse_term();
    for (;;) {
      cur.skip_ws();
      if (cur.peek() == '+') {
        cur.advance();
        lhs = lhs + parse_term();
      } else if (cur.peek() == '-') {
        cur.advance();
        lhs = lhs - parse_term();
      } else {
        return lhs;
      }
    }
  }

  ExprPtr parse_term() {
    ExprPtr lhs = parse_unary();
    for (;;) {
      cur.skip_ws();
      if (cur.peek() == '*') {
        cur.advance();
        lhs = lhs * parse_unary();
      } else if (cur.peek() == '/') {
        cur.advance();
        int line = cur.line, col = cur.col;
        ExprPtr rhs = parse_unary();
        if (rhs->is_constant() && rhs->value() == 0)
          throw ParseError("division by zero", line, col);
        lhs = lhs / rhs;
      } else {
        return lhs;
      }
    }
  }

  ExprPtr parse_unary() {
    cur.skip_ws();
    if (cur.peek() == '-') {
      cur.advance();
      return neg(parse_unary());
    }
    if (cur.peek() == '+') {
      cur.advance();
      return parse_unary();
    }
    return parse_power();
  }

  ExprPtr parse_power() {
    ExprPtr base = parse_atom();
    cur.skip_ws();
    if (cur.peek() != '^') return base;
    cur.advance();
    int line = cur.line, col = cur.col;
    ExprPtr expo = parse_unary();  // right-associative
    if (!expo->is_constant())
      throw ParseError("exponent must fold to a rational constant", line, col);
    if (base->is_constant() && base->value() == 0 && expo->value() < 0)
      throw ParseError("zero raised to a negative power", line, col);
    return Expr::make_power(base, expo->value());
  }

  ExprPtr parse_atom() {
    cur.skip_ws();
    if (cur.at_end()) cur.fail("unexpected end of expression");
    char c = cur.peek();
    if (std::isdigit(static_cast<unsigned char>(c))) return lex_number(cur);
    if (c == '(') {
      cur.advance();
      ExprPtr inner = parse_expr();
      cur.expect(')', "to close '('");
      return inner;
    }
    if (!ident_start(c)) cur.fail(std::string("unexpected character '") + c + "'");
    int line = cur.line, col = cur.col;
    std::string name = lex_ident(cur);
    cur.skip_ws();
    if (cur.peek() == '(') {
      if (name == "d") return parse_jet(line, col);
      if (name == "sqrt" || name == "sin" || name == "cos" || name == "exp" ||
          name == "ln") {
        cur.advance();
        ExprPtr a = parse_expr();
        cur.expect(')', "to close function call");
        if (name == "sqrt") return sqrt(a);
        if (name == "sin") return sin(a);
        if (name == "cos") return cos(a);
        if (name == "exp") return exp(a);
        return ln(a);
      }
      throw ParseError("unknown function '" + name + "'", line, col);
    }
    return resolve(name, line, col);
  }

  ExprPtr resolve(const std::string& name, int line, int col) {
    if (!scope.lookup)
      throw ParseError("unknown symbol '" + name + "'", line, col);
    const Symbol* s = scope.lookup(name);
    if (!s) throw ParseError("unknown symbol '" + name + "'", line, col);
    return sym(*s);
  }

  // d(head, dir1, ..., dirk): a jet coordinate of a field, momentum or the
  // line coordinate, differentiated along base directions or the line.
  ExprPtr parse_jet(int dline, int dcol) {
    cur.expect('(', "after d");
    cur.skip_ws();
    int line = cur.line, col = cur.col;
    if (!ident_start(cur.peek())) cur.fail("expected a symbol name in d(...)");
    std::string head_name = lex_ident(cur);
    const Symbol* head =
        scope.lookup ? scope.lookup(head_name) : nullptr;
    if (!head)
      throw ParseError("unknown symbol '" + head_name + "'", line, col);
    std::vector<Symbol> dirs;
    while (cur.eat(',')) {
      cur.skip_ws();
      line = cur.line;
      col = cur.col;
      if (!ident_start(cur.peek()))
        cur.fail("expected a direction name in d(...)");
      std::string dir_name = lex_ident(cur);
      const Symbol* dir = scope.lookup ? scope.lookup(dir_name) : nullptr;
      if (!dir)
        throw ParseError("unknown symbol '" + dir_name + "'", line, col);
      if (dir->kind != SymbolKind::BaseCoord &&
          dir->kind != SymbolKind::LineCoord)
        throw ParseError("'" + dir_name + "' is not a coordinate direction",
                         line, col);
      dirs.push_back(*dir);
    }
    cur.expect(')', "to close d(...)");
    if (dirs.empty())
      throw ParseError("d(...) needs at least one direction", dline, dcol);
    if (!scope.jet)
      throw ParseError("jet coordinates are not available here", dline, dcol);
    try {
      return sym(scope.jet(*head, dirs));
    } catch (const ParseError&) {
      throw;
    } catch (const Error& err) {
      throw ParseError(err.what(), dline, dcol);
    }
  }
};

}  // namespace

ExprPtr parse_expression(std::string_view text, const SymbolScope& scope) {
  Parser p{Cursor{text}, scope};
  ExprPtr e = p.parse_expr();
  p.cur.skip_ws();
  if (!p.cur.at_end())
    p.cur.fail(std::string("unexpected trailing input starting at '") +
               p.cur.peek() + "'");
  return e;
}

}  // namespace taujet
