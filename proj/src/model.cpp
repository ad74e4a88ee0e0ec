#include "taujet/model.hpp"

#include <cctype>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <utility>

namespace taujet {

namespace {

struct Location {
  int line = 1;
  int col = 1;
};

struct Scanner {
  std::string_view text;
  std::size_t pos = 0;
  int line = 1;
  int col = 1;

  bool at_end() const { return pos >= text.size(); }
  char peek() const { return at_end() ? '\0' : text[pos]; }
  void advance() {
    if (at_end()) return;
    if (text[pos] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
    ++pos;
  }
  void skip_ws() {
    while (!at_end()) {
      const char c = peek();
      if (c == ' ' || c == '\t' || c == '\r' || c == '\n')
        advance();
      else
        break;
    }
  }
  Location here() const { return {line, col}; }
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(msg, line, col);
  }
};

bool ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}
bool ident_char(char c) {
  return ident_start(c) || std::isdigit(static_cast<unsigned char>(c));
}

std::string lex_ident(Scanner& s, const char* what) {
  s.skip_ws();
  if (!ident_start(s.peek()))
    s.fail(std::string("expected ") + what);
  std::string out;
  while (!s.at_end() && ident_char(s.peek())) {
    out += s.peek();
    s.advance();
  }
  return out;
}

std::string lex_string(Scanner& s) {
  s.skip_ws();
  if (s.peek() != '"') s.fail("expected a quoted model name");
  s.advance();
  std::string out;
  while (!s.at_end() && s.peek() != '"' && s.peek() != '\n') {
    out += s.peek();
    s.advance();
  }
  if (s.peek() != '"') s.fail("unterminated model name");
  s.advance();
  return out;
}

void expect_char(Scanner& s, char c) {
  s.skip_ws();
  if (s.peek() != c) s.fail(std::string("expected '") + c + "'");
  s.advance();
}

bool try_char(Scanner& s, char c) {
  s.skip_ws();
  if (s.peek() != c) return false;
  s.advance();
  return true;
}

long lex_int(Scanner& s) {
  s.skip_ws();
  if (!std::isdigit(static_cast<unsigned char>(s.peek())))
    s.fail("expected an integer");
  long v = 0;
  while (std::isdigit(static_cast<unsigned char>(s.peek()))) {
    v = v * 10 + (s.peek() - '0');
    if (v > 1000000) s.fail("integer out of range");
    s.advance();
  }
  return v;
}

struct ExprSpan {
  std::string text;
  Location loc;
};

// The rest of the current line, right-trimmed.
ExprSpan capture_expr(Scanner& s) {
  while (!s.at_end() && (s.peek() == ' ' || s.peek() == '\t')) s.advance();
  const Location loc = s.here();
  std::string out;
  while (!s.at_end() && s.peek() != '\n') {
    out += s.peek();
    s.advance();
  }
  while (!out.empty() && (out.back() == ' ' || out.back() == '\t' ||
                          out.back() == '\r'))
    out.pop_back();
  if (out.empty()) throw ParseError("expected an expression", loc.line, loc.col);
  return {std::move(out), loc};
}

// Re-locate expression-level errors into file coordinates.
ExprPtr parse_span(const ExprSpan& sp, const SymbolScope& scope) {
  try {
    return parse_expression(sp.text, scope);
  } catch (const ParseError& e) {
    const int line = sp.loc.line + e.line - 1;
    const int col = e.line == 1 ? sp.loc.col + e.column - 1 : e.column;
    const std::string msg = e.what();
    if (msg.rfind("unknown symbol", 0) == 0)
      throw UndeclaredSymbol(msg, line, col);
    throw ParseError(msg, line, col);
  }
}

struct ConnEntry {
  std::string key;
  Location loc;
  ExprSpan value;
};
struct ConnBlock {
  std::string name;
  Location loc;
  std::vector<ConnEntry> entries;
};

int name_index(const std::vector<Symbol>& syms, const std::string& name) {
  for (std::size_t i = 0; i < syms.size(); ++i)
    if (syms[i].name == name) return static_cast<int>(i);
  return -1;
}

}  // namespace

ModelFile parse_model(std::string_view text) {
  Scanner s{text};

  s.skip_ws();
  const Location head = s.here();
  if (lex_ident(s, "the 'model' keyword") != "model")
    throw ParseError("a model file starts with 'model \"name\"'", head.line,
                     head.col);
  const std::string model_name = lex_string(s);

  std::vector<std::pair<std::string, Location>> base_decls;
  bool have_base = false;
  std::string line_name;
  Location line_loc{1, 1};
  std::vector<std::pair<std::string, Location>> field_decls;
  struct ParamScan {
    std::string name;
    Location loc;
    ExprSpan value;
  };
  std::vector<ParamScan> param_decls;
  struct DensityScan {
    bool is_lagrangian = false;
    std::string ident;
    ExprSpan expr;
  };
  std::optional<DensityScan> density;
  std::optional<std::pair<std::string, ExprSpan>> gauge_decl;
  std::vector<ConnBlock> blocks;

  while (true) {
    s.skip_ws();
    if (s.at_end()) break;
    const Location kl = s.here();
    const std::string kw = lex_ident(s, "a declaration keyword");
    if (kw == "base") {
      if (have_base)
        throw DuplicateDeclaration("duplicate 'base' declaration", kl.line,
                                   kl.col);
      have_base = true;
      if (lex_ident(s, "'dim'") != "dim") s.fail("expected 'dim'");
      s.skip_ws();
      const Location il = s.here();
      const long dim = lex_int(s);
      if (lex_ident(s, "'coords'") != "coords") s.fail("expected 'coords'");
      expect_char(s, '(');
      do {
        s.skip_ws();
        const Location cl = s.here();
        base_decls.emplace_back(lex_ident(s, "a coordinate name"), cl);
      } while (try_char(s, ','));
      expect_char(s, ')');
      if (dim != static_cast<long>(base_decls.size()))
        throw ParseError("base dim does not match the coordinate count",
                         il.line, il.col);
    } else if (kw == "line") {
      if (!line_name.empty())
        throw DuplicateDeclaration("duplicate 'line' declaration", kl.line,
                                   kl.col);
      line_loc = kl;
      line_name = lex_ident(s, "the line coordinate name");
    } else if (kw == "field") {
      s.skip_ws();
      const Location fl = s.here();
      field_decls.emplace_back(lex_ident(s, "a field name"), fl);
    } else if (kw == "param") {
      s.skip_ws();
      const Location pl = s.here();
      std::string pname = lex_ident(s, "a parameter name");
      expect_char(s, '=');
      param_decls.push_back({std::move(pname), pl, capture_expr(s)});
    } else if (kw == "lagrangian" || kw == "hamiltonian") {
      if (density)
        throw DuplicateDeclaration(
            "the model already declares a lagrangian or hamiltonian", kl.line,
            kl.col);
      DensityScan d;
      d.is_lagrangian = kw == "lagrangian";
      d.ident = lex_ident(s, "a density name");
      expect_char(s, '=');
      d.expr = capture_expr(s);
      density = std::move(d);
    } else if (kw == "gauge") {
      if (gauge_decl)
        throw DuplicateDeclaration("duplicate 'gauge' declaration", kl.line,
                                   kl.col);
      std::string gname = lex_ident(s, "a gauge name");
      expect_char(s, '=');
      gauge_decl = std::make_pair(std::move(gname), capture_expr(s));
    } else if (kw == "connection") {
      ConnBlock b;
      b.loc = kl;
      b.name = lex_ident(s, "a connection name");
      expect_char(s, '{');
      while (true) {
        s.skip_ws();
        if (s.at_end()) s.fail("unterminated connection block");
        if (s.peek() == '}') {
          s.advance();
          break;
        }
        ConnEntry e;
        e.loc = s.here();
        e.key = lex_ident(s, "a connection component name");
        expect_char(s, '=');
        e.value = capture_expr(s);
        b.entries.push_back(std::move(e));
      }
      blocks.push_back(std::move(b));
    } else {
      throw ParseError("unknown declaration '" + kw + "'", kl.line, kl.col);
    }
  }

  if (!density)
    throw ParseError("the model declares neither a lagrangian nor a "
                     "hamiltonian",
                     1, 1);
  if (line_name.empty()) line_name = "tau";

  // One namespace for every declared or implied name.
  std::map<std::string, Location> names;
  const auto declare = [&names](const std::string& nm, Location loc,
                                const char* what) {
    if (!names.emplace(nm, loc).second)
      throw DuplicateDeclaration(
          std::string("name '") + nm + "' is already taken (" + what + ")",
          loc.line, loc.col);
  };
  for (const auto& [nm, loc] : base_decls) declare(nm, loc, "base coordinate");
  declare(line_name, line_loc, "line coordinate");
  for (const auto& [nm, loc] : field_decls) declare(nm, loc, "field");
  for (const auto& [nm, loc] : field_decls)
    declare("p_" + nm, loc, "implied momentum");
  for (const auto& p : param_decls) declare(p.name, p.loc, "parameter");

  std::vector<Symbol> base;
  base.reserve(base_decls.size());
  for (std::size_t i = 0; i < base_decls.size(); ++i)
    base.push_back(
        Symbol::base_coord(base_decls[i].first, static_cast<int>(i)));
  std::vector<Symbol> fields;
  std::vector<Symbol> momenta;
  fields.reserve(field_decls.size());
  momenta.reserve(field_decls.size());
  for (std::size_t i = 0; i < field_decls.size(); ++i) {
    fields.push_back(Symbol::field(field_decls[i].first, static_cast<int>(i)));
    momenta.push_back(Symbol::momentum("p_" + field_decls[i].first,
                                       static_cast<int>(i)));
  }
  JetSpace js(base, Symbol::line_coord(line_name), fields, momenta);

  // Parameter values are constant expressions.
  const SymbolScope const_scope{
      [](std::string_view) -> const Symbol* { return nullptr; }, {}};
  std::vector<ParameterDecl> params;
  params.reserve(param_decls.size());
  for (const ParamScan& p : param_decls) {
    const ExprPtr v = parse_span(p.value, const_scope);
    if (!v->is_constant())
      throw ParseError("parameter value must be a numeric constant",
                       p.value.loc.line, p.value.loc.col);
    params.push_back(
        {Symbol::parameter(p.name), v->value(), p.value.text});
  }

  std::vector<Symbol> extras;
  extras.reserve(params.size());
  for (const ParameterDecl& p : params) extras.push_back(p.symbol);
  const SymbolScope scope = js.scope(extras);

  ModelFile m{model_name, js,      std::move(params), density->ident,
              nullptr,    nullptr, "",                nullptr,
              {},         {}};
  const ExprPtr dens = parse_span(density->expr, scope);
  if (density->is_lagrangian)
    m.lagrangian = dens;
  else
    m.hamiltonian = dens;
  if (gauge_decl) {
    m.gauge_name = gauge_decl->first;
    m.gauge = parse_span(gauge_decl->second, scope);
  }

  for (const ConnBlock& b : blocks) {
    if (m.line_connections.count(b.name) || m.field_connections.count(b.name))
      throw DuplicateDeclaration(
          "connection '" + b.name + "' is declared more than once", b.loc.line,
          b.loc.col);
    enum class Kind { Unknown, Line, Field };
    Kind kind = Kind::Unknown;
    LineConnection lc;
    lc.gamma.assign(static_cast<std::size_t>(js.dimension()), integer(0));
    FieldConnection fc;
    fc.comps.assign(fields.size(),
                    {std::vector<ExprPtr>(
                         static_cast<std::size_t>(js.dimension()), integer(0)),
                     integer(0)});
    std::set<std::string> used;
    for (const ConnEntry& e : b.entries) {
      if (!used.insert(e.key).second)
        throw DuplicateDeclaration(
            "component '" + e.key + "' is set more than once", e.loc.line,
            e.loc.col);
      const ExprPtr v = parse_span(e.value, scope);
      const int bi = name_index(base, e.key);
      if (bi >= 0) {
        if (kind == Kind::Field)
          throw ParseError("connection mixes line and field components",
                           e.loc.line, e.loc.col);
        kind = Kind::Line;
        lc.gamma[static_cast<std::size_t>(bi)] = v;
        continue;
      }
      bool placed = false;
      const std::size_t us = e.key.rfind('_');
      if (us != std::string::npos && us > 0) {
        const std::string fname = e.key.substr(0, us);
        const std::string dname = e.key.substr(us + 1);
        const int fi = name_index(fields, fname);
        if (fi >= 0) {
          auto& comp = fc.comps[static_cast<std::size_t>(fi)];
          if (dname == line_name) {
            comp.tau = v;
            placed = true;
          } else {
            const int di = name_index(base, dname);
            if (di >= 0) {
              comp.spatial[static_cast<std::size_t>(di)] = v;
              placed = true;
            }
          }
        }
      }
      if (!placed)
        throw ParseError("connection component '" + e.key +
                             "' is neither a base coordinate nor "
                             "<field>_<direction>",
                         e.loc.line, e.loc.col);
      if (kind == Kind::Line)
        throw ParseError("connection mixes line and field components",
                         e.loc.line, e.loc.col);
      kind = Kind::Field;
    }
    if (kind == Kind::Field)
      m.field_connections.emplace(b.name, std::move(fc));
    else
      m.line_connections.emplace(b.name, std::move(lc));
  }

  return m;
}

ModelFile load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read model file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_model(buf.str());
}

std::string print_model(const ModelFile& m) {
  std::ostringstream os;
  os << "model \"" << m.name << "\"\n";
  const JetSpace& js = m.space;
  if (js.dimension() > 0) {
    os << "base dim " << js.dimension() << " coords (";
    for (int i = 0; i < js.dimension(); ++i) {
      if (i) os << ", ";
      os << js.base()[static_cast<std::size_t>(i)].name;
    }
    os << ")\n";
  }
  os << "line " << js.line().name << "\n";
  for (const Symbol& f : js.fields()) os << "field " << f.name << "\n";
  for (const ParameterDecl& p : m.parameters) {
    const std::string sp =
        p.spelling.empty() ? to_string(rational(p.value)) : p.spelling;
    os << "param " << p.symbol.name << " = " << sp << "\n";
  }
  if (m.lagrangian)
    os << "lagrangian " << m.density_name << " = " << to_string(m.lagrangian)
       << "\n";
  if (m.hamiltonian)
    os << "hamiltonian " << m.density_name << " = " << to_string(m.hamiltonian)
       << "\n";
  if (m.gauge) os << "gauge " << m.gauge_name << " = " << to_string(m.gauge)
                  << "\n";
  for (const auto& [nm, lc] : m.line_connections) {
    os << "connection " << nm << " {\n";
    for (std::size_t i = 0; i < lc.gamma.size(); ++i)
      if (!lc.gamma[i]->is_zero_literal())
        os << "  " << js.base()[i].name << " = " << to_string(lc.gamma[i])
           << "\n";
    os << "}\n";
  }
  for (const auto& [nm, fc] : m.field_connections) {
    os << "connection " << nm << " {\n";
    for (std::size_t i = 0; i < fc.comps.size(); ++i) {
      const auto& comp = fc.comps[i];
      const std::string& fname = js.fields()[i].name;
      for (std::size_t d = 0; d < comp.spatial.size(); ++d)
        if (!comp.spatial[d]->is_zero_literal())
          os << "  " << fname << "_" << js.base()[d].name << " = "
             << to_string(comp.spatial[d]) << "\n";
      if (comp.tau && !comp.tau->is_zero_literal())
        os << "  " << fname << "_" << js.line().name << " = "
           << to_string(comp.tau) << "\n";
    }
    os << "}\n";
  }
  return os.str();
}

std::map<Symbol, double> parameter_values(const ModelFile& m) {
  std::map<Symbol, double> out;
  for (const ParameterDecl& p : m.parameters)
    out[p.symbol] = p.value.convert_to<double>();
  return out;
}

namespace {

bool expr_eq(const ExprPtr& a, const ExprPtr& b) {
  if (!a || !b) return !a && !b;
  return symbolic_equal(a, b);
}

}  // namespace

bool models_equivalent(const ModelFile& a, const ModelFile& b) {
  const JetSpace& x = a.space;
  const JetSpace& y = b.space;
  if (a.name != b.name) return false;
  if (!(x.base() == y.base() && x.line() == y.line() &&
        x.fields() == y.fields() && x.momenta() == y.momenta()))
    return false;
  if (a.parameters.size() != b.parameters.size()) return false;
  for (std::size_t i = 0; i < a.parameters.size(); ++i) {
    if (!(a.parameters[i].symbol == b.parameters[i].symbol)) return false;
    if (a.parameters[i].value != b.parameters[i].value) return false;
  }
  if (a.density_name != b.density_name || a.gauge_name != b.gauge_name)
    return false;
  if (!expr_eq(a.lagrangian, b.lagrangian) ||
      !expr_eq(a.hamiltonian, b.hamiltonian) || !expr_eq(a.gauge, b.gauge))
    return false;
  if (a.line_connections.size() != b.line_connections.size() ||
      a.field_connections.size() != b.field_connections.size())
    return false;
  for (const auto& [nm, lc] : a.line_connections) {
    auto it = b.line_connections.find(nm);
    if (it == b.line_connections.end()) return false;
    if (lc.gamma.size() != it->second.gamma.size()) return false;
    for (std::size_t i = 0; i < lc.gamma.size(); ++i)
      if (!expr_eq(lc.gamma[i], it->second.gamma[i])) return false;
  }
  for (const auto& [nm, fc] : a.field_connections) {
    auto it = b.field_connections.find(nm);
    if (it == b.field_connections.end()) return false;
    if (fc.comps.size() != it->second.comps.size()) return false;
    for (std::size_t i = 0; i < fc.comps.size(); ++i) {
      const auto& ca = fc.comps[i];
      const auto& cb = it->second.comps[i];
      if (ca.spatial.size() != cb.spatial.size()) return false;
      for (std::size_t d = 0; d < ca.spatial.size(); ++d)
        if (!expr_eq(ca.spatial[d], cb.spatial[d])) return false;
      if (!expr_eq(ca.tau, cb.tau)) return false;
    }
  }
  return true;
}

}  // namespace taujet
