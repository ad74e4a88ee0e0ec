#include "taujet/jetcalc.hpp"

#include <algorithm>

namespace taujet {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw Error(msg);
}

}  // namespace

JetSpace::JetSpace(std::vector<Symbol> base, Symbol line,
                   std::vector<Symbol> fields, std::vector<Symbol> momenta)
    : base_(std::move(base)),
      line_(std::move(line)),
      fields_(std::move(fields)),
      momenta_(std::move(momenta)) {
  require(line_.kind == SymbolKind::LineCoord,
          "line coordinate must be a LineCoord symbol");
  for (std::size_t i = 0; i < base_.size(); ++i) {
    require(base_[i].kind == SymbolKind::BaseCoord,
            "base coordinates must be BaseCoord symbols");
    base_[i].index = static_cast<int>(i);
  }
  for (std::size_t i = 0; i < fields_.size(); ++i) {
    require(fields_[i].kind == SymbolKind::Field,
            "fields must be Field symbols");
    fields_[i].index = static_cast<int>(i);
  }
  for (std::size_t i = 0; i < momenta_.size(); ++i) {
    require(momenta_[i].kind == SymbolKind::Momentum,
            "momenta must be Momentum symbols");
    momenta_[i].index = static_cast<int>(i);
  }
}

const Symbol& JetSpace::coordinate(int dir) const {
  if (dir == MultiIndex::kTauDir) return line_;
  require(dir >= 0 && dir < dimension(), "direction out of range");
  return base_[static_cast<std::size_t>(dir)];
}

int JetSpace::direction_index(const Symbol& coord) const {
  if (coord == line_) return MultiIndex::kTauDir;
  for (std::size_t i = 0; i < base_.size(); ++i)
    if (base_[i] == coord) return static_cast<int>(i);
  throw Error("'" + coord.name + "' is not a coordinate of this chart");
}

Symbol JetSpace::jet(const Symbol& head, const MultiIndex& idx) const {
  require(head.jettable(), "'" + head.name + "' cannot carry jets");
  require(static_cast<int>(idx.spatial.size()) == dimension(),
          "multi-index dimension mismatch");
  require(idx.tau >= 0, "negative derivative order");
  for (int a : idx.spatial) require(a >= 0, "negative derivative order");
  if (idx.is_zero()) return head;
  std::string name = "d(" + head.name;
  for (std::size_t d = 0; d < base_.size(); ++d)
    for (int r = 0; r < idx.spatial[d]; ++r) name += "," + base_[d].name;
  for (int r = 0; r < idx.tau; ++r) name += "," + line_.name;
  name += ")";
  Symbol s;
  s.name = std::move(name);
  s.kind = SymbolKind::JetCoord;
  s.index = head.index;
  s.parent = head.kind;
  s.jet = idx;
  return s;
}

Symbol JetSpace::jet_dirs(const Symbol& head,
                          const std::vector<Symbol>& dirs) const {
  MultiIndex idx(dimension());
  for (const auto& d : dirs) idx = idx.bumped(direction_index(d));
  return jet(head, idx);
}

Symbol JetSpace::head_of(const Symbol& s) const {
  if (s.kind != SymbolKind::JetCoord) return s;
  switch (s.parent) {
    case SymbolKind::Field:
      require(s.index >= 0 && s.index < static_cast<int>(fields_.size()),
              "jet of an unknown field");
      return fields_[static_cast<std::size_t>(s.index)];
    case SymbolKind::Momentum:
      require(s.index >= 0 && s.index < static_cast<int>(momenta_.size()),
              "jet of an unknown momentum");
      return momenta_[static_cast<std::size_t>(s.index)];
    case SymbolKind::LineCoord:
      return line_;
    default:
      throw Error("jet coordinate with an invalid parent");
  }
}

Symbol JetSpace::bump(const Symbol& s, int dir) const {
  if (s.kind == SymbolKind::JetCoord)
    return jet(head_of(s), s.jet.bumped(dir));
  require(s.jettable(), "'" + s.name + "' cannot carry jets");
  return jet(s, MultiIndex(dimension()).bumped(dir));
}

ExprPtr JetSpace::total_derivative(const ExprPtr& e, int dir,
                                   bool line_as_fiber) const {
  const Symbol& coord = coordinate(dir);
  ExprPtr out = differentiate(e, coord);
  for (const Symbol& s : free_symbols(e)) {
    bool chains = s.kind == SymbolKind::Field ||
                  s.kind == SymbolKind::Momentum ||
                  s.kind == SymbolKind::JetCoord ||
                  (s.kind == SymbolKind::LineCoord && line_as_fiber &&
                   dir != MultiIndex::kTauDir);
    if (!chains) continue;
    ExprPtr partial = differentiate(e, s);
    if (partial->is_zero_literal()) continue;
    out = out + partial * sym(bump(s, dir));
  }
  return simplify(out);
}

std::vector<MultiIndex> JetSpace::multi_indices(int order) const {
  std::vector<MultiIndex> out;
  MultiIndex cur(dimension());
  // Enumerate spatial counts slot by slot, then the tau count.
  std::function<void(std::size_t, int)> rec = [&](std::size_t slot,
                                                  int budget) {
    if (slot == cur.spatial.size()) {
      for (int k = 0; k <= budget; ++k) {
        cur.tau = k;
        if (cur.total_order() >= 1) out.push_back(cur);
      }
      cur.tau = 0;
      return;
    }
    for (int a = 0; a <= budget; ++a) {
      cur.spatial[slot] = a;
      rec(slot + 1, budget - a);
    }
    cur.spatial[slot] = 0;
  };
  rec(0, order);
  std::sort(out.begin(), out.end(), [](const MultiIndex& a, const MultiIndex& b) {
    if (a.total_order() != b.total_order())
      return a.total_order() < b.total_order();
    return a < b;
  });
  return out;
}

Bindings JetSpace::prolongation(const std::map<Symbol, ExprPtr>& section,
                                int order) const {
  Bindings out;
  for (const auto& [head, expr] : section) {
    require(head.jettable(), "section must map fields or the line coordinate");
    out[head] = simplify(expr);
    for (const MultiIndex& idx : multi_indices(order)) {
      ExprPtr v = expr;
      for (std::size_t d = 0; d < base_.size(); ++d)
        for (int r = 0; r < idx.spatial[d]; ++r)
          v = differentiate(v, base_[d]);
      for (int r = 0; r < idx.tau; ++r) v = differentiate(v, line_);
      out[jet(head, idx)] = v;
    }
  }
  return out;
}

SymbolScope JetSpace::scope(std::vector<Symbol> extras) const {
  auto names = std::make_shared<std::map<std::string, Symbol>>();
  auto insert = [&names](const Symbol& s) { (*names)[s.name] = s; };
  for (const auto& s : base_) insert(s);
  insert(line_);
  for (const auto& s : fields_) insert(s);
  for (const auto& s : momenta_) insert(s);
  for (const auto& s : extras) insert(s);
  JetSpace self = *this;
  SymbolScope sc;
  sc.lookup = [names](std::string_view n) -> const Symbol* {
    auto it = names->find(std::string(n));
    return it == names->end() ? nullptr : &it->second;
  };
  sc.jet = [self](const Symbol& head, const std::vector<Symbol>& dirs) {
    return self.jet_dirs(head, dirs);
  };
  return sc;
}

// ---------------------------------------------------------------------------
// Exterior algebra
// ---------------------------------------------------------------------------

void DifferentialForm::accumulate(std::vector<Symbol> key,
                                  const ExprPtr& coeff) {
  auto it = terms_.find(key);
  ExprPtr next = it == terms_.end() ? simplify(coeff) : simplify(it->second + coeff);
  if (next->is_zero_literal()) {
    if (it != terms_.end()) terms_.erase(it);
    return;
  }
  terms_[std::move(key)] = next;
}

DifferentialForm DifferentialForm::monomial(ExprPtr coeff,
                                            std::vector<Symbol> diffs) {
  // Insertion sort, tracking the permutation sign; a repeated covector
  // kills the term.
  int sign = 1;
  for (std::size_t i = 1; i < diffs.size(); ++i) {
    std::size_t j = i;
    while (j > 0 && diffs[j] < diffs[j - 1]) {
      std::swap(diffs[j], diffs[j - 1]);
      sign = -sign;
      --j;
    }
  }
  for (std::size_t i = 1; i < diffs.size(); ++i)
    if (diffs[i] == diffs[i - 1]) return {};
  DifferentialForm f;
  ExprPtr c = simplify(sign == 1 ? coeff : neg(coeff));
  if (!c->is_zero_literal()) f.terms_[std::move(diffs)] = c;
  return f;
}

DifferentialForm DifferentialForm::scalar(ExprPtr value) {
  return monomial(std::move(value), {});
}

DifferentialForm DifferentialForm::operator+(const DifferentialForm& o) const {
  DifferentialForm out = *this;
  for (const auto& [key, c] : o.terms_) out.accumulate(key, c);
  return out;
}

DifferentialForm DifferentialForm::operator-(const DifferentialForm& o) const {
  DifferentialForm out = *this;
  for (const auto& [key, c] : o.terms_) out.accumulate(key, neg(c));
  return out;
}

DifferentialForm DifferentialForm::operator*(const ExprPtr& scale) const {
  DifferentialForm out;
  for (const auto& [key, c] : terms_) out.accumulate(key, c * scale);
  return out;
}

DifferentialForm DifferentialForm::wedge(const DifferentialForm& o) const {
  DifferentialForm out;
  for (const auto& [ka, ca] : terms_)
    for (const auto& [kb, cb] : o.terms_) {
      std::vector<Symbol> key = ka;
      key.insert(key.end(), kb.begin(), kb.end());
      out = out + monomial(ca * cb, std::move(key));
    }
  return out;
}

DifferentialForm DifferentialForm::exterior_derivative() const {
  DifferentialForm out;
  for (const auto& [key, c] : terms_) {
    for (const Symbol& s : free_symbols(c)) {
      if (s.kind == SymbolKind::Parameter) continue;
      ExprPtr dc = differentiate(c, s);
      if (dc->is_zero_literal()) continue;
      std::vector<Symbol> nk;
      nk.reserve(key.size() + 1);
      nk.push_back(s);
      nk.insert(nk.end(), key.begin(), key.end());
      out = out + monomial(dc, std::move(nk));
    }
  }
  return out;
}

DifferentialForm DifferentialForm::contract(
    const std::map<Symbol, ExprPtr>& components) const {
  DifferentialForm out;
  for (const auto& [key, c] : terms_) {
    for (std::size_t j = 0; j < key.size(); ++j) {
      auto it = components.find(key[j]);
      if (it == components.end()) continue;
      std::vector<Symbol> nk;
      nk.reserve(key.size() - 1);
      for (std::size_t t = 0; t < key.size(); ++t)
        if (t != j) nk.push_back(key[t]);
      ExprPtr piece = it->second * c;
      if (j % 2 == 1) piece = neg(piece);
      out.accumulate(std::move(nk), piece);
    }
  }
  return out;
}

DifferentialForm DifferentialForm::map_coefficients(const Bindings& b,
                                                    SubstMode mode) const {
  DifferentialForm out;
  for (const auto& [key, c] : terms_) out.accumulate(key, substitute(c, b, mode));
  return out;
}

bool DifferentialForm::operator==(const DifferentialForm& o) const {
  return (*this - o).is_zero();
}

std::string DifferentialForm::str() const {
  if (terms_.empty()) return "0";
  std::string out;
  bool first = true;
  for (const auto& [key, c] : terms_) {
    if (!first) out += " + ";
    first = false;
    out += "(" + to_string(c) + ")";
    for (const auto& s : key) out += " d[" + s.name + "]";
  }
  return out;
}

std::vector<DifferentialForm> contact_forms(const JetSpace& js, int order) {
  std::vector<DifferentialForm> out;
  std::vector<MultiIndex> idxs;
  idxs.emplace_back(js.dimension());
  for (const MultiIndex& m : js.multi_indices(order - 1))
    idxs.push_back(m);
  for (const Symbol& f : js.fields()) {
    for (const MultiIndex& m : idxs) {
      if (m.total_order() >= order) continue;
      DifferentialForm theta =
          DifferentialForm::monomial(integer(1), {js.jet(f, m)});
      for (int d = 0; d < js.dimension(); ++d)
        theta = theta - DifferentialForm::monomial(
                            sym(js.jet(f, m.bumped(d))), {js.coordinate(d)});
      theta = theta -
              DifferentialForm::monomial(
                  sym(js.jet(f, m.bumped(MultiIndex::kTauDir))),
                  {js.line()});
      out.push_back(std::move(theta));
    }
  }
  return out;
}

ContactSplit contact_decompose(const JetSpace& js, const DifferentialForm& w,
                               int order) {
  if (order < 1)
    throw OrderTooLow("contact decomposition needs jet order at least 1");
  ContactSplit out;
  for (const auto& [key, coeff] : w.terms()) {
    if (key.size() != 1)
      throw Error("contact decomposition expects a form of degree one");
    const Symbol& s = key.front();
    if (s.kind == SymbolKind::BaseCoord || s.kind == SymbolKind::LineCoord) {
      out.horizontal = out.horizontal + DifferentialForm::monomial(coeff, {s});
      continue;
    }
    if (s.kind != SymbolKind::JetCoord && !s.jettable())
      throw Error("'" + s.name + "' has no contact decomposition");
    if (s.jet.total_order() >= order)
      throw Error("'" + s.name + "' lives beyond jet order " +
                  std::to_string(order));
    DifferentialForm horiz;
    for (int d = 0; d < js.dimension(); ++d)
      horiz = horiz + DifferentialForm::monomial(coeff * sym(js.bump(s, d)),
                                                 {js.coordinate(d)});
    horiz = horiz +
            DifferentialForm::monomial(
                coeff * sym(js.bump(s, MultiIndex::kTauDir)), {js.line()});
    out.horizontal = out.horizontal + horiz;
    out.contact =
        out.contact + (DifferentialForm::monomial(coeff, {s}) - horiz);
  }
  return out;
}

}  // namespace taujet
