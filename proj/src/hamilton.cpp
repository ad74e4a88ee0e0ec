#include "taujet/hamilton.hpp"

#include <algorithm>

namespace taujet {

namespace {

bool has_tau_jets(const ExprPtr& e) {
  for (const Symbol& s : free_symbols(e))
    if (s.kind == SymbolKind::JetCoord && s.jet.tau > 0) return true;
  return false;
}

bool has_spatial_jets(const ExprPtr& e) {
  for (const Symbol& s : free_symbols(e))
    if (s.kind == SymbolKind::JetCoord && s.jet.order() > 0) return true;
  return false;
}

MultiIndex unit_spatial(int n, int d) {
  MultiIndex m(n);
  m.spatial[static_cast<std::size_t>(d)] = 1;
  return m;
}

MultiIndex unit_tau(int n) {
  MultiIndex m(n);
  m.tau = 1;
  return m;
}

// Gauss-Jordan with symbolic pivots; solves A v = r in place.
std::vector<ExprPtr> solve_linear(std::vector<std::vector<ExprPtr>> a,
                                  std::vector<ExprPtr> r) {
  const std::size_t m = a.size();
  for (std::size_t col = 0; col < m; ++col) {
    std::size_t pivot = col;
    while (pivot < m && is_zero(a[pivot][col])) ++pivot;
    if (pivot == m)
      throw DegenerateLegendre(
          "velocity coefficient matrix is singular; the Legendre map does "
          "not invert");
    std::swap(a[pivot], a[col]);
    std::swap(r[pivot], r[col]);
    ExprPtr piv = a[col][col];
    for (std::size_t j = col; j < m; ++j)
      a[col][j] = simplify(a[col][j] / piv);
    r[col] = simplify(r[col] / piv);
    for (std::size_t row = 0; row < m; ++row) {
      if (row == col) continue;
      ExprPtr f = a[row][col];
      if (f->is_zero_literal()) continue;
      for (std::size_t j = col; j < m; ++j)
        a[row][j] = simplify(a[row][j] - f * a[col][j]);
      r[row] = simplify(r[row] - f * r[col]);
    }
  }
  return r;
}

}  // namespace

// ---------------------------------------------------------------------------
// Legendre transform
// ---------------------------------------------------------------------------

HamiltonianSystem legendre_transform(const JetSpace& js, const ExprPtr& L) {
  if (js.fields().empty()) throw Error("no fields to transform");
  const int n = js.dimension();
  const std::size_t m = js.fields().size();

  for (const Symbol& s : free_symbols(L)) {
    if (s.kind != SymbolKind::JetCoord) continue;
    if (s.jet.tau >= 2 || (s.jet.tau == 1 && s.jet.order() > 0))
      throw UnsupportedLagrangian(
          "Lagrangian must be first order in the line velocities");
    if (s.parent == SymbolKind::Momentum)
      throw UnsupportedLagrangian("Lagrangian must not contain momenta");
  }

  std::vector<Symbol> vels;
  vels.reserve(m);
  for (const Symbol& y : js.fields()) vels.push_back(js.jet(y, unit_tau(n)));

  std::vector<ExprPtr> p_exprs;
  p_exprs.reserve(m);
  for (std::size_t i = 0; i < m; ++i)
    p_exprs.push_back(differentiate(L, vels[i]));

  std::vector<std::vector<ExprPtr>> hess(m, std::vector<ExprPtr>(m));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      hess[i][j] = differentiate(p_exprs[i], vels[j]);
      for (const Symbol& v : vels)
        if (contains_symbol(hess[i][j], v))
          throw UnsupportedLagrangian(
              "Lagrangian is not quadratic in the line velocities");
    }

  Bindings zero_vel;
  for (const Symbol& v : vels) zero_vel[v] = integer(0);

  std::vector<Symbol> momenta;
  momenta.reserve(m);
  for (std::size_t i = 0; i < m; ++i)
    momenta.push_back(
        Symbol::momentum("p_" + js.fields()[i].name, static_cast<int>(i)));

  std::vector<ExprPtr> rhs;
  rhs.reserve(m);
  for (std::size_t i = 0; i < m; ++i)
    rhs.push_back(simplify(sym(momenta[i]) - substitute(p_exprs[i], zero_vel)));

  std::vector<ExprPtr> sol = solve_linear(hess, std::move(rhs));

  HamiltonianSystem out{
      JetSpace(js.base(), js.line(), js.fields(), momenta), L, {}, {}, {}};
  Bindings vel_bind;
  for (std::size_t i = 0; i < m; ++i) {
    out.momentum_relations[momenta[i]] = p_exprs[i];
    vel_bind[vels[i]] = sol[i];
    out.velocity_solution[vels[i]] = sol[i];
  }
  ExprPtr h = integer(0);
  for (std::size_t i = 0; i < m; ++i) h = h + sym(momenta[i]) * sol[i];
  out.hamiltonian = simplify(h - substitute(L, vel_bind));
  return out;
}

// ---------------------------------------------------------------------------
// Evolution equations
// ---------------------------------------------------------------------------

ExprPtr variational_derivative(const JetSpace& js, const ExprPtr& F,
                               const Symbol& head) {
  int max_order = 0;
  for (const Symbol& s : free_symbols(F))
    if (s.kind == SymbolKind::JetCoord && s.jet.tau == 0)
      max_order = std::max(max_order, s.jet.order());
  ExprPtr out = differentiate(F, head);
  for (const MultiIndex& idx : js.multi_indices(max_order)) {
    if (idx.tau != 0) continue;
    ExprPtr term = differentiate(F, js.jet(head, idx));
    if (term->is_zero_literal()) continue;
    for (int d = 0; d < js.dimension(); ++d)
      for (int r = 0; r < idx.spatial[static_cast<std::size_t>(d)]; ++r)
        term = js.total_derivative(term, d);
    out = out + (idx.order() % 2 == 1 ? neg(term) : term);
  }
  return simplify(out);
}

HamiltonEquations hamilton_equations(const JetSpace& js, const ExprPtr& H) {
  if (js.momenta().size() != js.fields().size())
    throw Error("chart must carry one momentum per field");
  if (has_tau_jets(H))
    throw Error("a Hamiltonian must not contain line-derivative jets");
  HamiltonEquations out;
  out.energy = simplify(H);
  out.energy_rate = differentiate(H, js.line());
  for (std::size_t i = 0; i < js.fields().size(); ++i) {
    const Symbol& y = js.fields()[i];
    const Symbol& p = js.momenta()[i];
    out.states.push_back(y);
    out.rhs[y] = variational_derivative(js, H, p);
  }
  for (std::size_t i = 0; i < js.fields().size(); ++i) {
    const Symbol& y = js.fields()[i];
    const Symbol& p = js.momenta()[i];
    out.states.push_back(p);
    out.rhs[p] = simplify(neg(variational_derivative(js, H, y)));
  }
  return out;
}

std::vector<ExprPtr> euler_lagrange(const JetSpace& js, const ExprPtr& L,
                                    int order) {
  std::vector<ExprPtr> out;
  out.reserve(js.fields().size());
  for (const Symbol& y : js.fields()) {
    ExprPtr el = differentiate(L, y);
    for (const MultiIndex& idx : js.multi_indices(order)) {
      ExprPtr term = differentiate(L, js.jet(y, idx));
      if (term->is_zero_literal()) continue;
      for (int d = 0; d < js.dimension(); ++d)
        for (int r = 0; r < idx.spatial[static_cast<std::size_t>(d)]; ++r)
          term = js.total_derivative(term, d);
      for (int r = 0; r < idx.tau; ++r)
        term = js.total_derivative(term, MultiIndex::kTauDir);
      el = el + (idx.total_order() % 2 == 1 ? neg(term) : term);
    }
    out.push_back(simplify(el));
  }
  return out;
}

std::vector<ExprPtr> lagrange_hamilton_defect(const HamiltonianSystem& sys,
                                              const HamiltonEquations& eqs) {
  const JetSpace& js = sys.space;
  if (has_spatial_jets(sys.lagrangian) || has_spatial_jets(sys.hamiltonian))
    throw Error("the agreement check covers mechanics only");
  const int n = js.dimension();
  const std::size_t m = js.fields().size();
  MultiIndex t2(n);
  t2.tau = 2;

  Bindings prel;
  for (const auto& [p, e] : sys.momentum_relations) prel[p] = e;

  // On-shell acceleration of each field, first in (tau, y, p), then with
  // the momenta eliminated.
  Bindings acc_bind;
  for (std::size_t i = 0; i < m; ++i) {
    const Symbol& y = js.fields()[i];
    const ExprPtr& f = eqs.rhs.at(y);
    ExprPtr acc = differentiate(f, js.line());
    for (std::size_t j = 0; j < m; ++j) {
      const Symbol& yj = js.fields()[j];
      const Symbol& pj = js.momenta()[j];
      acc = acc + differentiate(f, yj) * eqs.rhs.at(yj) +
            differentiate(f, pj) * eqs.rhs.at(pj);
    }
    acc_bind[js.jet(y, t2)] = simplify(substitute(acc, prel));
  }

  const std::vector<ExprPtr> els = euler_lagrange(js, sys.lagrangian, 2);
  std::vector<ExprPtr> out;
  out.reserve(m);
  for (std::size_t i = 0; i < m; ++i)
    out.push_back(simplify(substitute(els[i], acc_bind)));
  return out;
}

// ---------------------------------------------------------------------------
// Canonical forms
// ---------------------------------------------------------------------------

DifferentialForm canonical_volume(const JetSpace& js) {
  std::vector<Symbol> key = js.base();
  key.push_back(js.line());
  return DifferentialForm::monomial(integer(1), std::move(key));
}

DifferentialForm canonical_volume_tau(const JetSpace& js) {
  return canonical_volume(js).contract({{js.line(), integer(1)}});
}

namespace {

void require_momenta(const JetSpace& js) {
  if (js.momenta().size() != js.fields().size())
    throw Error("chart must carry one momentum per field");
}

DifferentialForm momentum_one_form(const JetSpace& js) {
  DifferentialForm pdy;
  for (std::size_t i = 0; i < js.fields().size(); ++i)
    pdy = pdy + DifferentialForm::monomial(sym(js.momenta()[i]),
                                           {js.fields()[i]});
  return pdy;
}

}  // namespace

DifferentialForm canonical_theta(const JetSpace& js) {
  require_momenta(js);
  return momentum_one_form(js).wedge(canonical_volume(js));
}

DifferentialForm canonical_omega(const JetSpace& js) {
  require_momenta(js);
  DifferentialForm dpdy;
  for (std::size_t i = 0; i < js.fields().size(); ++i)
    dpdy = dpdy + DifferentialForm::monomial(
                      integer(1), {js.momenta()[i], js.fields()[i]});
  return dpdy.wedge(canonical_volume(js));
}

DifferentialForm hamiltonian_form(const JetSpace& js, const ExprPtr& H) {
  require_momenta(js);
  return momentum_one_form(js).wedge(canonical_volume_tau(js)) -
         canonical_volume(js) * H;
}

DifferentialForm hamilton_defect(const JetSpace& js, const ExprPtr& H,
                                 const std::map<Symbol, ExprPtr>& velocity) {
  require_momenta(js);
  std::map<Symbol, ExprPtr> comps = velocity;
  comps[js.line()] = integer(1);
  return canonical_omega(js).contract(comps) -
         hamiltonian_form(js, H).exterior_derivative();
}

// ---------------------------------------------------------------------------
// Gauge reduction
// ---------------------------------------------------------------------------

GaugeReduced restrict_to_gauge(const JetSpace& js, const ExprPtr& H,
                               const ExprPtr& h, const LineConnection* gamma) {
  require_momenta(js);
  if (has_tau_jets(H))
    throw Error("a Hamiltonian must not contain line-derivative jets");
  for (const Symbol& s : free_symbols(h))
    if (s.kind != SymbolKind::BaseCoord && s.kind != SymbolKind::Parameter)
      throw Error("a gauge section must depend on base coordinates only");

  GaugeReduced out;
  if (gamma && !is_integral_section(*gamma, h, js))
    out.warnings.push_back(
        "gauge section is not an integral section of the line connection");

  const int n = js.dimension();
  Bindings tau_bind{{js.line(), h}};
  out.reduced_hamiltonian = substitute(H, tau_bind);
  out.mode =
      has_spatial_jets(H) ? GaugeMode::DeDonderWeyl : GaugeMode::Mechanics;

  if (out.mode == GaugeMode::Mechanics) {
    for (std::size_t i = 0; i < js.fields().size(); ++i) {
      const Symbol& y = js.fields()[i];
      const Symbol& p = js.momenta()[i];
      ExprPtr dHdp = substitute(differentiate(H, p), tau_bind);
      ExprPtr dHdy = substitute(differentiate(H, y), tau_bind);
      for (int d = 0; d < n; ++d) {
        ExprPtr dh = differentiate(h, js.coordinate(d));
        out.velocity[js.jet(y, unit_spatial(n, d))] = simplify(dh * dHdp);
        out.velocity[js.jet(p, unit_spatial(n, d))] =
            simplify(neg(dh * dHdy));
      }
    }
    return out;
  }

  // De Donder-Weyl shape: line velocities, multimomenta definitions and one
  // balance law per field.
  for (std::size_t i = 0; i < js.fields().size(); ++i) {
    const Symbol& y = js.fields()[i];
    const Symbol& p = js.momenta()[i];
    out.velocity[js.jet(y, unit_tau(n))] =
        substitute(differentiate(H, p), tau_bind);
    ExprPtr balance = sym(js.jet(p, unit_tau(n)));
    for (int d = 0; d < n; ++d) {
      ExprPtr pm = simplify(
          neg(substitute(differentiate(H, js.jet(y, unit_spatial(n, d))),
                         tau_bind)));
      Symbol pm_sym = Symbol::momentum(
          "p_" + y.name + "_" + js.coordinate(d).name, static_cast<int>(i));
      out.multimomenta[pm_sym] = pm;
      balance = balance + js.total_derivative(pm, d);
    }
    balance = balance + substitute(differentiate(H, y), tau_bind);
    out.balance.push_back(simplify(balance));
  }
  return out;
}

}  // namespace taujet
