#include "taujet/gravity.hpp"

#include <cstddef>
#include <string>
#include <utility>

namespace taujet {

namespace {

void check_ansatz(const MetricAnsatz& m, const JetSpace& js) {
  const std::size_t d = m.g.size();
  if (d == 0) throw Error("metric ansatz has no components");
  if (m.directions.size() != d)
    throw Error("metric ansatz needs one direction per index slot");
  for (const auto& row : m.g)
    if (row.size() != d) throw Error("metric component matrix is not square");
  for (int dir : m.directions) {
    if (dir == MultiIndex::kTauDir || dir == MetricAnsatz::kFrozenDir) continue;
    if (dir < 0 || dir >= js.dimension())
      throw Error("metric ansatz direction is not a chart direction");
  }
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i + 1; j < d; ++j)
      if (!symbolic_equal(m.g[i][j], m.g[j][i]))
        throw Error("metric ansatz is not symmetric");
}

ExprPtr slot_derivative(const MetricAnsatz& m, const JetSpace& js,
                        const ExprPtr& e, std::size_t slot) {
  const int dir = m.directions[slot];
  if (dir == MetricAnsatz::kFrozenDir) return integer(0);
  return js.total_derivative(e, dir);
}

ExprPtr det_of(const std::vector<std::vector<ExprPtr>>& a) {
  const std::size_t d = a.size();
  if (d == 1) return simplify(a[0][0]);
  ExprPtr acc = integer(0);
  for (std::size_t j = 0; j < d; ++j) {
    if (a[0][j]->is_zero_literal()) continue;
    std::vector<std::vector<ExprPtr>> minor;
    minor.reserve(d - 1);
    for (std::size_t r = 1; r < d; ++r) {
      std::vector<ExprPtr> row;
      row.reserve(d - 1);
      for (std::size_t c = 0; c < d; ++c)
        if (c != j) row.push_back(a[r][c]);
      minor.push_back(std::move(row));
    }
    const ExprPtr term = a[0][j] * det_of(minor);
    acc = (j % 2 == 0) ? acc + term : acc - term;
  }
  return simplify(acc);
}

}  // namespace

CurvatureData curvature(const MetricAnsatz& m, const JetSpace& js) {
  check_ansatz(m, js);
  const std::size_t d = m.g.size();

  CurvatureData out;
  out.det = det_of(m.g);
  if (is_zero(out.det)) throw Error("metric ansatz is degenerate");
  out.det_abs = m.det_sign < 0 ? simplify(neg(out.det)) : out.det;

  // Inverse through the adjugate; charts are small (d <= 4).
  out.g_inv.assign(d, std::vector<ExprPtr>(d, integer(0)));
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      std::vector<std::vector<ExprPtr>> minor;
      minor.reserve(d - 1);
      for (std::size_t r = 0; r < d; ++r) {
        if (r == j) continue;
        std::vector<ExprPtr> row;
        row.reserve(d - 1);
        for (std::size_t c = 0; c < d; ++c)
          if (c != i) row.push_back(m.g[r][c]);
        minor.push_back(std::move(row));
      }
      ExprPtr cof = d == 1 ? integer(1) : det_of(minor);
      if ((i + j) % 2 == 1) cof = neg(cof);
      out.g_inv[i][j] = simplify(cof / out.det);
    }
  }

  const auto& g = m.g;
  out.christoffel.assign(
      d, std::vector<std::vector<ExprPtr>>(d, std::vector<ExprPtr>(d)));
  for (std::size_t l = 0; l < d; ++l) {
    for (std::size_t mu = 0; mu < d; ++mu) {
      for (std::size_t nu = mu; nu < d; ++nu) {
        ExprPtr acc = integer(0);
        for (std::size_t r = 0; r < d; ++r) {
          if (out.g_inv[l][r]->is_zero_literal()) continue;
          const ExprPtr bracket = slot_derivative(m, js, g[r][nu], mu) +
                                  slot_derivative(m, js, g[r][mu], nu) -
                                  slot_derivative(m, js, g[mu][nu], r);
          acc = acc + out.g_inv[l][r] * bracket;
        }
        const ExprPtr value = simplify(acc / 2);
        out.christoffel[l][mu][nu] = value;
        out.christoffel[l][nu][mu] = value;
      }
    }
  }

  const auto& gam = out.christoffel;
  out.ricci.assign(d, std::vector<ExprPtr>(d, integer(0)));
  for (std::size_t mu = 0; mu < d; ++mu) {
    for (std::size_t nu = mu; nu < d; ++nu) {
      ExprPtr acc = integer(0);
      for (std::size_t l = 0; l < d; ++l) {
        acc = acc + slot_derivative(m, js, gam[l][mu][nu], l) -
              slot_derivative(m, js, gam[l][mu][l], nu);
        for (std::size_t r = 0; r < d; ++r)
          acc = acc + gam[l][l][r] * gam[r][mu][nu] -
                gam[l][nu][r] * gam[r][mu][l];
      }
      const ExprPtr value = simplify(acc);
      out.ricci[mu][nu] = value;
      out.ricci[nu][mu] = value;
    }
  }

  ExprPtr scalar = integer(0);
  for (std::size_t mu = 0; mu < d; ++mu)
    for (std::size_t nu = 0; nu < d; ++nu)
      scalar = scalar + out.g_inv[mu][nu] * out.ricci[mu][nu];
  out.scalar = simplify(scalar);
  return out;
}

ExprPtr scalar_curvature_density(const MetricAnsatz& m, const JetSpace& js) {
  const CurvatureData c = curvature(m, js);
  return simplify(c.scalar * sqrt(c.det_abs));
}

ReducedLagrangian reduce_second_order(const JetSpace& js, const ExprPtr& L0) {
  const ExprPtr L = simplify(L0);
  for (const Symbol& s : free_symbols(L)) {
    if (s.kind != SymbolKind::JetCoord) continue;
    if (s.jet.tau >= 1 && s.jet.order() >= 1)
      throw UnsupportedLagrangian(
          "order reduction: mixed space-line derivatives are unsupported");
    if (s.jet.tau >= 3)
      throw UnsupportedLagrangian(
          "order reduction: line derivatives of order three or higher");
    if (s.jet.tau == 2 && s.parent != SymbolKind::Field)
      throw UnsupportedLagrangian(
          "order reduction: second line derivative of a non-field coordinate");
  }

  MultiIndex first(js.dimension());
  first.tau = 1;
  MultiIndex second(js.dimension());
  second.tau = 2;

  ExprPtr boundary = integer(0);
  for (const Symbol& y : js.fields()) {
    const Symbol accel = js.jet(y, second);
    const ExprPtr f = differentiate(L, accel);
    if (is_zero(f)) continue;
    for (const Symbol& s : free_symbols(f))
      if (s.kind == SymbolKind::JetCoord && s.jet.tau > 0)
        throw UnsupportedLagrangian(
            "order reduction: the coefficient of " + accel.name +
            " is not velocity-free");
    boundary = boundary + f * sym(js.jet(y, first));
  }
  boundary = simplify(boundary);

  const ExprPtr reduced =
      simplify(L - js.total_derivative(boundary, MultiIndex::kTauDir));
  for (const Symbol& s : free_symbols(reduced))
    if (s.kind == SymbolKind::JetCoord && s.jet.tau >= 2)
      throw UnsupportedLagrangian(
          "order reduction left second-order line derivatives behind");
  return ReducedLagrangian{L, boundary, reduced};
}

namespace {

GravityModel assemble(const JetSpace& js, MetricAnsatz metric) {
  CurvatureData geo = curvature(metric, js);
  const ExprPtr full = simplify(geo.scalar * sqrt(geo.det_abs));
  ReducedLagrangian red = reduce_second_order(js, full);
  HamiltonianSystem sys = legendre_transform(js, red.reduced);
  HamiltonEquations eqs = hamilton_equations(sys.space, sys.hamiltonian);
  return GravityModel{js,           std::move(metric), std::move(geo),
                      full,         red.boundary,      red.reduced,
                      std::move(sys), std::move(eqs)};
}

GravityModel diagonal_cosmology(const std::vector<std::string>& scales) {
  std::vector<Symbol> fields;
  fields.reserve(scales.size());
  for (std::size_t i = 0; i < scales.size(); ++i)
    fields.push_back(Symbol::field(scales[i], static_cast<int>(i)));
  const JetSpace js({}, Symbol::line_coord("tau"), fields);

  MetricAnsatz m;
  m.det_sign = -1;
  m.directions = {MultiIndex::kTauDir, MetricAnsatz::kFrozenDir,
                  MetricAnsatz::kFrozenDir, MetricAnsatz::kFrozenDir};
  m.g.assign(4, std::vector<ExprPtr>(4, integer(0)));
  m.g[0][0] = integer(-1);
  for (std::size_t k = 1; k <= 3; ++k) {
    const Symbol& a = fields[scales.size() == 1 ? 0 : k - 1];
    m.g[k][k] = pow(sym(a), 2);
  }
  return assemble(js, std::move(m));
}

}  // namespace

GravityModel frw_model() { return diagonal_cosmology({"a"}); }

GravityModel bianchi1_model() {
  return diagonal_cosmology({"a1", "a2", "a3"});
}

}  // namespace taujet
