#include "taujet/bundles.hpp"

namespace taujet {

void validate(const LineConnection& g, const JetSpace& js) {
  if (static_cast<int>(g.gamma.size()) != js.dimension())
    throw Error("line connection needs one component per spatial direction");
  for (const auto& e : g.gamma)
    if (!e) throw Error("null line connection component");
}

void validate(const FieldConnection& a, const JetSpace& js) {
  if (a.comps.size() != js.fields().size())
    throw Error("field connection needs one entry per field");
  for (const auto& c : a.comps) {
    if (static_cast<int>(c.spatial.size()) != js.dimension())
      throw Error("field connection needs one spatial component per direction");
    if (!c.tau) throw Error("null field connection line component");
    for (const auto& e : c.spatial)
      if (!e) throw Error("null field connection component");
  }
}

FieldConnection compose_connections(const FieldConnection& a,
                                    const LineConnection& g,
                                    const JetSpace& js) {
  validate(a, js);
  validate(g, js);
  FieldConnection out;
  out.comps.reserve(a.comps.size());
  for (const auto& c : a.comps) {
    FieldConnection::Components nc;
    nc.tau = simplify(c.tau);
    nc.spatial.reserve(c.spatial.size());
    for (std::size_t d = 0; d < c.spatial.size(); ++d)
      nc.spatial.push_back(simplify(c.spatial[d] + c.tau * g.gamma[d]));
    out.comps.push_back(std::move(nc));
  }
  return out;
}

std::vector<std::vector<ExprPtr>> pullback_connection(const FieldConnection& a,
                                                      const ExprPtr& h,
                                                      const JetSpace& js) {
  validate(a, js);
  Bindings on_section{{js.line(), h}};
  std::vector<std::vector<ExprPtr>> out;
  out.reserve(a.comps.size());
  for (const auto& c : a.comps) {
    std::vector<ExprPtr> row;
    row.reserve(c.spatial.size());
    ExprPtr tau_comp = substitute(c.tau, on_section);
    for (int d = 0; d < js.dimension(); ++d) {
      ExprPtr dh = differentiate(h, js.coordinate(d));
      row.push_back(simplify(
          substitute(c.spatial[static_cast<std::size_t>(d)], on_section) +
          tau_comp * dh));
    }
    out.push_back(std::move(row));
  }
  return out;
}

std::vector<ExprPtr> integrality_defect(const LineConnection& g,
                                        const ExprPtr& h, const JetSpace& js) {
  validate(g, js);
  Bindings on_section{{js.line(), h}};
  std::vector<ExprPtr> out;
  out.reserve(g.gamma.size());
  for (int d = 0; d < js.dimension(); ++d) {
    ExprPtr dh = differentiate(h, js.coordinate(d));
    out.push_back(simplify(
        dh - substitute(g.gamma[static_cast<std::size_t>(d)], on_section)));
  }
  return out;
}

bool is_integral_section(const LineConnection& g, const ExprPtr& h,
                         const JetSpace& js) {
  for (const auto& defect : integrality_defect(g, h, js))
    if (!defect->is_zero_literal()) return false;
  return true;
}

std::vector<std::vector<ExprPtr>> vertical_differential(
    const FieldConnection& a, const JetSpace& js) {
  validate(a, js);
  std::vector<std::vector<ExprPtr>> out;
  out.reserve(a.comps.size());
  for (std::size_t i = 0; i < a.comps.size(); ++i) {
    const auto& c = a.comps[i];
    const Symbol& y = js.fields()[i];
    std::vector<ExprPtr> row;
    row.reserve(c.spatial.size());
    for (int d = 0; d < js.dimension(); ++d) {
      ExprPtr y_d = sym(js.bump(y, d));
      ExprPtr tau_d = sym(js.bump(js.line(), d));
      row.push_back(simplify(y_d - c.spatial[static_cast<std::size_t>(d)] -
                             c.tau * tau_d));
    }
    out.push_back(std::move(row));
  }
  return out;
}

std::vector<std::vector<ExprPtr>> vertical_differential_on_section(
    const FieldConnection& a, const std::map<Symbol, ExprPtr>& section,
    const ExprPtr& h, const JetSpace& js) {
  validate(a, js);
  Bindings bound{{js.line(), h}};
  for (const auto& [y, s] : section) bound[y] = s;
  std::vector<std::vector<ExprPtr>> out;
  out.reserve(a.comps.size());
  for (std::size_t i = 0; i < a.comps.size(); ++i) {
    const auto& c = a.comps[i];
    const Symbol& y = js.fields()[i];
    auto it = section.find(y);
    if (it == section.end())
      throw Error("section does not bind field '" + y.name + "'");
    std::vector<ExprPtr> row;
    row.reserve(c.spatial.size());
    ExprPtr tau_comp = substitute(c.tau, bound);
    for (int d = 0; d < js.dimension(); ++d) {
      ExprPtr ds = differentiate(it->second, js.coordinate(d));
      ExprPtr dh = differentiate(h, js.coordinate(d));
      ExprPtr gamma_h =
          substitute(c.spatial[static_cast<std::size_t>(d)], bound) +
          tau_comp * dh;
      row.push_back(simplify(ds - gamma_h));
    }
    out.push_back(std::move(row));
  }
  return out;
}

namespace {

ExprPtr component_or_zero(const VectorField& v, const Symbol& s) {
  auto it = v.find(s);
  return it == v.end() ? integer(0) : it->second;
}

}  // namespace

VectorField vertical_field_part(const VectorField& v, const FieldConnection& a,
                                const JetSpace& js) {
  validate(a, js);
  ExprPtr v_tau = component_or_zero(v, js.line());
  VectorField out;
  for (std::size_t i = 0; i < js.fields().size(); ++i) {
    const Symbol& y = js.fields()[i];
    ExprPtr comp = simplify(component_or_zero(v, y) - a.comps[i].tau * v_tau);
    if (!comp->is_zero_literal()) out[y] = comp;
  }
  return out;
}

VectorField vertical_line_part(const VectorField& v, const FieldConnection& a,
                               const JetSpace& js) {
  validate(a, js);
  ExprPtr v_tau = simplify(component_or_zero(v, js.line()));
  VectorField out;
  if (v_tau->is_zero_literal()) return out;
  out[js.line()] = v_tau;
  for (std::size_t i = 0; i < js.fields().size(); ++i) {
    const Symbol& y = js.fields()[i];
    ExprPtr comp = simplify(a.comps[i].tau * v_tau);
    if (!comp->is_zero_literal()) out[y] = comp;
  }
  return out;
}

bool is_hamiltonian_connection(const JetSpace& js, const VectorField& velocity,
                               const DifferentialForm& omega) {
  VectorField lift = velocity;
  lift[js.line()] = integer(1);
  return omega.contract(lift).exterior_derivative().is_zero();
}

}  // namespace taujet
