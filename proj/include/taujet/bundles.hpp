#pragma once

// Connections for the two-step bundle: fields over (base, line) over base.
// Covers composition, pullback along line sections, the integrality test
// for a line section against the lower connection, vertical covariant
// differentials and the vertical splitting the upper connection induces.

#include <map>
#include <vector>

#include "taujet/jetcalc.hpp"

namespace taujet {

// Lower leg: the line coordinate over the base, d tau = Gamma_lambda(x, tau)
// d x^lambda.
struct LineConnection {
  std::vector<ExprPtr> gamma;  // one component per spatial direction
};

// Upper leg: fields over (base, line). For each field, spatial components
// A^i_lambda(x, tau, y) and the line component A^i_tau(x, tau, y).
struct FieldConnection {
  struct Components {
    std::vector<ExprPtr> spatial;
    ExprPtr tau;
  };
  std::vector<Components> comps;  // one entry per field
};

void validate(const LineConnection& g, const JetSpace& js);
void validate(const FieldConnection& a, const JetSpace& js);

// Composite connection on fields over the base:
// gamma^i_lambda = A^i_lambda + A^i_tau * Gamma_lambda. The line component
// is carried along unchanged (it still drives the vertical splitting).
FieldConnection compose_connections(const FieldConnection& a,
                                    const LineConnection& g,
                                    const JetSpace& js);

// Pullback along the line section tau = h(x):
// gamma_h^i_lambda = A^i_lambda|_{tau->h} + A^i_tau|_{tau->h} * d_lambda h.
std::vector<std::vector<ExprPtr>> pullback_connection(const FieldConnection& a,
                                                      const ExprPtr& h,
                                                      const JetSpace& js);

// d_lambda h - Gamma_lambda(x, h); the section is integral exactly when
// every component vanishes identically.
std::vector<ExprPtr> integrality_defect(const LineConnection& g,
                                        const ExprPtr& h, const JetSpace& js);
bool is_integral_section(const LineConnection& g, const ExprPtr& h,
                         const JetSpace& js);

// Vertical covariant differential on the jet chart (line coordinate treated
// as a fiber with jets): Delta^i_lambda = y^i_lambda - A^i_lambda -
// A^i_tau * tau_lambda. Indexed [field][direction].
std::vector<std::vector<ExprPtr>> vertical_differential(
    const FieldConnection& a, const JetSpace& js);

// Restriction of Delta to the composite section y = s(x), tau = h(x):
// d_lambda s^i - gamma_h^i_lambda(x, h, s).
std::vector<std::vector<ExprPtr>> vertical_differential_on_section(
    const FieldConnection& a, const std::map<Symbol, ExprPtr>& section,
    const ExprPtr& h, const JetSpace& js);

// Vertical splitting induced by the line component: a vertical vector
// v = v_tau d_tau + v^i d_i decomposes as
//   field part: (v^i - A^i_tau v_tau) d_i
//   line part:  v_tau (d_tau + A^i_tau d_i)
// which sum back to v.
using VectorField = std::map<Symbol, ExprPtr>;
VectorField vertical_field_part(const VectorField& v, const FieldConnection& a,
                                const JetSpace& js);
VectorField vertical_line_part(const VectorField& v, const FieldConnection& a,
                               const JetSpace& js);

// A connection on the phase bundle, given by the velocity components of its
// line-direction lift (field and momentum slots), carries Hamiltonian data
// exactly when the contraction of the lift with omega is closed.
bool is_hamiltonian_connection(const JetSpace& js, const VectorField& velocity,
                               const DifferentialForm& omega);

}  // namespace taujet
