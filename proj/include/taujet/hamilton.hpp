#pragma once

// Legendre pass from a line-velocity Lagrangian to a formal Hamiltonian,
// the formal evolution equations with their energy-rate monitor, the
// canonical forms on the extended momentum chart, Euler-Lagrange operators
// and the reduction to a gauge tau = h(x).

#include <map>
#include <string>
#include <vector>

#include "taujet/bundles.hpp"

namespace taujet {

struct DegenerateLegendre : Error {
  using Error::Error;
};
struct UnsupportedLagrangian : Error {
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Legendre transform
// ---------------------------------------------------------------------------

struct HamiltonianSystem {
  JetSpace space;      // input chart extended with momenta p_<field>
  ExprPtr lagrangian;  // the input
  // p_i -> dL/d(y^i_tau), on the original chart.
  std::map<Symbol, ExprPtr> momentum_relations;
  // y^i_tau -> expression in (x, tau, y, p, spatial jets).
  Bindings velocity_solution;
  // p_i y^i_tau - L with the velocities eliminated.
  ExprPtr hamiltonian;
};

// Requires L affine-quadratic in the line velocities with an invertible
// coefficient matrix; throws UnsupportedLagrangian / DegenerateLegendre
// otherwise. L may carry spatial jets of any order (they ride along).
HamiltonianSystem legendre_transform(const JetSpace& js, const ExprPtr& L);

// ---------------------------------------------------------------------------
// Evolution equations
// ---------------------------------------------------------------------------

struct HamiltonEquations {
  std::vector<Symbol> states;     // fields then momenta
  std::map<Symbol, ExprPtr> rhs;  // state -> d(state)/d tau
  ExprPtr energy;                 // H, simplified
  ExprPtr energy_rate;            // explicit tau-partial of H
};

// d y^i/d tau = delta H / delta p_i, d p_i/d tau = -delta H / delta y^i,
// where delta is the spatial variational derivative (plain partial when H
// carries no spatial jets). H must not contain tau-jets.
HamiltonEquations hamilton_equations(const JetSpace& js, const ExprPtr& H);

// Spatial variational derivative with respect to head:
// sum over spatial alpha of (-1)^{|alpha|} D^alpha (dF/d head_alpha).
ExprPtr variational_derivative(const JetSpace& js, const ExprPtr& F,
                               const Symbol& head);

// Euler-Lagrange expression of each field, derivatives up to the given
// total order: sum (-1)^{|alpha|+k} D^alpha_k (dL/d y_alpha_k).
std::vector<ExprPtr> euler_lagrange(const JetSpace& js, const ExprPtr& L,
                                    int order = 2);

// Euler-Lagrange expressions of the system's Lagrangian with accelerations
// eliminated through the first-order equations (and momenta through the
// Legendre relations): identically zero exactly when the two descriptions
// agree. Mechanics only (no spatial jets).
std::vector<ExprPtr> lagrange_hamilton_defect(const HamiltonianSystem& sys,
                                              const HamiltonEquations& eqs);

// ---------------------------------------------------------------------------
// Canonical forms
// ---------------------------------------------------------------------------

// dx^1 ^ ... ^ dx^n ^ dtau.
DifferentialForm canonical_volume(const JetSpace& js);
// The volume contracted with d/dtau.
DifferentialForm canonical_volume_tau(const JetSpace& js);
// p_i dy^i ^ volume.
DifferentialForm canonical_theta(const JetSpace& js);
// dp_i ^ dy^i ^ volume; equals d(canonical_theta).
DifferentialForm canonical_omega(const JetSpace& js);
// p_i dy^i ^ volume_tau - H volume.
DifferentialForm hamiltonian_form(const JetSpace& js, const ExprPtr& H);

// (d/dtau + velocity) contracted into canonical_omega, minus the exterior
// derivative of the Hamiltonian form. Vanishes exactly when velocity maps
// y^i -> dH/dp_i and p_i -> -dH/dy^i.
DifferentialForm hamilton_defect(const JetSpace& js, const ExprPtr& H,
                                 const std::map<Symbol, ExprPtr>& velocity);

// ---------------------------------------------------------------------------
// Gauge reduction
// ---------------------------------------------------------------------------

enum class GaugeMode {
  Mechanics,     // H free of spatial jets: first-order transport along h
  DeDonderWeyl,  // H with spatial jets: multimomenta plus a balance law
};

struct GaugeReduced {
  GaugeMode mode = GaugeMode::Mechanics;
  ExprPtr reduced_hamiltonian;  // H restricted to tau = h(x)
  // Jet coordinate -> right-hand side (first-order equations).
  std::map<Symbol, ExprPtr> velocity;
  // DeDonderWeyl only: spatial momentum symbols with their definitions
  // p^lambda_i = -dH/d y^i_lambda, restricted to the gauge.
  std::map<Symbol, ExprPtr> multimomenta;
  // Remaining balance laws (expressions that vanish on solutions).
  std::vector<ExprPtr> balance;
  std::vector<std::string> warnings;
};

// Restricts the formal equations to the gauge tau = h(x). When a line
// connection is supplied and h is not one of its integral sections, a
// warning is recorded (the reduction is still performed).
GaugeReduced restrict_to_gauge(const JetSpace& js, const ExprPtr& H,
                               const ExprPtr& h,
                               const LineConnection* gamma = nullptr);

}  // namespace taujet
