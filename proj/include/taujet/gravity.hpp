#pragma once

// Curvature of a metric ansatz over the jet chart, the scalar-curvature
// Lagrangian density, removal of its second-order line derivatives by a
// boundary term, and ready-made homogeneous cosmology models.

#include <vector>

#include "taujet/hamilton.hpp"

namespace taujet {

// Metric on a slice chart. Each index slot is tied to a coordinate
// direction: a spatial base index, kTauDir for the line coordinate, or
// kFrozenDir for a direction nothing depends on (homogeneous ansatz), along
// which derivatives vanish identically.
struct MetricAnsatz {
  static constexpr int kFrozenDir = -2;

  std::vector<int> directions;          // one entry per index slot
  std::vector<std::vector<ExprPtr>> g;  // symmetric components
  int det_sign = 1;                     // sign of det g (-1 for Lorentzian)
};

struct CurvatureData {
  ExprPtr det;                                          // signed determinant
  ExprPtr det_abs;                                      // |det|
  std::vector<std::vector<ExprPtr>> g_inv;              // inverse metric
  std::vector<std::vector<std::vector<ExprPtr>>> christoffel;  // [l][m][n]
  std::vector<std::vector<ExprPtr>> ricci;              // R_mn
  ExprPtr scalar;                                       // g^mn R_mn
};

// Levi-Civita connection, Ricci tensor and scalar curvature of the ansatz;
// index derivatives are total derivatives on the jet chart.
CurvatureData curvature(const MetricAnsatz& m, const JetSpace& js);

// The scalar-curvature density r * sqrt|det g|.
ExprPtr scalar_curvature_density(const MetricAnsatz& m, const JetSpace& js);

// L = sum f_k * (d^2 y_k/dtau^2) + rest, with velocity-free f_k, rewritten
// as L - D_tau(sum f_k d y_k/dtau): same field equations, first order in
// the line velocities.
struct ReducedLagrangian {
  ExprPtr full;
  ExprPtr boundary;  // the subtracted total-derivative generator
  ExprPtr reduced;
};
ReducedLagrangian reduce_second_order(const JetSpace& js, const ExprPtr& L);

// A homogeneous cosmology bundled end to end: ansatz -> curvature ->
// reduced density -> momenta -> evolution equations.
struct GravityModel {
  JetSpace space;  // fields only (configuration chart)
  MetricAnsatz metric;
  CurvatureData geometry;
  ExprPtr lagrangian_full;
  ExprPtr boundary;
  ExprPtr lagrangian;        // reduced, first order
  HamiltonianSystem system;  // chart with momenta + the Hamiltonian
  HamiltonEquations equations;
};

// Flat isotropic ansatz diag(-1, a^2, a^2, a^2) with scale factor a(tau).
GravityModel frw_model();
// Flat anisotropic ansatz diag(-1, a1^2, a2^2, a3^2).
GravityModel bianchi1_model();

}  // namespace taujet
