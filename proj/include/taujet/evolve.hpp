#pragma once

// Numeric side: expressions compiled to evaluation tapes, fixed-step
// integrators (classic Runge-Kutta and the symplectic implicit midpoint
// rule) and energy-drift monitoring along trajectories.

#include <iosfwd>
#include <map>
#include <vector>

#include "taujet/hamilton.hpp"

namespace taujet {

struct NonFiniteState : Error {
  using Error::Error;
};
struct FixedPointDivergence : Error {
  using Error::Error;
};

// A scalar expression flattened to a register tape over a fixed variable
// layout, for cheap repeated evaluation.
class CompiledScalar {
 public:
  CompiledScalar() = default;
  CompiledScalar(const ExprPtr& e, const std::map<Symbol, int>& slots);

  double operator()(const std::vector<double>& vars) const;

 private:
  enum class OpCode : std::uint8_t {
    Const,
    Var,
    Add,
    Mul,
    PowInt,
    PowReal,
    Sin,
    Cos,
    Exp,
    Ln,
  };
  struct Op {
    OpCode code;
    int a = 0;
    int b = 0;
    double k = 0;
  };
  int compile(const ExprPtr& e, const std::map<Symbol, int>& slots);
  std::vector<Op> ops_;
};

// First-order system d(state)/d(tau) = f(tau, state) with an energy scalar
// and its explicit tau-rate riding along.
class OdeSystem {
 public:
  // From symbolic parts; parameter symbols appearing anywhere must be given
  // values. Right-hand sides must be free of jet coordinates.
  OdeSystem(std::vector<Symbol> states, const std::map<Symbol, ExprPtr>& rhs,
            Symbol time, ExprPtr energy, ExprPtr energy_rate,
            const std::map<Symbol, double>& parameters = {});
  // The mechanics reduction of formal Hamilton equations.
  OdeSystem(const JetSpace& js, const HamiltonEquations& eqs,
            const std::map<Symbol, double>& parameters = {});

  int size() const { return static_cast<int>(states_.size()); }
  const std::vector<Symbol>& states() const { return states_; }

  void eval(double tau, const std::vector<double>& y,
            std::vector<double>& dy) const;
  double energy(double tau, const std::vector<double>& y) const;
  double energy_rate(double tau, const std::vector<double>& y) const;

 private:
  void fill(double tau, const std::vector<double>& y) const;

  std::vector<Symbol> states_;
  std::vector<CompiledScalar> rhs_;
  CompiledScalar energy_;
  CompiledScalar energy_rate_;
  std::vector<double> param_values_;
  mutable std::vector<double> buffer_;  // tau, states, parameters
};

enum class Method { Rk4, ImplicitMidpoint };

struct Trajectory {
  std::vector<Symbol> states;
  std::vector<double> taus;
  std::vector<std::vector<double>> samples;  // one state row per tau
  std::vector<double> energies;
};

struct IntegrateOptions {
  double tau_begin = 0.0;
  double tau_end = 1.0;
  double step = 1e-3;
  Method method = Method::Rk4;
  int record_every = 1;  // sample thinning; endpoints always recorded
  double fixed_point_tol = 1e-13;
  int fixed_point_max_iters = 50;
};

// Fixed-step integration; throws NonFiniteState when the state leaves the
// representable range and FixedPointDivergence when the midpoint iteration
// fails to settle.
Trajectory integrate(const OdeSystem& sys, const std::vector<double>& y0,
                     const IntegrateOptions& opt);

struct EnergyReport {
  double initial = 0.0;
  double max_abs_drift = 0.0;  // max |H(tau) - H(tau_begin)|
  double max_rel_drift = 0.0;  // drift over max(1, |H(tau_begin)|)
  // max |finite-difference dH/dtau - explicit rate| over interior samples.
  double max_rate_defect = 0.0;
};

EnergyReport monitor_energy(const OdeSystem& sys, const Trajectory& tr);

// tau,<state names>,H with 17 significant digits per value.
void write_csv(const Trajectory& tr, std::ostream& os);

}  // namespace taujet
