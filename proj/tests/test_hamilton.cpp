#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <random>

#include "doctest.h"
#include "taujet/hamilton.hpp"

using namespace taujet;

namespace {

struct Mech {
  Symbol tau = Symbol::line_coord("tau");
  Symbol y = Symbol::field("y", 0);
  JetSpace js{{}, tau, {y}};
  Symbol ydot = js.bump(y, MultiIndex::kTauDir);

  ExprPtr v() const { return sym(ydot); }
  ExprPtr q() const { return sym(y); }
  ExprPtr t() const { return sym(tau); }
};

// The four reference Lagrangians: free, oscillator, quartic, variable mass.
std::vector<ExprPtr> reference_lagrangians(const Mech& m) {
  return {
      pow(m.v(), 2) / 2,
      pow(m.v(), 2) / 2 - pow(m.q(), 2) / 2,
      pow(m.v(), 2) / 2 - pow(m.q(), 4) / 4,
      (integer(1) + pow(m.t(), 2)) * pow(m.v(), 2) / 2,
  };
}

}  // namespace

TEST_CASE("legendre transform of the reference lagrangians") {
  Mech m;
  HamiltonianSystem osc = legendre_transform(
      m.js, pow(m.v(), 2) / 2 - pow(m.q(), 2) / 2);
  const Symbol& p = osc.space.momenta()[0];
  CHECK(p.name == "p_y");
  CHECK(is_zero(osc.momentum_relations.at(p) - m.v()));
  CHECK(is_zero(osc.velocity_solution.at(m.ydot) - sym(p)));
  CHECK(is_zero(osc.hamiltonian -
                (pow(sym(p), 2) / 2 + pow(m.q(), 2) / 2)));

  HamiltonianSystem mass = legendre_transform(
      m.js, (integer(1) + pow(m.t(), 2)) * pow(m.v(), 2) / 2);
  const Symbol& pm = mass.space.momenta()[0];
  ExprPtr expect =
      pow(sym(pm), 2) / (2 * (integer(1) + pow(m.t(), 2)));
  CHECK(is_zero(mass.hamiltonian - expect));
}

TEST_CASE("legendre transform is an involution") {
  Mech m;
  for (const ExprPtr& L : reference_lagrangians(m)) {
    HamiltonianSystem sys = legendre_transform(m.js, L);
    const Symbol& p = sys.space.momenta()[0];
    ExprPtr back = sym(p) * m.v() - sys.hamiltonian;
    back = substitute(back, {{p, sys.momentum_relations.at(p)}});
    CHECK(is_zero(back - L));
  }
}

TEST_CASE("legendre transform matches its defining identity numerically") {
  Mech m;
  HamiltonianSystem sys = legendre_transform(
      m.js, (integer(1) + pow(m.t(), 2)) * pow(m.v(), 2) / 2);
  const Symbol& p = sys.space.momenta()[0];
  std::mt19937 rng(42);
  std::uniform_real_distribution<double> point(-2.0, 2.0);
  for (int i = 0; i < 10; ++i) {
    double tv = point(rng), pv = point(rng);
    NumericEnv env{{m.tau, tv}, {p, pv}};
    double vsol = eval_numeric(sys.velocity_solution.at(m.ydot), env);
    env[m.ydot] = vsol;
    env[m.y] = point(rng);
    double lhs = pv * vsol - eval_numeric(sys.lagrangian, env);
    double rhs = eval_numeric(sys.hamiltonian, env);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
  }
}

TEST_CASE("degenerate and unsupported lagrangians are rejected") {
  Mech m;
  CHECK_THROWS_AS(legendre_transform(m.js, m.v()), DegenerateLegendre);
  CHECK_THROWS_AS(legendre_transform(m.js, pow(m.q(), 2)),
                  DegenerateLegendre);
  CHECK_THROWS_AS(legendre_transform(m.js, pow(m.v(), 3)),
                  UnsupportedLagrangian);
  CHECK_THROWS_AS(legendre_transform(m.js, sin(m.v())),
                  UnsupportedLagrangian);

  // Singular velocity Hessian on two fields.
  Symbol y2 = Symbol::field("w", 1);
  JetSpace two({}, m.tau, {m.y, y2});
  ExprPtr both = sym(two.bump(m.y, MultiIndex::kTauDir)) +
                 sym(two.bump(y2, MultiIndex::kTauDir));
  CHECK_THROWS_AS(legendre_transform(two, pow(both, 2) / 2),
                  DegenerateLegendre);
}

TEST_CASE("hamilton equations of the oscillator") {
  Mech m;
  HamiltonianSystem sys = legendre_transform(
      m.js, pow(m.v(), 2) / 2 - pow(m.q(), 2) / 2);
  HamiltonEquations eqs = hamilton_equations(sys.space, sys.hamiltonian);
  const Symbol& p = sys.space.momenta()[0];
  REQUIRE(eqs.states.size() == 2);
  CHECK(is_zero(eqs.rhs.at(m.y) - sym(p)));
  CHECK(is_zero(eqs.rhs.at(p) + m.q()));
  CHECK(eqs.energy_rate->is_zero_literal());
}

TEST_CASE("explicit line dependence shows up only in the energy rate") {
  Mech m;
  Symbol p = Symbol::momentum("p_y", 0);
  JetSpace ph({}, m.tau, {m.y}, {p});
  ExprPtr H = pow(sym(p), 2) * (integer(1) + m.t()) / 2;
  HamiltonEquations eqs = hamilton_equations(ph, H);
  CHECK(is_zero(eqs.energy_rate - pow(sym(p), 2) / 2));
  CHECK(is_zero(eqs.rhs.at(m.y) - sym(p) * (integer(1) + m.t())));
  CHECK(eqs.rhs.at(p)->is_zero_literal());

  // tau-jets may not appear in a hamiltonian.
  CHECK_THROWS_AS(hamilton_equations(ph, pow(sym(m.ydot), 2)), Error);
}

TEST_CASE("the flow changes the energy only through its explicit rate") {
  Mech m;
  Symbol p = Symbol::momentum("p_y", 0);
  JetSpace ph({}, m.tau, {m.y}, {p});
  std::vector<ExprPtr> hams = {
      pow(sym(p), 2) / 2 + pow(m.q(), 2) / 2,
      pow(sym(p), 2) * (integer(1) + m.t()) / 2,
      pow(sym(p), 2) / 2 + m.q() * sym(p) + pow(m.q(), 4) / 4,
      sym(p) * m.q() * sin(m.t()),
  };
  for (const ExprPtr& H : hams) {
    HamiltonEquations eqs = hamilton_equations(ph, H);
    ExprPtr along = eqs.energy_rate;
    for (const Symbol& s : eqs.states)
      along = along + differentiate(H, s) * eqs.rhs.at(s);
    CHECK(is_zero(along - eqs.energy_rate));
  }
}

TEST_CASE("canonical forms satisfy the structure identities") {
  Symbol tau = Symbol::line_coord("tau");
  for (int nf = 1; nf <= 3; ++nf) {
    std::vector<Symbol> fields, momenta;
    for (int i = 0; i < nf; ++i) {
      fields.push_back(Symbol::field("y" + std::to_string(i), i));
      momenta.push_back(Symbol::momentum("p" + std::to_string(i), i));
    }
    for (int dim : {0, 1}) {
      std::vector<Symbol> base;
      if (dim == 1) base.push_back(Symbol::base_coord("x", 0));
      JetSpace js(base, tau, fields, momenta);
      DifferentialForm theta = canonical_theta(js);
      DifferentialForm omega = canonical_omega(js);
      CHECK(theta.exterior_derivative() == omega);
      CHECK(omega.exterior_derivative().is_zero());
    }
  }
}

TEST_CASE("hamilton defect vanishes exactly for the formal equations") {
  Symbol tau = Symbol::line_coord("tau");
  Symbol y = Symbol::field("y", 0);
  Symbol p = Symbol::momentum("p_y", 0);
  JetSpace ph({}, tau, {y}, {p});
  std::vector<ExprPtr> hams = {
      pow(sym(p), 2) / 2 + pow(sym(y), 2) / 2,
      pow(sym(p), 2) * (integer(1) + sym(tau)) / 2,
      sym(p) * sym(y),
      integer(0),
  };
  for (const ExprPtr& H : hams) {
    std::map<Symbol, ExprPtr> good{{y, differentiate(H, p)},
                                   {p, neg(differentiate(H, y))}};
    CHECK(hamilton_defect(ph, H, good).is_zero());
    std::map<Symbol, ExprPtr> off = good;
    off[p] = off.at(p) + 1;
    CHECK(!hamilton_defect(ph, H, off).is_zero());
  }
}

TEST_CASE("euler lagrange and hamilton descriptions agree") {
  Mech m;
  for (const ExprPtr& L : reference_lagrangians(m)) {
    HamiltonianSystem sys = legendre_transform(m.js, L);
    HamiltonEquations eqs = hamilton_equations(sys.space, sys.hamiltonian);
    for (const ExprPtr& defect : lagrange_hamilton_defect(sys, eqs))
      CHECK(is_zero(defect));
  }
}

TEST_CASE("the phase space lagrangian reproduces the equations") {
  Mech m;
  Symbol pb = Symbol::field("pb", 1);
  JetSpace ext({}, m.tau, {m.y, pb});
  Symbol ydot = ext.bump(m.y, MultiIndex::kTauDir);
  Symbol pdot = ext.bump(pb, MultiIndex::kTauDir);
  ExprPtr H = pow(sym(pb), 2) / 2 + pow(m.q(), 4) / 4;
  ExprPtr Lh = sym(pb) * sym(ydot) - H;
  auto el = euler_lagrange(ext, Lh, 2);
  REQUIRE(el.size() == 2);
  Bindings flow{{pdot, neg(differentiate(H, m.y))},
                {ydot, differentiate(H, pb)}};
  CHECK(is_zero(substitute(el[0], flow)));
  CHECK(is_zero(substitute(el[1], flow)));
}

TEST_CASE("mechanics gauge reduction transports along the section") {
  Symbol t = Symbol::base_coord("t", 0);
  Symbol tau = Symbol::line_coord("tau");
  Symbol y = Symbol::field("y", 0);
  Symbol p = Symbol::momentum("p_y", 0);
  JetSpace js({t}, tau, {y}, {p});
  ExprPtr H = pow(sym(p), 2) / 2 + pow(sym(y), 2) / 2;

  GaugeReduced red = restrict_to_gauge(js, H, sym(t));
  CHECK(red.mode == GaugeMode::Mechanics);
  CHECK(red.warnings.empty());
  CHECK(is_zero(red.velocity.at(js.bump(y, 0)) - sym(p)));
  CHECK(is_zero(red.velocity.at(js.bump(p, 0)) + sym(y)));

  // A frozen gauge stops the transport and the explicit line dependence.
  GaugeReduced frozen = restrict_to_gauge(
      js, H + sym(tau) * pow(sym(p), 2), integer(3));
  CHECK(frozen.velocity.at(js.bump(y, 0))->is_zero_literal());
  CHECK(!contains_symbol(frozen.reduced_hamiltonian, tau));
  CHECK(is_zero(frozen.reduced_hamiltonian -
                (H + 3 * pow(sym(p), 2))));
}

TEST_CASE("field gauge reduction recovers the de donder weyl equations") {
  Symbol x = Symbol::base_coord("x", 0);
  Symbol tau = Symbol::line_coord("tau");
  Symbol y = Symbol::field("y", 0);
  Symbol p = Symbol::momentum("p_y", 0);
  JetSpace js({x}, tau, {y}, {p});
  Symbol yx = js.bump(y, 0);
  ExprPtr H = pow(sym(p), 2) / 2 + pow(sym(yx), 2) / 2;

  GaugeReduced red = restrict_to_gauge(js, H, sym(x));
  CHECK(red.mode == GaugeMode::DeDonderWeyl);
  CHECK(is_zero(red.velocity.at(js.bump(y, MultiIndex::kTauDir)) - sym(p)));
  REQUIRE(red.multimomenta.size() == 1);
  const auto& [mv, mdef] = *red.multimomenta.begin();
  CHECK(is_zero(mdef + sym(yx)));
  REQUIRE(red.balance.size() == 1);
  // Balance: p_tau + D_x(multimomentum) = p_tau - y_xx on solutions.
  ExprPtr hand = sym(js.bump(p, MultiIndex::kTauDir)) -
                 sym(js.bump(yx, 0));
  CHECK(is_zero(substitute(red.balance[0], {{mv, mdef}}) - hand));
}

TEST_CASE("gauge reduction warns when the section ignores the connection") {
  Symbol t = Symbol::base_coord("t", 0);
  Symbol tau = Symbol::line_coord("tau");
  Symbol y = Symbol::field("y", 0);
  Symbol p = Symbol::momentum("p_y", 0);
  JetSpace js({t}, tau, {y}, {p});
  ExprPtr H = pow(sym(p), 2) / 2;

  LineConnection g{{integer(1)}};
  GaugeReduced ok = restrict_to_gauge(js, H, sym(t) + 2, &g);
  CHECK(ok.warnings.empty());
  GaugeReduced off = restrict_to_gauge(js, H, 2 * sym(t), &g);
  CHECK(off.warnings.size() == 1);
}
