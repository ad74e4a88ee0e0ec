#include "taujet/evolve.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

namespace taujet {

namespace {

using boost::multiprecision::denominator;
using boost::multiprecision::numerator;

bool all_finite(const std::vector<double>& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace

// ---------------------------------------------------------------------------
// Compiled scalars
// ---------------------------------------------------------------------------

int CompiledScalar::compile(const ExprPtr& e,
                            const std::map<Symbol, int>& slots) {
  auto emit = [this](Op op) {
    ops_.push_back(op);
    return static_cast<int>(ops_.size()) - 1;
  };
  switch (e->kind()) {
    case NodeKind::Integer:
    case NodeKind::Rational:
      return emit({OpCode::Const, 0, 0, e->value().convert_to<double>()});
    case NodeKind::Sym: {
      auto it = slots.find(e->symbol());
      if (it == slots.end())
        throw UnboundSymbol("unbound symbol " + e->symbol().name);
      return emit({OpCode::Var, it->second, 0, 0});
    }
    case NodeKind::Sum: {
      int acc = compile(e->children().front(), slots);
      for (std::size_t i = 1; i < e->children().size(); ++i) {
        int rhs = compile(e->children()[i], slots);
        acc = emit({OpCode::Add, acc, rhs, 0});
      }
      return acc;
    }
    case NodeKind::Product: {
      int acc = compile(e->children().front(), slots);
      for (std::size_t i = 1; i < e->children().size(); ++i) {
        int rhs = compile(e->children()[i], slots);
        acc = emit({OpCode::Mul, acc, rhs, 0});
      }
      return acc;
    }
    case NodeKind::Power: {
      int base = compile(e->base(), slots);
      const Rational& q = e->exponent();
      if (denominator(q) == 1 && numerator(q) >= -64 && numerator(q) <= 64)
        return emit(
            {OpCode::PowInt, base, numerator(q).convert_to<int>(), 0});
      return emit({OpCode::PowReal, base, denominator(q) == 1 ? 1 : 0,
                   q.convert_to<double>()});
    }
    case NodeKind::Apply: {
      int a = compile(e->arg(), slots);
      switch (e->builtin()) {
        case Builtin::Sin: return emit({OpCode::Sin, a, 0, 0});
        case Builtin::Cos: return emit({OpCode::Cos, a, 0, 0});
        case Builtin::Exp: return emit({OpCode::Exp, a, 0, 0});
        case Builtin::Ln: return emit({OpCode::Ln, a, 0, 0});
      }
    }
  }
  throw Error("unreachable expression kind");
}

CompiledScalar::CompiledScalar(const ExprPtr& e,
                               const std::map<Symbol, int>& slots) {
  if (!e) throw Error("null expression");
  compile(e, slots);
}

double CompiledScalar::operator()(const std::vector<double>& vars) const {
  if (ops_.empty()) throw Error("empty tape");
  std::vector<double> regs(ops_.size());
  for (std::size_t i = 0; i < ops_.size(); ++i) {
    const Op& op = ops_[i];
    double v = 0;
    switch (op.code) {
      case OpCode::Const:
        v = op.k;
        break;
      case OpCode::Var:
        v = vars[static_cast<std::size_t>(op.a)];
        break;
      case OpCode::Add:
        v = regs[static_cast<std::size_t>(op.a)] +
            regs[static_cast<std::size_t>(op.b)];
        break;
      case OpCode::Mul:
        v = regs[static_cast<std::size_t>(op.a)] *
            regs[static_cast<std::size_t>(op.b)];
        break;
      case OpCode::PowInt: {
        double b = regs[static_cast<std::size_t>(op.a)];
        int k = op.b;
        if (b == 0 && k < 0) throw DomainError("division by zero");
        bool inv = k < 0;
        if (inv) k = -k;
        double r = 1, base = b;
        while (k > 0) {
          if (k & 1) r *= base;
          base *= base;
          k >>= 1;
        }
        v = inv ? 1.0 / r : r;
        break;
      }
      case OpCode::PowReal: {
        double b = regs[static_cast<std::size_t>(op.a)];
        if (b == 0 && op.k < 0) throw DomainError("division by zero");
        if (b < 0 && op.b == 0)
          throw DomainError("fractional power of a negative value");
        v = std::pow(b, op.k);
        break;
      }
      case OpCode::Sin:
        v = std::sin(regs[static_cast<std::size_t>(op.a)]);
        break;
      case OpCode::Cos:
        v = std::cos(regs[static_cast<std::size_t>(op.a)]);
        break;
      case OpCode::Exp:
        v = std::exp(regs[static_cast<std::size_t>(op.a)]);
        break;
      case OpCode::Ln: {
        double a = regs[static_cast<std::size_t>(op.a)];
        if (a <= 0) throw DomainError("ln of a non-positive value");
        v = std::log(a);
        break;
      }
    }
    regs[i] = v;
  }
  return regs.back();
}

// ---------------------------------------------------------------------------
// OdeSystem
// ---------------------------------------------------------------------------

OdeSystem::OdeSystem(std::vector<Symbol> states,
                     const std::map<Symbol, ExprPtr>& rhs, Symbol time,
                     ExprPtr energy, ExprPtr energy_rate,
                     const std::map<Symbol, double>& parameters)
    : states_(std::move(states)) {
  std::map<Symbol, int> slots;
  slots[time] = 0;
  int next = 1;
  for (const Symbol& s : states_) slots[s] = next++;
  for (const auto& [p, v] : parameters) {
    slots[p] = next++;
    param_values_.push_back(v);
  }
  auto check_expr = [](const ExprPtr& e) {
    for (const Symbol& s : free_symbols(e))
      if (s.kind == SymbolKind::JetCoord)
        throw Error("right-hand side still contains jet coordinate '" +
                    s.name + "'");
  };
  rhs_.reserve(states_.size());
  for (const Symbol& s : states_) {
    auto it = rhs.find(s);
    if (it == rhs.end())
      throw Error("missing right-hand side for state '" + s.name + "'");
    check_expr(it->second);
    rhs_.emplace_back(it->second, slots);
  }
  check_expr(energy);
  check_expr(energy_rate);
  energy_ = CompiledScalar(energy, slots);
  energy_rate_ = CompiledScalar(energy_rate, slots);
  buffer_.resize(static_cast<std::size_t>(next));
}

OdeSystem::OdeSystem(const JetSpace& js, const HamiltonEquations& eqs,
                     const std::map<Symbol, double>& parameters)
    : OdeSystem(eqs.states, eqs.rhs, js.line(), eqs.energy, eqs.energy_rate,
                parameters) {}

void OdeSystem::fill(double tau, const std::vector<double>& y) const {
  if (y.size() != states_.size()) throw Error("state size mismatch");
  buffer_[0] = tau;
  for (std::size_t i = 0; i < y.size(); ++i) buffer_[1 + i] = y[i];
  for (std::size_t i = 0; i < param_values_.size(); ++i)
    buffer_[1 + y.size() + i] = param_values_[i];
}

void OdeSystem::eval(double tau, const std::vector<double>& y,
                     std::vector<double>& dy) const {
  fill(tau, y);
  dy.resize(states_.size());
  for (std::size_t i = 0; i < rhs_.size(); ++i) dy[i] = rhs_[i](buffer_);
}

double OdeSystem::energy(double tau, const std::vector<double>& y) const {
  fill(tau, y);
  return energy_(buffer_);
}

double OdeSystem::energy_rate(double tau, const std::vector<double>& y) const {
  fill(tau, y);
  return energy_rate_(buffer_);
}

// ---------------------------------------------------------------------------
// Integration
// ---------------------------------------------------------------------------

namespace {

void rk4_step(const OdeSystem& sys, double tau, double h,
              std::vector<double>& y) {
  const std::size_t n = y.size();
  std::vector<double> k1, k2, k3, k4, tmp(n);
  sys.eval(tau, y, k1);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
  sys.eval(tau + 0.5 * h, tmp, k2);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
  sys.eval(tau + 0.5 * h, tmp, k3);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * k3[i];
  sys.eval(tau + h, tmp, k4);
  for (std::size_t i = 0; i < n; ++i)
    y[i] += h / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
}

void midpoint_step(const OdeSystem& sys, double tau, double h,
                   std::vector<double>& y, double tol, int max_iters) {
  const std::size_t n = y.size();
  const double tau_mid = tau + 0.5 * h;
  std::vector<double> f(n), m(n), prev(n);
  sys.eval(tau, y, f);
  for (std::size_t i = 0; i < n; ++i) m[i] = y[i] + 0.5 * h * f[i];
  for (int iter = 0;; ++iter) {
    if (iter >= max_iters)
      throw FixedPointDivergence(
          "implicit midpoint iteration did not converge; reduce the step");
    prev = m;
    sys.eval(tau_mid, m, f);
    double diff = 0, scale = 1;
    for (std::size_t i = 0; i < n; ++i) {
      m[i] = y[i] + 0.5 * h * f[i];
      diff = std::max(diff, std::abs(m[i] - prev[i]));
      scale = std::max(scale, std::abs(m[i]));
    }
    if (!std::isfinite(diff))
      throw NonFiniteState("state left the representable range");
    if (diff <= tol * scale) break;
  }
  for (std::size_t i = 0; i < n; ++i) y[i] = 2 * m[i] - y[i];
}

}  // namespace

Trajectory integrate(const OdeSystem& sys, const std::vector<double>& y0,
                     const IntegrateOptions& opt) {
  if (static_cast<int>(y0.size()) != sys.size())
    throw Error("initial state size mismatch");
  if (!(opt.step > 0)) throw Error("step must be positive");
  if (!(opt.tau_end > opt.tau_begin))
    throw Error("tau range must be increasing");
  if (opt.record_every < 1) throw Error("record_every must be at least 1");

  const double span = opt.tau_end - opt.tau_begin;
  long long steps = std::llround(span / opt.step);
  if (steps < 1) steps = 1;
  const double h = span / static_cast<double>(steps);

  Trajectory tr;
  tr.states = sys.states();
  std::vector<double> y = y0;
  if (!all_finite(y)) throw NonFiniteState("non-finite initial state");

  auto record = [&](long long k) {
    double tau = opt.tau_begin + h * static_cast<double>(k);
    if (k == steps) tau = opt.tau_end;
    tr.taus.push_back(tau);
    tr.samples.push_back(y);
    tr.energies.push_back(sys.energy(tau, y));
  };
  record(0);
  for (long long k = 0; k < steps; ++k) {
    double tau = opt.tau_begin + h * static_cast<double>(k);
    if (opt.method == Method::Rk4)
      rk4_step(sys, tau, h, y);
    else
      midpoint_step(sys, tau, h, y, opt.fixed_point_tol,
                    opt.fixed_point_max_iters);
    if (!all_finite(y))
      throw NonFiniteState("state left the representable range at tau = " +
                           std::to_string(tau + h));
    if ((k + 1) % opt.record_every == 0 || k + 1 == steps) record(k + 1);
  }
  return tr;
}

EnergyReport monitor_energy(const OdeSystem& sys, const Trajectory& tr) {
  EnergyReport rep;
  if (tr.energies.empty()) return rep;
  rep.initial = tr.energies.front();
  const double scale = std::max(1.0, std::abs(rep.initial));
  for (double e : tr.energies) {
    double drift = std::abs(e - rep.initial);
    rep.max_abs_drift = std::max(rep.max_abs_drift, drift);
  }
  rep.max_rel_drift = rep.max_abs_drift / scale;
  for (std::size_t k = 1; k + 1 < tr.taus.size(); ++k) {
    double dt = tr.taus[k + 1] - tr.taus[k - 1];
    if (dt == 0) continue;
    double fd = (tr.energies[k + 1] - tr.energies[k - 1]) / dt;
    double rate = sys.energy_rate(tr.taus[k], tr.samples[k]);
    rep.max_rate_defect = std::max(rep.max_rate_defect, std::abs(fd - rate));
  }
  return rep;
}

void write_csv(const Trajectory& tr, std::ostream& os) {
  os << "tau";
  for (const Symbol& s : tr.states) os << "," << s.name;
  os << ",H\n";
  char buf[64];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << buf;
  };
  for (std::size_t k = 0; k < tr.taus.size(); ++k) {
    put(tr.taus[k]);
    for (double v : tr.samples[k]) {
      os << ",";
      put(v);
    }
    os << ",";
    put(tr.energies[k]);
    os << "\n";
  }
}

}  // namespace taujet
