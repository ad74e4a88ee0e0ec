#include "taujet/commands.hpp"

#include <cctype>
#include <cstdio>
#include <exception>
#include <fstream>
#include <optional>
#include <ostream>
#include <thread>
#include <utility>

#include "json.hpp"

namespace taujet {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

const char* method_name(Method m) {
  return m == Method::Rk4 ? "rk4" : "midpoint";
}

bool has_spatial_jets(const ExprPtr& e) {
  for (const Symbol& s : free_symbols(e))
    if (s.kind == SymbolKind::JetCoord && s.jet.order() > 0) return true;
  return false;
}

// The common derivation step: a Lagrangian model goes through the Legendre
// pass first, a Hamiltonian model is taken as given.
struct DerivedModel {
  std::optional<HamiltonianSystem> system;
  JetSpace space;  // chart with momenta
  ExprPtr hamiltonian;
  HamiltonEquations eqs;
};

DerivedModel derive_equations(const ModelFile& m) {
  if (m.lagrangian) {
    HamiltonianSystem sys = legendre_transform(m.space, m.lagrangian);
    HamiltonEquations eqs = hamilton_equations(sys.space, sys.hamiltonian);
    JetSpace space = sys.space;
    ExprPtr h = sys.hamiltonian;
    return DerivedModel{std::move(sys), std::move(space), std::move(h),
                        std::move(eqs)};
  }
  HamiltonEquations eqs = hamilton_equations(m.space, m.hamiltonian);
  return DerivedModel{std::nullopt, m.space, simplify(m.hamiltonian),
                      std::move(eqs)};
}

void write_equations(const DerivedModel& d, std::ostream& os) {
  MultiIndex t1(d.space.dimension());
  t1.tau = 1;
  for (const Symbol& s : d.eqs.states)
    os << "equation " << d.space.jet(s, t1).name << " = "
       << to_string(d.eqs.rhs.at(s)) << "\n";
  os << "energy_rate = " << to_string(d.eqs.energy_rate) << "\n";
}

struct RunResult {
  Trajectory tr;
  EnergyReport rep;
};

RunResult run_one(const DerivedModel& d, const RunOptions& opt,
                  const std::map<Symbol, double>& params,
                  const std::vector<double>& y0) {
  OdeSystem sys(d.space, d.eqs, params);
  IntegrateOptions io;
  io.tau_begin = opt.tau_begin;
  io.tau_end = opt.tau_end;
  io.step = opt.step;
  io.method = opt.method;
  Trajectory tr = integrate(sys, y0, io);
  EnergyReport rep = monitor_energy(sys, tr);
  return {std::move(tr), rep};
}

std::vector<double> initial_state(const DerivedModel& d,
                                  const std::map<std::string, double>& init) {
  std::vector<double> y0(d.eqs.states.size(), 0.0);
  for (const auto& [name, val] : init) {
    bool found = false;
    for (std::size_t i = 0; i < d.eqs.states.size(); ++i)
      if (d.eqs.states[i].name == name) {
        y0[i] = val;
        found = true;
        break;
      }
    if (!found) throw UsageError("--init: unknown state '" + name + "'");
  }
  return y0;
}

void write_payload(std::ostream& os, const std::string& model_name,
                   const RunOptions& opt, const Trajectory& tr,
                   const EnergyReport& rep) {
  if (opt.format == "json") {
    nlohmann::json j;
    j["version"] = kVersion;
    j["model"] = model_name;
    j["method"] = method_name(opt.method);
    j["step"] = opt.step;
    std::vector<std::string> names;
    names.reserve(tr.states.size());
    for (const Symbol& s : tr.states) names.push_back(s.name);
    j["states"] = names;
    j["tau"] = tr.taus;
    j["samples"] = tr.samples;
    j["energy"] = tr.energies;
    j["energy_report"] = {{"initial", rep.initial},
                          {"max_abs_drift", rep.max_abs_drift},
                          {"max_rel_drift", rep.max_rel_drift},
                          {"max_rate_defect", rep.max_rate_defect}};
    os << j.dump(2) << "\n";
    return;
  }
  os << kVersionHeader << "\n";
  os << "# model " << model_name << " method " << method_name(opt.method)
     << " step " << fmt(opt.step) << "\n";
  os << "# energy_initial " << fmt(rep.initial) << " max_abs_drift "
     << fmt(rep.max_abs_drift) << " max_rel_drift " << fmt(rep.max_rel_drift)
     << " max_rate_defect " << fmt(rep.max_rate_defect) << "\n";
  write_csv(tr, os);
}

void write_payload_file(const std::string& path, const std::string& model_name,
                        const RunOptions& opt, const Trajectory& tr,
                        const EnergyReport& rep) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path);
  write_payload(f, model_name, opt, tr, rep);
}

std::string sweep_path(const std::string& out, const std::string& param,
                       const std::string& token) {
  std::string tag = param + "_" + token;
  for (char& c : tag)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '.' && c != '-' &&
        c != '+')
      c = '_';
  const std::size_t dot = out.rfind('.');
  const std::size_t slash = out.find_last_of("/\\");
  if (dot == std::string::npos ||
      (slash != std::string::npos && dot < slash))
    return out + "_" + tag;
  return out.substr(0, dot) + "_" + tag + out.substr(dot);
}

void check_format(const RunOptions& opt) {
  if (opt.format != "csv" && opt.format != "json")
    throw UsageError("--format must be csv or json");
}

}  // namespace

int cmd_derive(const ModelFile& m, std::ostream& os) {
  os << kVersionHeader << "\n";
  os << "model " << m.name << "\n";
  const DerivedModel d = derive_equations(m);
  if (m.lagrangian) {
    os << "lagrangian " << m.density_name << " = "
       << to_string(simplify(m.lagrangian)) << "\n";
    for (const Symbol& p : d.space.momenta())
      os << "momentum " << p.name << " = "
         << to_string(d.system->momentum_relations.at(p)) << "\n";
    os << "hamiltonian H = " << to_string(d.hamiltonian) << "\n";
  } else {
    os << "hamiltonian " << m.density_name << " = " << to_string(d.hamiltonian)
       << "\n";
  }
  write_equations(d, os);
  if (m.gauge) {
    const LineConnection* gamma = nullptr;
    if (!m.line_connections.empty())
      gamma = &m.line_connections.begin()->second;
    const GaugeReduced g =
        restrict_to_gauge(d.space, d.hamiltonian, m.gauge, gamma);
    os << "gauge " << m.gauge_name << " = " << to_string(m.gauge) << "\n";
    os << "gauge_mode "
       << (g.mode == GaugeMode::Mechanics ? "mechanics" : "de-donder-weyl")
       << "\n";
    os << "reduced_hamiltonian = " << to_string(g.reduced_hamiltonian) << "\n";
    for (const auto& [s, e] : g.velocity)
      os << "reduced_equation " << s.name << " = " << to_string(e) << "\n";
    for (const auto& [s, e] : g.multimomenta)
      os << "multimomentum " << s.name << " = " << to_string(e) << "\n";
    for (const ExprPtr& b : g.balance)
      os << "balance " << to_string(b) << " = 0\n";
    for (const std::string& w : g.warnings) os << "warning " << w << "\n";
  }
  return 0;
}

int cmd_simulate(const ModelFile& m, const RunOptions& opt, std::ostream& os) {
  check_format(opt);
  const DerivedModel d = derive_equations(m);
  const std::map<Symbol, double> params = parameter_values(m);
  const std::vector<double> y0 = initial_state(d, opt.initials);

  if (!opt.sweep) {
    const RunResult r = run_one(d, opt, params, y0);
    if (opt.out.empty()) {
      write_payload(os, m.name, opt, r.tr, r.rep);
    } else {
      write_payload_file(opt.out, m.name, opt, r.tr, r.rep);
      os << "wrote " << opt.out << " max_rel_drift "
         << fmt(r.rep.max_rel_drift) << "\n";
    }
    return 0;
  }

  const SweepSpec& sw = *opt.sweep;
  if (opt.out.empty()) throw UsageError("--sweep needs --out");
  if (sw.values.empty()) throw UsageError("--sweep has no values");
  const Symbol ps = Symbol::parameter(sw.param);
  if (!params.count(ps))
    throw UsageError("--sweep: unknown parameter '" + sw.param + "'");

  struct Slot {
    std::string path;
    EnergyReport rep;
    std::exception_ptr err;
  };
  std::vector<Slot> slots(sw.values.size());
  std::vector<std::thread> workers;
  workers.reserve(sw.values.size());
  for (std::size_t i = 0; i < sw.values.size(); ++i) {
    workers.emplace_back([&, i]() {
      try {
        std::map<Symbol, double> p2 = params;
        p2[ps] = sw.values[i];
        const RunResult r = run_one(d, opt, p2, y0);
        const std::string path = sweep_path(opt.out, sw.param, sw.tokens[i]);
        write_payload_file(path, m.name, opt, r.tr, r.rep);
        slots[i].path = path;
        slots[i].rep = r.rep;
      } catch (...) {
        slots[i].err = std::current_exception();
      }
    });
  }
  for (std::thread& w : workers) w.join();
  for (const Slot& s : slots)
    if (s.err) std::rethrow_exception(s.err);
  for (std::size_t i = 0; i < slots.size(); ++i)
    os << "sweep " << sw.param << "=" << sw.tokens[i] << " wrote "
       << slots[i].path << " max_rel_drift " << fmt(slots[i].rep.max_rel_drift)
       << "\n";
  return 0;
}

int cmd_check(const ModelFile& m, std::ostream& os) {
  os << kVersionHeader << "\n";
  os << "model " << m.name << "\n";
  bool ok = true;
  const auto report = [&](const std::string& name, bool pass,
                          const std::string& note = "") {
    os << "check " << name << ": " << (pass ? "ok" : "FAIL");
    if (!note.empty()) os << " (" << note << ")";
    os << "\n";
    if (!pass) ok = false;
  };

  {
    bool pass = false;
    std::string note;
    try {
      pass = models_equivalent(m, parse_model(print_model(m)));
      if (!pass) note = "reprinted model differs";
    } catch (const Error& e) {
      note = e.what();
    }
    report("roundtrip", pass, note);
  }

  std::optional<DerivedModel> d;
  try {
    d = derive_equations(m);
    report("derive", true);
  } catch (const Error& e) {
    report("derive", false, e.what());
    os << "result FAIL\n";
    return 3;
  }

  const bool field_theory = has_spatial_jets(d->hamiltonian);
  if (field_theory) {
    os << "note hamilton-form identity skipped (spatial jets present)\n";
  } else {
    report("hamilton-form-identity",
           hamilton_defect(d->space, d->hamiltonian, d->eqs.rhs).is_zero());
  }

  if (m.lagrangian && !field_theory && !has_spatial_jets(m.lagrangian)) {
    bool pass = true;
    for (const ExprPtr& e : lagrange_hamilton_defect(*d->system, d->eqs))
      if (!e->is_zero_literal()) pass = false;
    report("lagrange-hamilton-agreement", pass);
  } else if (m.lagrangian) {
    os << "note lagrange-hamilton agreement skipped (spatial jets present)\n";
  }

  os << "note energy_rate = " << to_string(d->eqs.energy_rate) << "\n";

  if (m.gauge)
    for (const auto& [nm, lc] : m.line_connections)
      os << "note gauge "
         << (is_integral_section(lc, m.gauge, m.space) ? "is" : "is not")
         << " an integral section of connection " << nm << "\n";

  os << "result " << (ok ? "ok" : "FAIL") << "\n";
  return ok ? 0 : 3;
}

int cmd_gravity(const std::string& ansatz, const std::vector<double>& scale0,
                const std::vector<double>& rate0, const RunOptions& opt,
                std::ostream& os) {
  check_format(opt);
  GravityModel g = [&] {
    if (ansatz == "frw") return frw_model();
    if (ansatz == "bianchi1") return bianchi1_model();
    throw UsageError("unknown ansatz '" + ansatz +
                     "' (expected frw or bianchi1)");
  }();

  os << kVersionHeader << "\n";
  os << "model " << ansatz << "\n";
  os << "scalar_curvature = " << to_string(g.geometry.scalar) << "\n";
  os << "density = " << to_string(g.lagrangian_full) << "\n";
  os << "boundary = " << to_string(g.boundary) << "\n";
  os << "reduced_lagrangian = " << to_string(g.lagrangian) << "\n";
  for (const Symbol& p : g.system.space.momenta())
    os << "momentum " << p.name << " = "
       << to_string(g.system.momentum_relations.at(p)) << "\n";
  os << "hamiltonian H = " << to_string(g.system.hamiltonian) << "\n";
  const DerivedModel d{std::nullopt, g.system.space, g.system.hamiltonian,
                       g.equations};
  write_equations(d, os);

  const std::size_t nf = g.space.fields().size();
  if (scale0.size() != nf)
    throw UsageError("--a0 needs " + std::to_string(nf) + " value(s)");
  if (rate0.size() != nf)
    throw UsageError("--adot0 needs " + std::to_string(nf) + " value(s)");

  NumericEnv env;
  env[g.space.line()] = opt.tau_begin;
  MultiIndex t1(g.space.dimension());
  t1.tau = 1;
  for (std::size_t i = 0; i < nf; ++i) {
    env[g.space.fields()[i]] = scale0[i];
    env[g.space.jet(g.space.fields()[i], t1)] = rate0[i];
  }
  std::vector<double> y0;
  y0.reserve(2 * nf);
  for (std::size_t i = 0; i < nf; ++i) y0.push_back(scale0[i]);
  for (std::size_t i = 0; i < nf; ++i)
    y0.push_back(eval_numeric(
        g.system.momentum_relations.at(g.system.space.momenta()[i]), env));

  const RunResult r = run_one(d, opt, {}, y0);
  os << "energy_initial " << fmt(r.rep.initial) << "\n";
  os << "max_abs_drift " << fmt(r.rep.max_abs_drift) << "\n";
  os << "max_rel_drift " << fmt(r.rep.max_rel_drift) << "\n";
  if (opt.out.empty()) {
    write_payload(os, ansatz, opt, r.tr, r.rep);
  } else {
    write_payload_file(opt.out, ansatz, opt, r.tr, r.rep);
    os << "wrote " << opt.out << "\n";
  }
  return 0;
}

}  // namespace taujet
