#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "taujet/commands.hpp"

namespace {

using taujet::RunOptions;
using taujet::UsageError;

void parse_tau_range(const std::string& s, RunOptions& opt) {
  const std::size_t colon = s.find(':');
  if (colon == std::string::npos)
    throw UsageError("--tau expects a range A:B");
  try {
    opt.tau_begin = std::stod(s.substr(0, colon));
    opt.tau_end = std::stod(s.substr(colon + 1));
  } catch (const std::exception&) {
    throw UsageError("--tau expects numeric bounds A:B");
  }
  if (!(opt.tau_end > opt.tau_begin))
    throw UsageError("--tau range must be increasing");
}

taujet::Method parse_method(const std::string& s) {
  if (s == "rk4") return taujet::Method::Rk4;
  if (s == "midpoint") return taujet::Method::ImplicitMidpoint;
  throw UsageError("--method must be rk4 or midpoint");
}

std::pair<std::string, double> parse_assignment(const std::string& s,
                                                const char* flag) {
  const std::size_t eq = s.find('=');
  if (eq == std::string::npos || eq == 0)
    throw UsageError(std::string(flag) + " expects NAME=VALUE");
  try {
    return {s.substr(0, eq), std::stod(s.substr(eq + 1))};
  } catch (const std::exception&) {
    throw UsageError(std::string(flag) + ": bad numeric value in '" + s + "'");
  }
}

taujet::SweepSpec parse_sweep(const std::string& s) {
  const std::size_t eq = s.find('=');
  if (eq == std::string::npos || eq == 0)
    throw UsageError("--sweep expects NAME=v1,v2,...");
  taujet::SweepSpec sw;
  sw.param = s.substr(0, eq);
  std::string rest = s.substr(eq + 1);
  std::size_t start = 0;
  while (start <= rest.size()) {
    std::size_t comma = rest.find(',', start);
    if (comma == std::string::npos) comma = rest.size();
    const std::string tok = rest.substr(start, comma - start);
    if (tok.empty()) throw UsageError("--sweep: empty value in '" + s + "'");
    try {
      sw.values.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw UsageError("--sweep: bad numeric value '" + tok + "'");
    }
    sw.tokens.push_back(tok);
    start = comma + 1;
    if (comma == rest.size()) break;
  }
  return sw;
}

template <typename Fn>
int with_output(const std::string& out, Fn fn) {
  if (out.empty()) return fn(std::cout);
  std::ofstream f(out, std::ios::binary);
  if (!f) throw taujet::Error("cannot write " + out);
  return fn(f);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"jet-chart toolkit: line-bundle Hamiltonian mechanics for "
               "field models"};
  app.set_version_flag("--version", std::string("taujet ") + taujet::kVersion);
  app.require_subcommand(1);

  std::string model_path;
  std::string tau_range;
  std::string method = "rk4";
  std::string out;
  std::string format = "csv";
  double step = 1e-3;
  std::vector<std::string> inits;
  std::string sweep;
  std::string ansatz;
  std::vector<double> a0;
  std::vector<double> adot0;

  CLI::App* derive = app.add_subcommand(
      "derive", "print momenta, Hamiltonian and evolution equations");
  derive->add_option("model", model_path, "model file")->required();
  derive->add_option("--out", out, "write the report to a file");

  CLI::App* simulate =
      app.add_subcommand("simulate", "integrate the evolution equations");
  simulate->add_option("model", model_path, "model file")->required();
  simulate->add_option("--tau", tau_range, "integration range A:B");
  simulate->add_option("--step", step, "step size");
  simulate->add_option("--method", method, "rk4 or midpoint");
  simulate->add_option("--out", out, "output file (default: stdout)");
  simulate->add_option("--format", format, "csv or json");
  simulate->add_option("--init", inits, "initial value NAME=VALUE");
  simulate->add_option("--sweep", sweep,
                       "run NAME=v1,v2,... concurrently (needs --out)");

  CLI::App* check =
      app.add_subcommand("check", "run structural and symbolic self-checks");
  check->add_option("model", model_path, "model file")->required();
  check->add_option("--out", out, "write the report to a file");

  CLI::App* gravity = app.add_subcommand(
      "gravity", "built-in cosmology pipeline (frw or bianchi1)");
  gravity->add_option("ansatz", ansatz, "frw or bianchi1")->required();
  gravity->add_option("--a0", a0, "initial scale factor(s)")
      ->delimiter(',');
  gravity->add_option("--adot0", adot0, "initial expansion rate(s)")
      ->delimiter(',');
  gravity->add_option("--tau", tau_range, "integration range A:B");
  gravity->add_option("--step", step, "step size");
  gravity->add_option("--method", method, "rk4 or midpoint");
  gravity->add_option("--out", out, "trajectory output file");
  gravity->add_option("--format", format, "csv or json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    RunOptions opt;
    if (!tau_range.empty()) parse_tau_range(tau_range, opt);
    opt.step = step;
    opt.method = parse_method(method);
    opt.out = out;
    opt.format = format;
    for (const std::string& s : inits)
      opt.initials.insert(parse_assignment(s, "--init"));
    if (!sweep.empty()) opt.sweep = parse_sweep(sweep);

    if (derive->parsed()) {
      const taujet::ModelFile m = taujet::load_model(model_path);
      return with_output(out, [&](std::ostream& os) {
        return taujet::cmd_derive(m, os);
      });
    }
    if (simulate->parsed()) {
      const taujet::ModelFile m = taujet::load_model(model_path);
      return taujet::cmd_simulate(m, opt, std::cout);
    }
    if (check->parsed()) {
      const taujet::ModelFile m = taujet::load_model(model_path);
      return with_output(out, [&](std::ostream& os) {
        return taujet::cmd_check(m, os);
      });
    }
    if (gravity->parsed()) {
      const std::size_t nf = ansatz == "bianchi1" ? 3 : 1;
      if (a0.empty()) a0.assign(nf, 1.0);
      if (adot0.empty()) adot0.assign(nf, 1.0);
      return taujet::cmd_gravity(ansatz, a0, adot0, opt, std::cout);
    }
    throw UsageError("no subcommand selected");
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const taujet::ParseError& e) {
    std::cerr << "parse error at " << e.line << ":" << e.column << ": "
              << e.what() << "\n";
    return 2;
  } catch (const taujet::NonFiniteState& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 4;
  } catch (const taujet::FixedPointDivergence& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 4;
  } catch (const taujet::DomainError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 4;
  } catch (const taujet::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
