#pragma once

// Command-level operations behind the CLI: equation derivation reports,
// simulation runs (with parameter sweeps), model self-checks and the
// built-in gravity pipelines.

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "taujet/evolve.hpp"
#include "taujet/gravity.hpp"
#include "taujet/model.hpp"

namespace taujet {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kVersionHeader = "# taujet 0.1.0";

// Bad invocation semantics that the flag parser cannot catch (exit code 1).
struct UsageError : Error {
  using Error::Error;
};

struct SweepSpec {
  std::string param;
  std::vector<double> values;
  std::vector<std::string> tokens;  // original spellings, used in filenames
};

struct RunOptions {
  double tau_begin = 0.0;
  double tau_end = 1.0;
  double step = 1e-3;
  Method method = Method::Rk4;
  std::string out;           // empty: write to the given stream
  std::string format = "csv";  // csv | json
  std::map<std::string, double> initials;  // state name -> initial value
  std::optional<SweepSpec> sweep;
};

// Momenta, Hamiltonian, evolution equations, energy rate and (when a gauge
// is declared) the reduced equations, as a plain-text report.
int cmd_derive(const ModelFile& m, std::ostream& os);

// Integrates the model's equations and writes the trajectory with a drift
// report. A sweep runs its values concurrently into separate files derived
// from --out and prints one summary line per run.
int cmd_simulate(const ModelFile& m, const RunOptions& opt, std::ostream& os);

// Structural and symbolic self-checks; exit 0 only if everything passes.
int cmd_check(const ModelFile& m, std::ostream& os);

// Built-in cosmology pipelines ("frw", "bianchi1"): derivation report plus a
// simulated trajectory from the given scale factors and expansion rates.
int cmd_gravity(const std::string& ansatz, const std::vector<double>& scale0,
                const std::vector<double>& rate0, const RunOptions& opt,
                std::ostream& os);

}  // namespace taujet
