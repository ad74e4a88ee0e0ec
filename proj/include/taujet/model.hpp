#pragma once

// Text format for models: chart declarations, parameter bindings, exactly
// one density (lagrangian or hamiltonian), an optional gauge section and
// optional connection blocks. Line-oriented: every expression runs to the
// end of its line.

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "taujet/bundles.hpp"
#include "taujet/jetcalc.hpp"

namespace taujet {

struct UndeclaredSymbol : ParseError {
  using ParseError::ParseError;
};
struct DuplicateDeclaration : ParseError {
  using ParseError::ParseError;
};

struct ParameterDecl {
  Symbol symbol;
  Rational value;
  std::string spelling;  // original token, reproduced by print_model
};

struct ModelFile {
  std::string name;
  // Chart from the declarations; momenta p_<field> are always present.
  JetSpace space;
  std::vector<ParameterDecl> parameters;  // declaration order
  std::string density_name;
  ExprPtr lagrangian;   // exactly one of these two is non-null
  ExprPtr hamiltonian;
  std::string gauge_name;  // empty when no gauge block
  ExprPtr gauge;
  std::map<std::string, LineConnection> line_connections;
  std::map<std::string, FieldConnection> field_connections;
};

// Throws ParseError / UndeclaredSymbol / DuplicateDeclaration with 1-based
// line and column positions into the text.
ModelFile parse_model(std::string_view text);

// Reads and parses a file; wraps read failures in Error.
ModelFile load_model(const std::string& path);

// A model text that parses back to the same model (same charts, same
// parameter values, same canonical expressions).
std::string print_model(const ModelFile& m);

std::map<Symbol, double> parameter_values(const ModelFile& m);

// Same charts, same parameter values, and componentwise symbolically equal
// expressions (spellings and formatting may differ).
bool models_equivalent(const ModelFile& a, const ModelFile& b);

}  // namespace taujet
