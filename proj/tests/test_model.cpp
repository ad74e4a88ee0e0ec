#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "taujet/commands.hpp"

using namespace taujet;
namespace fs = std::filesystem;

namespace {

const fs::path kTestDir = TAUJET_TEST_DIR;

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

std::string drop_first_line(const std::string& s) {
  auto nl = s.find('\n');
  return nl == std::string::npos ? std::string() : s.substr(nl + 1);
}

ModelFile corpus(const std::string& name) {
  return load_model((kTestDir / "models" / name).string());
}

}  // namespace

TEST_CASE("a minimal oscillator model parses") {
  ModelFile m = corpus("oscillator.model");
  CHECK(m.name == "oscillator");
  CHECK(m.space.dimension() == 0);
  REQUIRE(m.space.fields().size() == 1);
  CHECK(m.space.fields()[0].name == "y");
  REQUIRE(m.space.momenta().size() == 1);
  CHECK(m.space.momenta()[0].name == "p_y");
  CHECK(m.density_name == "L");
  CHECK(m.lagrangian != nullptr);
  CHECK(m.hamiltonian == nullptr);
  CHECK(m.parameters.empty());
  CHECK(m.gauge == nullptr);
}

TEST_CASE("the full grammar file carries every block") {
  ModelFile m = corpus("full.model");
  CHECK(m.space.dimension() == 2);
  CHECK(m.space.fields().size() == 2);
  REQUIRE(m.parameters.size() == 2);
  CHECK(m.parameters[0].symbol.name == "k");
  CHECK(m.parameters[0].value == Rational(3, 4));
  CHECK(m.parameters[1].value == Rational(2));
  CHECK(m.gauge_name == "h");
  CHECK(m.gauge != nullptr);

  REQUIRE(m.line_connections.count("G") == 1);
  const LineConnection& g = m.line_connections.at("G");
  REQUIRE(g.gamma.size() == 2);
  CHECK(is_zero(g.gamma[0] - integer(1)));
  CHECK(is_zero(g.gamma[1] - sym(m.space.line())));

  REQUIRE(m.field_connections.count("A") == 1);
  const FieldConnection& a = m.field_connections.at("A");
  REQUIRE(a.comps.size() == 2);
  CHECK(a.comps[0].spatial[0]->is_zero_literal());
  CHECK(is_zero(a.comps[0].spatial[1] - sym(m.space.fields()[0])));
  CHECK(a.comps[0].tau->is_one_literal());
  CHECK(is_zero(a.comps[1].tau - sym(m.space.line())));

  auto vals = parameter_values(m);
  CHECK(vals.at(m.parameters[0].symbol) == doctest::Approx(0.75));
  CHECK(vals.at(m.parameters[1].symbol) == doctest::Approx(2.0));
}

TEST_CASE("every corpus file round-trips through its printed form") {
  int seen = 0;
  for (const auto& entry : fs::directory_iterator(kTestDir / "models")) {
    if (entry.path().extension() != ".model") continue;
    ++seen;
    INFO("file: ", entry.path().filename().string());
    ModelFile m = load_model(entry.path().string());
    std::string printed = print_model(m);
    ModelFile back = parse_model(printed);
    CHECK(models_equivalent(m, back));
    // The printed form is a fixed point of parse-then-print.
    CHECK(print_model(back) == printed);
  }
  CHECK(seen == 10);
}

TEST_CASE("negative corpus files are rejected at the recorded location") {
  std::ifstream manifest(kTestDir / "models" / "bad" / "expected.tsv");
  REQUIRE(manifest.good());
  std::string name;
  int line = 0, col = 0, seen = 0;
  while (manifest >> name >> line >> col) {
    ++seen;
    INFO("file: ", name);
    try {
      load_model((kTestDir / "models" / "bad" / name).string());
      FAIL_CHECK("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line == line);
      CHECK(e.column == col);
    }
  }
  CHECK(seen == 10);
}

TEST_CASE("declaration faults raise their dedicated types") {
  CHECK_THROWS_AS(corpus("bad/undeclared_symbol.model"), UndeclaredSymbol);
  CHECK_THROWS_AS(corpus("bad/duplicate_field.model"), DuplicateDeclaration);
  CHECK_THROWS_AS(load_model("/nonexistent/void.model"), Error);
}

TEST_CASE("parameters fold to constants") {
  ModelFile m = parse_model(
      "model \"p\"\nline tau\nfield y\nparam k = 2^3/4\n"
      "lagrangian L = d(y,tau)^2/2 - k*y\n");
  REQUIRE(m.parameters.size() == 1);
  CHECK(m.parameters[0].value == Rational(2));
  CHECK_THROWS_AS(
      parse_model("model \"p\"\nline tau\nfield y\nparam k = y\n"
                  "lagrangian L = d(y,tau)^2/2\n"),
      ParseError);
}

TEST_CASE("derive reports match their golden fixtures") {
  auto derived = [&](const std::string& model) {
    std::ostringstream os;
    CHECK(cmd_derive(corpus(model), os) == 0);
    return drop_first_line(os.str());
  };
  CHECK(derived("oscillator.model") ==
        drop_first_line(read_file(kTestDir / "golden" /
                                  "oscillator_derive.txt")));
  CHECK(derived("gauge_mech.model") ==
        drop_first_line(read_file(kTestDir / "golden" /
                                  "gauge_mech_derive.txt")));
}

TEST_CASE("derive output is deterministic") {
  std::ostringstream a, b;
  cmd_derive(corpus("full.model"), a);
  cmd_derive(corpus("full.model"), b);
  CHECK(a.str() == b.str());
  CHECK(a.str().rfind(kVersionHeader, 0) == 0);
}

TEST_CASE("self checks pass on the corpus") {
  for (const char* name :
       {"oscillator.model", "oscillator_h.model", "quartic.model",
        "varmass.model", "wave.model", "twofield.model", "driven.model",
        "full.model"}) {
    INFO("model: ", name);
    std::ostringstream os;
    CHECK(cmd_check(corpus(name), os) == 0);
    CHECK(os.str().find("result ok") != std::string::npos);
    CHECK(os.str().find("FAIL") == std::string::npos);
  }
}

TEST_CASE("simulation writes the trajectory with its drift report") {
  RunOptions opt;
  opt.tau_end = 1.0;
  opt.step = 1e-3;
  opt.initials["y"] = 1.0;
  std::ostringstream os;
  CHECK(cmd_simulate(corpus("oscillator.model"), opt, os) == 0);
  std::string out = os.str();
  CHECK(out.rfind(kVersionHeader, 0) == 0);
  CHECK(out.find("# model oscillator") != std::string::npos);
  CHECK(out.find("# energy_initial 0.5") != std::string::npos);
  CHECK(out.find("tau,y,p_y,H") != std::string::npos);

  opt.format = "json";
  std::ostringstream js;
  CHECK(cmd_simulate(corpus("oscillator.model"), opt, js) == 0);
  CHECK(js.str().find("\"model\": \"oscillator\"") != std::string::npos);
  CHECK(js.str().find("\"samples\"") != std::string::npos);
}

TEST_CASE("simulation validates its inputs") {
  RunOptions opt;
  opt.initials["q"] = 1.0;  // no such state
  std::ostringstream os;
  CHECK_THROWS_AS(cmd_simulate(corpus("oscillator.model"), opt, os),
                  UsageError);

  RunOptions sweep;
  sweep.sweep = SweepSpec{"k", {1.0, 4.0}, {"1", "4"}};
  CHECK_THROWS_AS(cmd_simulate(corpus("sweep.model"), sweep, os),
                  UsageError);  // sweep needs --out
}

TEST_CASE("parameter sweeps fan out into separate files") {
  fs::path dir = fs::temp_directory_path() / "taujet_sweep_test";
  fs::remove_all(dir);
  fs::create_directories(dir);
  RunOptions opt;
  opt.tau_end = 1.0;
  opt.step = 1e-2;
  opt.initials["y"] = 1.0;
  opt.out = (dir / "run.csv").string();
  opt.sweep = SweepSpec{"k", {1.0, 4.0}, {"1", "4"}};
  std::ostringstream os;
  CHECK(cmd_simulate(corpus("sweep.model"), opt, os) == 0);
  CHECK(fs::exists(dir / "run_k_1.csv"));
  CHECK(fs::exists(dir / "run_k_4.csv"));
  CHECK(os.str().find("sweep k=1 wrote") != std::string::npos);
  CHECK(os.str().find("sweep k=4 wrote") != std::string::npos);
  std::string one = read_file(dir / "run_k_1.csv");
  CHECK(one.find("tau,y,p_y,H") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("the gravity pipelines run end to end") {
  RunOptions opt;
  opt.tau_end = 0.5;
  opt.step = 1e-3;
  opt.method = Method::ImplicitMidpoint;
  std::ostringstream os;
  CHECK(cmd_gravity("frw", {1.0}, {1.0}, opt, os) == 0);
  std::string out = os.str();
  CHECK(out.find("hamiltonian H =") != std::string::npos);
  CHECK(out.find("max_rel_drift") != std::string::npos);

  std::ostringstream os3;
  CHECK(cmd_gravity("bianchi1", {1.0, 1.0, 1.0}, {0.3, 0.5, 0.7}, opt, os3) ==
        0);
  CHECK(os3.str().find("max_rel_drift") != std::string::npos);

  std::ostringstream bad;
  CHECK_THROWS_AS(cmd_gravity("kasner", {1.0}, {1.0}, opt, bad), UsageError);
  CHECK_THROWS_AS(cmd_gravity("frw", {1.0, 2.0}, {1.0}, opt, bad),
                  UsageError);
}
