#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sand/bench_io.hpp"
#include "sand/synth.hpp"

using namespace sand;

TEST_CASE("parse a minimal nand circuit") {
  Netlist n = parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(y)\ny = NAND(a, b)");
  CHECK(n.inputs == std::vector<std::string>{"a", "b"});
  CHECK(n.outputs == std::vector<std::string>{"y"});
  REQUIRE(n.gates.size() == 1);
  CHECK(n.gates[0].output == "y");
  CHECK(n.gates[0].kind == GateKind::NAND);
  CHECK(n.gates[0].inputs == std::vector<std::string>{"a", "b"});
}

TEST_CASE("empty text is rejected") {
  CHECK_THROWS_WITH_AS(parse_bench(""), "no primary inputs/outputs (empty text)", Error);
}

TEST_CASE("arity rules are enforced at parse time") {
  CHECK_THROWS_AS(parse_bench("INPUT(a)\nOUTPUT(y)\ny = AND(a)"), Error);
  CHECK_THROWS_AS(parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(y)\ny = NOT(a, b)"), Error);
  CHECK_THROWS_AS(parse_bench("INPUT(a)\nOUTPUT(y)\ny = DFF(a, a)"), Error);
}

TEST_CASE("syntax errors carry the line number") {
  try {
    parse_bench("INPUT(a)\nOUTPUT(y)\ny == AND(a, a)");
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(e.line() == 3);
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_bench("INPUT(a)\nOUTPUT(y)\ny = FROB(a, a)"), Error);
}

TEST_CASE("comments, blank lines and crlf are accepted") {
  Netlist n = parse_bench("# header\r\n\r\nINPUT(a)\r\nINPUT(b)\r\nOUTPUT(y) # trailing\r\ny = AND(a, b)\r\n");
  CHECK(n.gates.size() == 1);
  CHECK(n.inputs.size() == 2);
}

TEST_CASE("duplicate drivers are rejected") {
  CHECK_THROWS_AS(parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(x)\nx = AND(a, b)\nx = OR(a, b)"), Error);
}

TEST_CASE("undriven references are rejected") {
  CHECK_THROWS_AS(parse_bench("INPUT(a)\nOUTPUT(y)\ny = AND(a, ghost)"), Error);
}

TEST_CASE("combinational cycles are rejected, state loops are fine") {
  CHECK_THROWS_AS(parse_bench("INPUT(a)\nOUTPUT(x)\nx = NOT(y)\ny = NOT(x)"), Error);
  // The same loop through a DFF is sequential and legal.
  Netlist n = parse_bench("INPUT(a)\nOUTPUT(x)\nx = NOT(q)\nq = DFF(x)");
  CHECK(validate(n).empty());
  CHECK(n.frame_inputs() == std::vector<std::string>{"a", "q"});
  CHECK(n.frame_outputs() == std::vector<std::string>{"x", "q"});
}

TEST_CASE("writer emits one line per declaration") {
  Netlist n = parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(y)\ny = NAND(a, b)");
  std::string text = write_bench(n);
  size_t lines = 0;
  for (char c : text) lines += c == '\n';
  CHECK(lines == 4);  // no name comment for anonymous netlists
}

TEST_CASE("dff emitted with a single argument") {
  Netlist n = parse_bench("INPUT(d)\nOUTPUT(q)\nq = DFF(d)");
  CHECK(write_bench(n).find("q = DFF(d)") != std::string::npos);
}

TEST_CASE("validate reports each violation") {
  Netlist n;
  n.inputs = {"a", "b"};
  n.outputs = {"x"};
  n.gates.push_back({"x", GateKind::AND, {"a", "b"}});
  n.gates.push_back({"x", GateKind::OR, {"a", "b"}});
  auto v = validate(n);
  REQUIRE(v.size() == 1);
  CHECK(v[0].rule == "duplicate-driver");
  CHECK(v[0].subject == "x");

  Netlist ring;
  ring.inputs = {"a"};
  ring.outputs = {"p"};
  ring.gates.push_back({"p", GateKind::NOT, {"q"}});
  ring.gates.push_back({"q", GateKind::NOT, {"p"}});
  bool found_cycle = false;
  for (const auto& viol : validate(ring)) found_cycle |= viol.rule == "combinational-cycle";
  CHECK(found_cycle);
}

TEST_CASE("c17 parses, validates and round-trips") {
  Netlist c17 = load_bench_file(std::string(SAND_DATA_DIR) + "/iscas85/c17.bench");
  CHECK(c17.inputs.size() == 5);
  CHECK(c17.outputs.size() == 2);
  CHECK(c17.gates.size() == 6);
  CHECK(validate(c17).empty());
  CHECK(parse_bench(write_bench(c17)) == c17);
}

TEST_CASE("round-trip is the identity on generated netlists") {
  for (uint64_t seed = 1; seed <= 25; ++seed) {
    SynthSpec spec;
    spec.seed = seed;
    spec.n_gates = 20 + seed * 7 % 120;
    spec.n_inputs = 4 + seed % 6;
    spec.n_outputs = 1 + seed % 4;
    spec.sequential = seed % 3 == 0;
    Netlist n = synth_circuit(spec);
    Netlist back = parse_bench(write_bench(n), n.name);
    CHECK(back == n);
    CHECK(validate(back).empty());
  }
}
