#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <bit>
#include <map>
#include <set>

#include "helpers.hpp"
#include "sand/augment.hpp"
#include "sand/rng.hpp"
#include "sand/circuit_graph.hpp"
#include "sand/synth.hpp"

using namespace sand;
using sand::testing::nl;

namespace {

Netlist small_anchor() {
  return nl(
      "INPUT(a)\nINPUT(b)\nINPUT(c)\nOUTPUT(y)\nOUTPUT(z)\n"
      "t1 = AND(a, b)\nt2 = OR(b, c)\ny = NAND(t1, t2)\nz = XOR(t1, c)");
}

Netlist rare_anchor() {
  // Deep AND pyramid: plenty of rare nets for trigger selection.
  SynthSpec spec;
  spec.seed = 31;
  spec.n_gates = 80;
  spec.n_inputs = 8;
  spec.n_outputs = 3;
  return synth_circuit(spec);
}

}  // namespace

TEST_CASE("demorgan on a single and gate yields nand followed by not") {
  Netlist a = nl("INPUT(x)\nINPUT(y)\nOUTPUT(o)\no = AND(x, y)");
  Netlist b = demorgan_rewrite(a, 1, 1);
  REQUIRE(b.gates.size() == 2);
  CHECK(b.gates[0].kind == GateKind::NAND);
  CHECK(b.gates[1].kind == GateKind::NOT);
  CHECK(b.gates[1].output == "o");
  EqOptions opts;
  CHECK(check_equivalence(a, b, opts).equivalent);
}

TEST_CASE("demorgan preconditions") {
  Netlist a = nl("INPUT(x)\nINPUT(y)\nOUTPUT(o)\no = AND(x, y)");
  CHECK_THROWS_AS(demorgan_rewrite(a, 1, 0), Error);
  Netlist pure_not = nl("INPUT(x)\nOUTPUT(o)\no = NOT(x)");
  CHECK_THROWS_AS(demorgan_rewrite(pure_not, 1, 1), Error);
}

TEST_CASE("two demorgan applications add four gates and stay equivalent") {
  Netlist a = nl("INPUT(x)\nINPUT(y)\nOUTPUT(o)\no = AND(x, y)");
  Netlist b = demorgan_rewrite(a, 5, 2);
  CHECK(b.gates.size() == a.gates.size() + 2);
  EqOptions opts;
  CHECK(check_equivalence(a, b, opts).equivalent);
}

TEST_CASE("every rewrite rule preserves the function exhaustively") {
  const char* kinds[] = {"AND", "OR", "NAND", "NOR", "XOR", "XNOR"};
  for (const char* k : kinds) {
    Netlist a = nl("INPUT(x)\nINPUT(y)\nOUTPUT(o)\no = " + std::string(k) + "(x, y)");
    for (uint64_t seed = 0; seed < 3; ++seed) {
      Netlist b = demorgan_rewrite(a, seed, 1 + seed % 2);
      EqOptions opts;
      CHECK(check_equivalence(a, b, opts).equivalent);
    }
  }
  Netlist buf = nl("INPUT(x)\nOUTPUT(o)\no = BUFF(x)");
  Netlist b = demorgan_rewrite(buf, 2, 1);
  CHECK(b.gates.size() == 2);
  EqOptions opts;
  CHECK(check_equivalence(buf, b, opts).equivalent);
}

TEST_CASE("cone of a 1-gate circuit is the circuit itself") {
  Netlist a = nl("INPUT(p)\nINPUT(q)\nOUTPUT(r)\nr = NOR(p, q)");
  Netlist cone = extract_subcircuit(a, 3, 5);
  CHECK(cone == a);
}

TEST_CASE("max_nodes at least gate count keeps the full fan-in cone") {
  Netlist a = small_anchor();
  Netlist cone = extract_subcircuit(a, 1, 100);
  // The chosen output's full cone: every gate still present feeds it.
  CHECK(cone.gates.size() <= a.gates.size());
  CHECK(cone.outputs.size() == 1);
  EqOptions opts;
  CHECK(check_cone_equivalence(a, cone, opts).equivalent);
}

TEST_CASE("bounded extraction cuts nets into primary inputs and preserves the cone function") {
  Netlist a = rare_anchor();
  for (uint64_t seed = 0; seed < 6; ++seed) {
    Netlist cone = extract_subcircuit(a, seed, 8);
    CHECK(cone.gates.size() <= 8);
    CHECK(validate(cone).empty());
    EqOptions opts;
    opts.exhaustive = false;
    opts.n_vectors = 1000;
    opts.seed = seed;
    CHECK(check_cone_equivalence(a, cone, opts).equivalent);
  }
}

TEST_CASE("extraction preconditions") {
  Netlist a = small_anchor();
  CHECK_THROWS_AS(extract_subcircuit(a, 1, 2), Error);
  Netlist no_gates;
  no_gates.inputs = {"a"};
  no_gates.outputs = {"a"};
  CHECK_THROWS_AS(extract_subcircuit(no_gates, 1, 5), Error);
}

TEST_CASE("identity relocation is structural equality") {
  Netlist a = small_anchor();
  std::vector<size_t> id_perm;
  for (size_t i = 0; i < a.gates.size(); ++i) id_perm.push_back(i);
  Netlist b = apply_relocation(a, id_perm, {});
  CHECK(b == a);
}

TEST_CASE("relocation preserves function, interface names and degree multiset") {
  Netlist a = small_anchor();
  for (uint64_t seed = 1; seed <= 5; ++seed) {
    Netlist b = relocate(a, seed);
    CHECK(b.inputs == a.inputs);
    CHECK(b.outputs == a.outputs);
    EqOptions opts;
    CHECK(check_equivalence(a, b, opts).equivalent);

    auto degrees = [](const Netlist& n) {
      CircuitGraph g = build_graph(n);
      std::multiset<size_t> d;
      for (const auto& nb : g.neighbors) d.insert(nb.size());
      return d;
    };
    CHECK(degrees(a) == degrees(b));
  }
}

TEST_CASE("relocation keeps dff state nets fixed") {
  Netlist a = nl("INPUT(d)\nOUTPUT(y)\nq = DFF(w)\nw = AND(d, q)\ny = NOT(w)");
  for (uint64_t seed = 1; seed <= 4; ++seed) {
    Netlist b = relocate(a, seed);
    EqOptions opts;
    CHECK(check_equivalence(a, b, opts).equivalent);  // also checks interface names
  }
}

TEST_CASE("trojan injection produces a verified distinguishing assignment") {
  Netlist a = rare_anchor();
  SignalProfile profile = random_signal_profile(a, 10000, 77);
  auto [tj, info] = inject_trojan(a, 1, 3, profile);

  CHECK(validate(tj).empty());
  CHECK(info.trigger_nets.size() == 3);
  CHECK(info.trigger_polarity.size() == 3);

  // Trigger nets are distinct pre-existing nets at rarity below 0.2.
  std::set<std::string> distinct(info.trigger_nets.begin(), info.trigger_nets.end());
  CHECK(distinct.size() == 3);
  for (size_t i = 0; i < 3; ++i) {
    double p1 = profile.probability.at(info.trigger_nets[i]);
    double rare = info.trigger_polarity[i] ? p1 : 1.0 - p1;
    CHECK(rare < 0.2);
  }

  // The recorded assignment flips the recorded output (exact check).
  auto a_out = simulate_frame_outputs(a, info.distinguishing);
  auto t_out = simulate_frame_outputs(tj, info.distinguishing);
  CHECK(a_out.at(info.flipped_output) != t_out.at(info.flipped_output));

  // The assignment actually activates the trigger.
  auto a_nets = simulate(a, info.distinguishing);
  for (size_t i = 0; i < 3; ++i) CHECK(a_nets.at(info.trigger_nets[i]) == info.trigger_polarity[i]);
}

TEST_CASE("trigger stays silent on non-triggering vectors") {
  Netlist a = rare_anchor();
  SignalProfile profile = random_signal_profile(a, 10000, 78);
  auto [tj, info] = inject_trojan(a, 2, 3, profile);

  Simulator sa(a), st(tj);
  size_t checked = 0;
  for (uint64_t v = 0; v < 1000; ++v) {
    FrameAssignment fa;
    Rng rng(derive_seed(900, v));
    for (const std::string& fi : a.frame_inputs()) fa[fi] = static_cast<uint8_t>(rng.next_u64() & 1);
    auto nets = simulate(a, fa);
    bool fires = true;
    for (size_t i = 0; i < info.trigger_nets.size(); ++i)
      fires &= nets.at(info.trigger_nets[i]) == info.trigger_polarity[i];
    if (fires) continue;
    ++checked;
    auto ao = simulate_frame_outputs(a, fa);
    auto to = simulate_frame_outputs(tj, fa);
    for (const auto& [name, val] : ao) CHECK(to.at(name) == val);
  }
  CHECK(checked > 950);  // rare trigger: nearly every vector is silent
}

TEST_CASE("injection rarity certificate holds on its recorded batch") {
  Netlist a = rare_anchor();
  SignalProfile profile = random_signal_profile(a, 10000, 79);
  auto [tj, info] = inject_trojan(a, 3, 2, profile);

  // Recompute the firing count over the recorded seeded batch.
  Simulator sim(a);
  const size_t k = sim.frame_input_count();
  uint64_t fire = 0;
  std::vector<uint64_t> in_words(k), net_words;
  for (uint64_t block = 0; block * 64 < info.rarity_vectors; ++block) {
    uint64_t lane_mask = ~0ULL;
    if ((block + 1) * 64 > info.rarity_vectors)
      lane_mask = (1ULL << (info.rarity_vectors - block * 64)) - 1;
    for (size_t i = 0; i < k; ++i) in_words[i] = random_input_word(info.rarity_seed, block, i, k);
    sim.eval_words(in_words, net_words);
    uint64_t m = ~0ULL;
    for (size_t i = 0; i < info.trigger_nets.size(); ++i) {
      uint64_t w = net_words[sim.net_index(info.trigger_nets[i])];
      m &= info.trigger_polarity[i] ? w : ~w;
    }
    fire += std::popcount(m & lane_mask);
  }
  CHECK(fire == info.fire_count);
  CHECK(fire <= 10);  // at most 1% of 1000
}

TEST_CASE("trigger_width outside [2,6] is rejected") {
  Netlist a = rare_anchor();
  SignalProfile profile = random_signal_profile(a, 1000, 80);
  CHECK_THROWS_AS(inject_trojan(a, 1, 1, profile), Error);
  CHECK_THROWS_AS(inject_trojan(a, 1, 7, profile), Error);
}

TEST_CASE("injection fails cleanly when no rare nets exist") {
  Netlist a = nl("INPUT(x)\nINPUT(y)\nOUTPUT(o)\no = XOR(x, y)");  // everything at 0.5
  SignalProfile profile = random_signal_profile(a, 10000, 81);
  CHECK_THROWS_AS(inject_trojan(a, 1, 2, profile), Error);
}

TEST_CASE("make_dataset: counts, labels and certification") {
  std::vector<Netlist> anchors{rare_anchor()};
  AugmentConfig cfg;
  cfg.n_pos = 3;
  cfg.n_neg = 2;
  cfg.profile_vectors = 4000;
  SampleSet set = make_dataset(anchors, cfg, 42);

  REQUIRE(set.records.size() == 6);
  std::vector<int> labels;
  for (const auto& r : set.records) labels.push_back(r.label);
  CHECK(labels == std::vector<int>{0, 0, 0, 0, 1, 1});

  // Certified-positive property re-checked from the records.
  for (const auto& r : set.records) {
    if (r.role == SampleRole::Positive) {
      EqOptions opts;
      opts.exhaustive = anchors[0].frame_inputs().size() <= 12;
      opts.n_vectors = 4096;
      opts.seed = 1;
      bool ok = r.transform == "extract"
                    ? check_cone_equivalence(anchors[0], r.circuit, opts).equivalent
                    : check_equivalence(anchors[0], r.circuit, opts).equivalent;
      CHECK(ok);
    }
    if (r.role == SampleRole::Negative) {
      REQUIRE(r.trojan.has_value());
      auto ao = simulate_frame_outputs(anchors[0], r.trojan->distinguishing);
      auto to = simulate_frame_outputs(r.circuit, r.trojan->distinguishing);
      CHECK(ao.at(r.trojan->flipped_output) != to.at(r.trojan->flipped_output));
    }
  }
}

TEST_CASE("make_dataset is deterministic: identical manifests") {
  std::vector<Netlist> anchors{rare_anchor()};
  AugmentConfig cfg;
  cfg.n_pos = 2;
  cfg.n_neg = 2;
  cfg.profile_vectors = 2000;
  SampleSet s1 = make_dataset(anchors, cfg, 7);
  SampleSet s2 = make_dataset(anchors, cfg, 7);
  CHECK(manifest_csv(s1, "d") == manifest_csv(s2, "d"));
  for (size_t i = 0; i < s1.records.size(); ++i) CHECK(s1.records[i].circuit == s2.records[i].circuit);
}

TEST_CASE("negative reallocation moves quotas off uninjectable anchors") {
  Netlist c17 = load_bench_file(std::string(SAND_DATA_DIR) + "/iscas85/c17.bench");
  std::vector<Netlist> anchors{c17, rare_anchor()};
  AugmentConfig cfg;
  cfg.n_pos = 1;
  cfg.n_neg = 2;
  cfg.profile_vectors = 4000;
  cfg.reallocate_uninjectable = true;
  SampleSet set = make_dataset(anchors, cfg, 9);

  std::map<std::string, size_t> negs;
  for (const auto& r : set.records)
    if (r.role == SampleRole::Negative) negs[r.origin]++;
  CHECK(negs["c17"] == 0);
  CHECK(negs[anchors[1].name] == 4);  // its own 2 plus c17's 2
}
