#include "sand/synth.hpp"

#include <algorithm>
#include <unordered_set>

#include "sand/rng.hpp"

namespace sand {

Netlist synth_circuit(const SynthSpec& spec) {
  if (spec.n_gates < 4) throw Error("synth_circuit: need at least 4 gates");
  if (spec.n_inputs < 2) throw Error("synth_circuit: need at least 2 inputs");
  Rng rng(derive_seed(spec.seed, 0x53594E));

  Netlist nl;
  nl.name = spec.name;
  for (size_t i = 0; i < spec.n_inputs; ++i) nl.inputs.push_back("i" + std::to_string(i));

  std::vector<std::string> nets = nl.inputs;

  // Cumulative weights over kinds; AND/NAND/NOR-heavy so that deep nets
  // are rarely 1 and trigger selection has material to work with.
  struct WeightedKind {
    GateKind kind;
    uint64_t weight;
  };
  std::vector<WeightedKind> table = {
      {GateKind::AND, 26}, {GateKind::NAND, 18}, {GateKind::OR, 14},  {GateKind::NOR, 16},
      {GateKind::XOR, 8},  {GateKind::XNOR, 4},  {GateKind::NOT, 6},  {GateKind::BUFF, 3},
  };
  if (spec.sequential) table.push_back({GateKind::DFF, 9});
  uint64_t total_weight = 0;
  for (const auto& wk : table) total_weight += wk.weight;

  auto pick_kind = [&]() {
    uint64_t r = rng.next_below(total_weight);
    for (const auto& wk : table) {
      if (r < wk.weight) return wk.kind;
      r -= wk.weight;
    }
    return table.back().kind;
  };

  // Recency-biased operand choice: half the draws come from the most
  // recent quarter of nets, which stacks depth instead of width.
  auto pick_net = [&]() -> const std::string& {
    size_t n = nets.size();
    if (n > 8 && rng.next_bit()) {
      size_t quarter = std::max<size_t>(4, n / 4);
      return nets[n - 1 - rng.next_below(quarter)];
    }
    return nets[rng.next_below(n)];
  };

  for (size_t gi = 0; gi < spec.n_gates; ++gi) {
    Gate g;
    g.output = "n" + std::to_string(gi);
    g.kind = pick_kind();
    if (is_unary(g.kind)) {
      g.inputs.push_back(pick_net());
    } else {
      size_t arity = 2 + (rng.next_below(4) == 0 ? 1 : 0);  // mostly 2, some 3
      for (size_t a = 0; a < arity; ++a) {
        std::string net = pick_net();
        while (std::find(g.inputs.begin(), g.inputs.end(), net) != g.inputs.end())
          net = nets[rng.next_below(nets.size())];
        g.inputs.push_back(net);
      }
    }
    nets.push_back(g.output);
    nl.gates.push_back(std::move(g));
  }

  // Outputs: prefer sink nets (driven but unread) so the logic stays
  // observable; fall back to the deepest nets.
  std::unordered_set<std::string> read;
  for (const Gate& g : nl.gates)
    for (const std::string& in : g.inputs) read.insert(in);
  std::vector<std::string> sinks;
  for (const Gate& g : nl.gates)
    if (!read.count(g.output) && g.kind != GateKind::DFF) sinks.push_back(g.output);

  std::unordered_set<std::string> chosen;
  for (auto it = sinks.rbegin(); it != sinks.rend() && chosen.size() < spec.n_outputs; ++it)
    chosen.insert(*it);
  for (auto it = nl.gates.rbegin(); it != nl.gates.rend() && chosen.size() < spec.n_outputs; ++it)
    if (it->kind != GateKind::DFF) chosen.insert(it->output);

  for (const Gate& g : nl.gates)
    if (chosen.count(g.output)) nl.outputs.push_back(g.output);

  require_valid(nl);
  return nl;
}

}  // namespace sand
