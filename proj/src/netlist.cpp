#include "sand/netlist.hpp"

#include <algorithm>
#include <unordered_set>

namespace sand {

const char* gate_kind_name(GateKind k) {
  switch (k) {
    case GateKind::AND: return "AND";
    case GateKind::OR: return "OR";
    case GateKind::NAND: return "NAND";
    case GateKind::NOR: return "NOR";
    case GateKind::NOT: return "NOT";
    case GateKind::XOR: return "XOR";
    case GateKind::XNOR: return "XNOR";
    case GateKind::BUFF: return "BUFF";
    case GateKind::DFF: return "DFF";
  }
  return "?";
}

std::optional<GateKind> gate_kind_from_name(const std::string& name) {
  std::string up;
  up.reserve(name.size());
  for (char c : name) up.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  if (up == "AND") return GateKind::AND;
  if (up == "OR") return GateKind::OR;
  if (up == "NAND") return GateKind::NAND;
  if (up == "NOR") return GateKind::NOR;
  if (up == "NOT" || up == "INV") return GateKind::NOT;
  if (up == "XOR") return GateKind::XOR;
  if (up == "XNOR") return GateKind::XNOR;
  if (up == "BUFF" || up == "BUF") return GateKind::BUFF;
  if (up == "DFF") return GateKind::DFF;
  return std::nullopt;
}

bool Netlist::operator==(const Netlist& other) const {
  if (inputs != other.inputs || outputs != other.outputs) return false;
  if (gates.size() != other.gates.size()) return false;
  for (size_t i = 0; i < gates.size(); ++i) {
    const Gate& a = gates[i];
    const Gate& b = other.gates[i];
    if (a.output != b.output || a.kind != b.kind || a.inputs != b.inputs) return false;
  }
  return true;
}

std::unordered_map<std::string, size_t> Netlist::driver_index() const {
  std::unordered_map<std::string, size_t> idx;
  idx.reserve(gates.size());
  for (size_t i = 0; i < gates.size(); ++i) idx.emplace(gates[i].output, i);
  return idx;
}

std::vector<std::string> Netlist::frame_inputs() const {
  std::vector<std::string> fi = inputs;
  for (const Gate& g : gates)
    if (g.kind == GateKind::DFF) fi.push_back(g.output);
  return fi;
}

std::vector<std::string> Netlist::frame_outputs() const {
  std::vector<std::string> fo = outputs;
  for (const Gate& g : gates)
    if (g.kind == GateKind::DFF) fo.push_back(g.output);
  return fo;
}

bool Netlist::has_dff() const {
  return std::any_of(gates.begin(), gates.end(),
                     [](const Gate& g) { return g.kind == GateKind::DFF; });
}

std::vector<Violation> validate(const Netlist& netlist) {
  std::vector<Violation> out;

  if (netlist.inputs.empty() && netlist.outputs.empty()) {
    out.push_back({"empty-interface", "", "no primary inputs/outputs"});
    return out;
  }

  // Driver map; primary inputs drive themselves.
  std::unordered_set<std::string> driven;
  for (const std::string& in : netlist.inputs) {
    if (!driven.insert(in).second) {
      out.push_back({"duplicate-driver", in, "net declared INPUT more than once"});
    }
  }
  for (const Gate& g : netlist.gates) {
    if (!driven.insert(g.output).second) {
      out.push_back({"duplicate-driver", g.output, "net has more than one driver"});
    }
  }

  for (const Gate& g : netlist.gates) {
    size_t arity = g.inputs.size();
    if (is_unary(g.kind) && arity != 1) {
      out.push_back({"bad-arity", g.output, std::string(gate_kind_name(g.kind)) + " requires exactly 1 input"});
    } else if (!is_unary(g.kind) && arity < 2) {
      out.push_back({"bad-arity", g.output, std::string(gate_kind_name(g.kind)) + " requires >= 2 inputs"});
    }
    for (const std::string& in : g.inputs) {
      if (!driven.count(in)) {
        out.push_back({"undriven-net", in, "referenced by gate " + g.output});
      }
    }
  }

  for (const std::string& po : netlist.outputs) {
    if (!driven.count(po)) {
      out.push_back({"undriven-net", po, "primary output is not driven"});
    }
  }

  // Combinational cycle check. Edges leaving a DFF output are cut, so a
  // loop through state is legal. Iterative DFS with coloring.
  auto drivers = netlist.driver_index();
  std::unordered_map<std::string, int> color;  // 0 unvisited, 1 on stack, 2 done
  for (const Gate& root : netlist.gates) {
    if (root.kind == GateKind::DFF) continue;
    if (color[root.output] != 0) continue;
    std::vector<std::pair<std::string, size_t>> stack;  // (net, next input index)
    stack.emplace_back(root.output, 0);
    color[root.output] = 1;
    while (!stack.empty()) {
      auto& [net, next] = stack.back();
      auto it = drivers.find(net);
      const Gate* g = (it == drivers.end()) ? nullptr : &netlist.gates[it->second];
      if (!g || g->kind == GateKind::DFF || next >= g->inputs.size()) {
        color[net] = 2;
        stack.pop_back();
        continue;
      }
      const std::string& in = g->inputs[next++];
      if (!drivers.count(in)) continue;  // PI or undriven (reported above)
      int c = color[in];
      if (c == 1) {
        out.push_back({"combinational-cycle", in, "combinational loop through net " + in});
        color[in] = 2;
      } else if (c == 0) {
        color[in] = 1;
        stack.emplace_back(in, 0);
      }
    }
  }

  return out;
}

void require_valid(const Netlist& netlist) {
  auto v = validate(netlist);
  if (!v.empty()) {
    throw Error("invalid netlist '" + netlist.name + "': " + v[0].rule +
                (v[0].subject.empty() ? "" : " (" + v[0].subject + ")") + ": " + v[0].detail);
  }
}

}  // namespace sand
