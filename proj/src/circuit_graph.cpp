#include "sand/circuit_graph.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_map>

namespace sand {

CircuitGraph build_graph(const Netlist& netlist) {
  require_valid(netlist);
  CircuitGraph g;

  // Node order: primary inputs, gates (declaration order), primary outputs.
  std::unordered_map<std::string, uint32_t> node_of_net;  // driver node of each net
  for (const std::string& in : netlist.inputs) {
    node_of_net.emplace(in, static_cast<uint32_t>(g.node_origin.size()));
    g.node_origin.push_back(in);
  }
  for (const Gate& gate : netlist.gates) {
    node_of_net.emplace(gate.output, static_cast<uint32_t>(g.node_origin.size()));
    g.node_origin.push_back(gate.output);
  }
  std::vector<uint32_t> po_nodes;
  for (const std::string& po : netlist.outputs) {
    po_nodes.push_back(static_cast<uint32_t>(g.node_origin.size()));
    g.node_origin.push_back("out:" + po);
  }
  g.node_count = g.node_origin.size();

  // Edges: every gate-input occurrence, then one tap per primary output.
  const size_t n_inputs = netlist.inputs.size();
  for (size_t gi = 0; gi < netlist.gates.size(); ++gi) {
    uint32_t dst = static_cast<uint32_t>(n_inputs + gi);
    for (const std::string& in : netlist.gates[gi].inputs)
      g.edges.push_back({node_of_net.at(in), dst});
  }
  for (size_t oi = 0; oi < netlist.outputs.size(); ++oi)
    g.edges.push_back({node_of_net.at(netlist.outputs[oi]), po_nodes[oi]});

  // Features: kind one-hot, then capped fan-in / fan-out.
  std::vector<double> fan_in(g.node_count, 0.0), fan_out(g.node_count, 0.0);
  for (const GraphEdge& e : g.edges) {
    fan_out[e.src] += 1.0;
    fan_in[e.dst] += 1.0;
  }
  g.node_features = Matrix(g.node_count, kFeatureWidth, 0.0);
  for (size_t n = 0; n < g.node_count; ++n) {
    size_t slot;
    if (n < n_inputs) {
      slot = kInputSlot;
    } else if (n < n_inputs + netlist.gates.size()) {
      slot = static_cast<size_t>(netlist.gates[n - n_inputs].kind);
    } else {
      slot = kOutputSlot;
    }
    g.node_features.at(n, slot) = 1.0;
    g.node_features.at(n, kNodeKindSlots) = std::min(fan_in[n], kFanCap) / kFanCap;
    g.node_features.at(n, kNodeKindSlots + 1) = std::min(fan_out[n], kFanCap) / kFanCap;
  }

  // Symmetrized adjacency with self-loops, deduplicated and sorted.
  g.neighbors.assign(g.node_count, {});
  for (size_t n = 0; n < g.node_count; ++n) g.neighbors[n].push_back(static_cast<uint32_t>(n));
  for (const GraphEdge& e : g.edges) {
    if (e.src == e.dst) continue;  // self-loop already present
    g.neighbors[e.src].push_back(e.dst);
    g.neighbors[e.dst].push_back(e.src);
  }
  for (auto& nb : g.neighbors) {
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
  }
  g.inv_sqrt_degree.resize(g.node_count);
  for (size_t n = 0; n < g.node_count; ++n)
    g.inv_sqrt_degree[n] = 1.0 / std::sqrt(static_cast<double>(g.neighbors[n].size()));

  return g;
}

Matrix normalized_adjacency(const CircuitGraph& graph) {
  if (graph.node_count < 1) throw Error("normalized_adjacency requires at least one node");
  Matrix s(graph.node_count, graph.node_count, 0.0);
  for (size_t u = 0; u < graph.node_count; ++u)
    for (uint32_t v : graph.neighbors[u])
      s.at(u, v) = graph.inv_sqrt_degree[u] * graph.inv_sqrt_degree[v];
  return s;
}

Matrix propagate(const CircuitGraph& graph, const Matrix& h) {
  if (h.rows != graph.node_count) throw Error("propagate: row count does not match node count");
  Matrix out(h.rows, h.cols, 0.0);
#pragma omp parallel for schedule(static) if (graph.node_count * h.cols > 4096)
  for (int64_t ui = 0; ui < static_cast<int64_t>(graph.node_count); ++ui) {
    size_t u = static_cast<size_t>(ui);
    double* orow = &out.data[u * out.cols];
    for (uint32_t v : graph.neighbors[u]) {
      double w = graph.inv_sqrt_degree[u] * graph.inv_sqrt_degree[v];
      const double* hrow = &h.data[static_cast<size_t>(v) * h.cols];
      for (size_t j = 0; j < h.cols; ++j) orow[j] += w * hrow[j];
    }
  }
  return out;
}

std::string graph_to_edge_list(const CircuitGraph& graph) {
  std::ostringstream out;
  for (const GraphEdge& e : graph.edges) out << e.src << " " << e.dst << "\n";
  return out.str();
}

std::string graph_features_to_csv(const CircuitGraph& graph) {
  std::ostringstream out;
  out << "node,origin";
  for (size_t j = 0; j < kFeatureWidth; ++j) out << ",f" << j;
  out << "\n";
  out.precision(17);
  for (size_t n = 0; n < graph.node_count; ++n) {
    out << n << "," << graph.node_origin[n];
    for (size_t j = 0; j < kFeatureWidth; ++j) out << "," << graph.node_features.at(n, j);
    out << "\n";
  }
  return out.str();
}

}  // namespace sand
