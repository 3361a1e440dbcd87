#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sand/netlist.hpp"
#include "sand/tensor.hpp"

namespace sand {

// Node feature layout: one-hot over the 9 gate kinds plus INPUT and
// OUTPUT slots, then capped fan-in and fan-out scaled to [0, 1].
constexpr size_t kNodeKindSlots = kGateKindCount + 2;  // 11
constexpr size_t kFeatureWidth = kNodeKindSlots + 2;   // 13
constexpr size_t kInputSlot = kGateKindCount;          // 9
constexpr size_t kOutputSlot = kGateKindCount + 1;     // 10
constexpr double kFanCap = 8.0;

struct GraphEdge {
  uint32_t src;
  uint32_t dst;
};

// Directed circuit graph: one node per gate, primary input and primary
// output; edges follow signal direction. Propagation uses the symmetrized
// operator, direction survives in the fan features.
struct CircuitGraph {
  size_t node_count = 0;
  Matrix node_features;               // node_count x kFeatureWidth
  std::vector<GraphEdge> edges;       // one entry per gate-input occurrence plus PO taps
  std::vector<std::string> node_origin;  // net name (gates, PIs) or "out:<name>" for PO nodes

  // Symmetrized neighbor lists with self-loops and the per-node
  // normalization 1/sqrt(d~). Built once; drives the sparse propagation.
  std::vector<std::vector<uint32_t>> neighbors;  // sorted, unique, includes self
  std::vector<double> inv_sqrt_degree;
};

CircuitGraph build_graph(const Netlist& netlist);

// Dense S = D~^{-1/2} (A_sym + I) D~^{-1/2}; symmetric, entries in [0, 1],
// strictly positive diagonal.
Matrix normalized_adjacency(const CircuitGraph& graph);

// Sparse application of S to a feature matrix: out = S * h. Row ownership
// and sorted neighbor order keep the result identical for any thread
// count. S is symmetric, so the same routine backpropagates (dX = S * dY).
Matrix propagate(const CircuitGraph& graph, const Matrix& h);

// Edge list (`u v` per line) and feature CSV dumps for inspection.
std::string graph_to_edge_list(const CircuitGraph& graph);
std::string graph_features_to_csv(const CircuitGraph& graph);

}  // namespace sand
