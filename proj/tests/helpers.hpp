#pragma once

// Test-only helpers and independent oracles. Everything here recomputes
// results from first principles (explicit loops, no shared kernels) so
// the implementations under test are checked against a second route.

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "sand/bench_io.hpp"
#include "sand/circuit_graph.hpp"
#include "sand/encoder.hpp"
#include "sand/tensor.hpp"

namespace sand::testing {

inline Netlist nl(const std::string& text) { return parse_bench(text); }

// Applies a node permutation to a built graph: node i of the result is
// node perm[i] of the input.
inline CircuitGraph permute_graph(const CircuitGraph& g, const std::vector<size_t>& perm) {
  std::vector<size_t> inv(perm.size());
  for (size_t i = 0; i < perm.size(); ++i) inv[perm[i]] = i;

  CircuitGraph out;
  out.node_count = g.node_count;
  out.node_features = Matrix(g.node_count, g.node_features.cols);
  out.node_origin.resize(g.node_count);
  for (size_t i = 0; i < g.node_count; ++i) {
    for (size_t j = 0; j < g.node_features.cols; ++j)
      out.node_features.at(i, j) = g.node_features.at(perm[i], j);
    out.node_origin[i] = g.node_origin[perm[i]];
  }
  for (const GraphEdge& e : g.edges)
    out.edges.push_back({static_cast<uint32_t>(inv[e.src]), static_cast<uint32_t>(inv[e.dst])});

  out.neighbors.assign(g.node_count, {});
  for (size_t i = 0; i < g.node_count; ++i) {
    for (uint32_t v : g.neighbors[perm[i]]) out.neighbors[i].push_back(static_cast<uint32_t>(inv[v]));
    std::sort(out.neighbors[i].begin(), out.neighbors[i].end());
  }
  out.inv_sqrt_degree.resize(g.node_count);
  for (size_t i = 0; i < g.node_count; ++i) out.inv_sqrt_degree[i] = g.inv_sqrt_degree[perm[i]];
  return out;
}

// Naive per-node message-passing trace of the encoder forward pass: no
// matrix ops, neighbor lists rebuilt from the raw edge list.
inline std::vector<double> naive_embed(const CircuitGraph& g, const EncoderModel& m) {
  const size_t n = g.node_count;

  // Undirected adjacency with self-loops from scratch.
  std::vector<std::vector<char>> adj(n, std::vector<char>(n, 0));
  for (size_t i = 0; i < n; ++i) adj[i][i] = 1;
  for (const GraphEdge& e : g.edges) {
    adj[e.src][e.dst] = 1;
    adj[e.dst][e.src] = 1;
  }
  std::vector<double> degree(n, 0.0);
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < n; ++j) degree[i] += adj[i][j];

  auto layer = [&](const std::vector<std::vector<double>>& h, const Matrix& w) {
    size_t din = h[0].size(), dout = w.cols;
    std::vector<std::vector<double>> agg(n, std::vector<double>(din, 0.0));
    for (size_t v = 0; v < n; ++v)
      for (size_t u = 0; u < n; ++u)
        if (adj[v][u])
          for (size_t f = 0; f < din; ++f)
            agg[v][f] += h[u][f] / std::sqrt(degree[v] * degree[u]);
    std::vector<std::vector<double>> out(n, std::vector<double>(dout, 0.0));
    for (size_t v = 0; v < n; ++v)
      for (size_t o = 0; o < dout; ++o) {
        double acc = 0.0;
        for (size_t f = 0; f < din; ++f) acc += agg[v][f] * w.at(f, o);
        out[v][o] = acc > 0.0 ? acc : 0.0;
      }
    return out;
  };

  std::vector<std::vector<double>> h(n, std::vector<double>(g.node_features.cols));
  for (size_t v = 0; v < n; ++v)
    for (size_t f = 0; f < g.node_features.cols; ++f) h[v][f] = g.node_features.at(v, f);

  h = layer(h, m.w1.value);
  h = layer(h, m.w2.value);
  h = layer(h, m.w3.value);

  std::vector<double> readout(m.dims.d3, 0.0);
  for (size_t v = 0; v < n; ++v)
    for (size_t f = 0; f < m.dims.d3; ++f) readout[f] += h[v][f];

  std::vector<double> z(m.dims.dz, 0.0);
  for (size_t o = 0; o < m.dims.dz; ++o) {
    double acc = m.bp.value.data[o];
    for (size_t f = 0; f < m.dims.d3; ++f) acc += readout[f] * m.wp.value.at(f, o);
    z[o] = std::tanh(acc);
  }
  return z;
}

// Cyclic Jacobi eigendecomposition of a symmetric matrix; returns
// (eigenvalues, eigenvectors as columns), unsorted.
inline void jacobi_eigen(Matrix a, std::vector<double>& eigenvalues, Matrix& eigenvectors) {
  const size_t n = a.rows;
  eigenvectors = Matrix(n, n, 0.0);
  for (size_t i = 0; i < n; ++i) eigenvectors.at(i, i) = 1.0;

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (size_t p = 0; p < n; ++p)
      for (size_t q = p + 1; q < n; ++q) off += a.at(p, q) * a.at(p, q);
    if (off < 1e-24) break;

    for (size_t p = 0; p < n; ++p) {
      for (size_t q = p + 1; q < n; ++q) {
        double apq = a.at(p, q);
        if (std::abs(apq) < 1e-30) continue;
        double theta = (a.at(q, q) - a.at(p, p)) / (2.0 * apq);
        double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (size_t k = 0; k < n; ++k) {
          double akp = a.at(k, p), akq = a.at(k, q);
          a.at(k, p) = c * akp - s * akq;
          a.at(k, q) = s * akp + c * akq;
        }
        for (size_t k = 0; k < n; ++k) {
          double apk = a.at(p, k), aqk = a.at(q, k);
          a.at(p, k) = c * apk - s * aqk;
          a.at(q, k) = s * apk + c * aqk;
        }
        for (size_t k = 0; k < n; ++k) {
          double vkp = eigenvectors.at(k, p), vkq = eigenvectors.at(k, q);
          eigenvectors.at(k, p) = c * vkp - s * vkq;
          eigenvectors.at(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  eigenvalues.resize(n);
  for (size_t i = 0; i < n; ++i) eigenvalues[i] = a.at(i, i);
}

}  // namespace sand::testing
