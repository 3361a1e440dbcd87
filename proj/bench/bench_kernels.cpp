// Serial reference vs OpenMP kernels on the shapes the pipeline actually
// runs: dense matmul, normalized-adjacency propagation and batched logic
// simulation.

#include <benchmark/benchmark.h>

#include "sand/circuit_graph.hpp"
#include "sand/logicsim.hpp"
#include "sand/rng.hpp"
#include "sand/synth.hpp"
#include "sand/tensor.hpp"

using namespace sand;

namespace {

Matrix random_matrix(size_t r, size_t c, uint64_t seed) {
  Rng rng(seed);
  Matrix m(r, c);
  for (double& v : m.data) v = rng.next_symmetric(1.0);
  return m;
}

Netlist bench_circuit(size_t gates) {
  SynthSpec spec;
  spec.n_gates = gates;
  spec.n_inputs = 12;
  spec.n_outputs = 4;
  spec.seed = 7;
  return synth_circuit(spec);
}

void BM_matmul_serial(benchmark::State& state) {
  size_t n = static_cast<size_t>(state.range(0));
  Matrix a = random_matrix(n, n, 1), b = random_matrix(n, n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(matmul_serial(a, b));
}

void BM_matmul_omp(benchmark::State& state) {
  size_t n = static_cast<size_t>(state.range(0));
  Matrix a = random_matrix(n, n, 1), b = random_matrix(n, n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b));
}

void BM_propagate_dense(benchmark::State& state) {
  Netlist nl = bench_circuit(static_cast<size_t>(state.range(0)));
  CircuitGraph g = build_graph(nl);
  Matrix s = normalized_adjacency(g);
  Matrix h = random_matrix(g.node_count, 64, 3);
  for (auto _ : state) benchmark::DoNotOptimize(matmul_serial(s, h));
}

void BM_propagate_sparse(benchmark::State& state) {
  Netlist nl = bench_circuit(static_cast<size_t>(state.range(0)));
  CircuitGraph g = build_graph(nl);
  Matrix h = random_matrix(g.node_count, 64, 3);
  for (auto _ : state) benchmark::DoNotOptimize(propagate(g, h));
}

void BM_simulate_reference(benchmark::State& state) {
  Netlist nl = bench_circuit(200);
  auto frame_inputs = nl.frame_inputs();
  Rng rng(11);
  for (auto _ : state) {
    FrameAssignment fa;
    for (const auto& n : frame_inputs) fa[n] = static_cast<uint8_t>(rng.next_u64() & 1);
    benchmark::DoNotOptimize(simulate_reference(nl, fa));
  }
}

void BM_profile_word_parallel(benchmark::State& state) {
  Netlist nl = bench_circuit(200);
  uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(random_signal_profile(nl, 10000, seed++));
}

}  // namespace

BENCHMARK(BM_matmul_serial)->Arg(128)->Arg(256);
BENCHMARK(BM_matmul_omp)->Arg(128)->Arg(256);
BENCHMARK(BM_propagate_dense)->Arg(200)->Arg(400);
BENCHMARK(BM_propagate_sparse)->Arg(200)->Arg(400);
BENCHMARK(BM_simulate_reference);
BENCHMARK(BM_profile_word_parallel);

BENCHMARK_MAIN();
