#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "sand/supernet.hpp"

namespace sand {

// Coalition score given the active flags of every player.
using CharacteristicFn = std::function<double(const std::vector<uint8_t>&)>;

// Exact weighted-marginal Shapley values over all 2^n coalitions (n <= 12).
std::vector<double> exact_shapley(const CharacteristicFn& v, size_t n_players);

// Monte Carlo permutation sampling with antithetic pairs: marginals along
// each sampled permutation and its reverse. Deterministic given the seed;
// per-permutation contributions merge in sample order. The per-sample
// telescoping keeps sum(phi) = v(N) - v(empty) to rounding.
std::vector<double> shapley_mc(const CharacteristicFn& v, size_t n_players, size_t n_permutations,
                               uint64_t seed);

struct ShapleyReport {
  std::vector<std::vector<double>> phi;  // layer x cell on the 16x6 grid
  size_t n_permutations = 0;
  uint64_t seed = 0;
  double v_empty = 0.0;  // validation accuracy, no cell active
  double v_full = 0.0;   // validation accuracy, every cell active
};

// Per-cell importance of a trained SuperNet: players are the 96 cells,
// v(S) is validation accuracy with exactly S active (one-shot weight
// sharing; fully masked layers contribute a zero vector).
ShapleyReport shapley_estimate(const SuperNet& net, const LabeledEmbeddings& val,
                               size_t n_permutations, uint64_t seed);

struct PrunePolicy {
  bool top_k = false;
  double tau = 0.0;  // keep cells with phi >= tau
  size_t k = 1;      // top-k per layer when top_k
};

// Applies the policy to the mask; the layer's max-phi cell is always
// retained, so the result is a valid net for any policy. The returned
// net's mask is final: fine-tuning must not change it.
SuperNet prune(const SuperNet& net, const ShapleyReport& report, const PrunePolicy& policy);

// `layer,cell,kind,phi` rows.
std::string shapley_to_csv(const ShapleyReport& report, const SuperNet& net);

}  // namespace sand
