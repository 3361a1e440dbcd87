#include "sand/shapley.hpp"

#include <algorithm>
#include <bit>
#include <sstream>

#include "sand/netlist.hpp"  // Error
#include "sand/rng.hpp"

namespace sand {

std::vector<double> exact_shapley(const CharacteristicFn& v, size_t n_players) {
  if (n_players == 0 || n_players > 12) throw Error("exact_shapley: player count must be in [1, 12]");
  const size_t n_masks = 1ULL << n_players;

  std::vector<double> value(n_masks);
  std::vector<uint8_t> active(n_players);
  for (size_t m = 0; m < n_masks; ++m) {
    for (size_t p = 0; p < n_players; ++p) active[p] = (m >> p) & 1;
    value[m] = v(active);
  }

  double fact[13];
  fact[0] = 1.0;
  for (int i = 1; i <= 12; ++i) fact[i] = fact[i - 1] * i;
  const double fn = fact[n_players];

  std::vector<double> phi(n_players, 0.0);
  for (size_t p = 0; p < n_players; ++p) {
    const size_t bit = 1ULL << p;
    for (size_t m = 0; m < n_masks; ++m) {
      if (m & bit) continue;
      int s = std::popcount(m);
      double w = fact[s] * fact[n_players - 1 - s] / fn;
      phi[p] += w * (value[m | bit] - value[m]);
    }
  }
  return phi;
}

std::vector<double> shapley_mc(const CharacteristicFn& v, size_t n_players, size_t n_permutations,
                               uint64_t seed) {
  if (n_players == 0) throw Error("shapley_mc: no players");
  if (n_permutations < 1) throw Error("shapley_mc: n_permutations must be >= 1");

  const size_t n_pairs = (n_permutations + 1) / 2;
  // marginals[sample][player]; samples ordered (pair0 fwd, pair0 rev, ...).
  std::vector<std::vector<double>> marginals(n_permutations, std::vector<double>(n_players, 0.0));

#pragma omp parallel for schedule(dynamic)
  for (int64_t pair = 0; pair < static_cast<int64_t>(n_pairs); ++pair) {
    Rng rng(derive_seed(seed, 0x53485030, static_cast<uint64_t>(pair)));
    std::vector<size_t> perm = rng.permutation(n_players);

    for (int dir = 0; dir < 2; ++dir) {
      size_t sample = static_cast<size_t>(pair) * 2 + static_cast<size_t>(dir);
      if (sample >= n_permutations) break;
      std::vector<uint8_t> active(n_players, 0);
      double prev = v(active);
      for (size_t i = 0; i < n_players; ++i) {
        size_t player = dir == 0 ? perm[i] : perm[n_players - 1 - i];
        active[player] = 1;
        double cur = v(active);
        marginals[sample][player] = cur - prev;
        prev = cur;
      }
    }
  }

  std::vector<double> phi(n_players, 0.0);
  for (size_t s = 0; s < n_permutations; ++s)
    for (size_t p = 0; p < n_players; ++p) phi[p] += marginals[s][p];
  const double inv = 1.0 / static_cast<double>(n_permutations);
  for (double& x : phi) x *= inv;
  return phi;
}

ShapleyReport shapley_estimate(const SuperNet& net, const LabeledEmbeddings& val,
                               size_t n_permutations, uint64_t seed) {
  if (val.size() == 0) throw Error("shapley_estimate: empty validation set");
  if (n_permutations < 1) throw Error("shapley_estimate: n_permutations must be >= 1");

  const size_t n_players = net.cell_count();
  auto v = [&](const std::vector<uint8_t>& active) {
    std::vector<std::vector<uint8_t>> mask(kSupernetLayers, std::vector<uint8_t>(kCellsPerLayer, 0));
    for (size_t p = 0; p < n_players; ++p) mask[p / kCellsPerLayer][p % kCellsPerLayer] = active[p];
    return supernet_accuracy(net, val, &mask, true);
  };

  std::vector<double> phi = shapley_mc(v, n_players, n_permutations, seed);

  ShapleyReport report;
  report.n_permutations = n_permutations;
  report.seed = seed;
  report.phi.assign(kSupernetLayers, std::vector<double>(kCellsPerLayer, 0.0));
  for (size_t p = 0; p < n_players; ++p) report.phi[p / kCellsPerLayer][p % kCellsPerLayer] = phi[p];
  report.v_empty = v(std::vector<uint8_t>(n_players, 0));
  report.v_full = v(std::vector<uint8_t>(n_players, 1));
  return report;
}

SuperNet prune(const SuperNet& net, const ShapleyReport& report, const PrunePolicy& policy) {
  SuperNet sub = net;
  for (size_t l = 0; l < kSupernetLayers; ++l) {
    const auto& phi = report.phi[l];
    std::vector<uint8_t> keep(kCellsPerLayer, 0);
    if (policy.top_k) {
      std::vector<size_t> order(kCellsPerLayer);
      for (size_t c = 0; c < kCellsPerLayer; ++c) order[c] = c;
      std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) { return phi[a] > phi[b]; });
      for (size_t i = 0; i < std::min(std::max<size_t>(policy.k, 1), kCellsPerLayer); ++i)
        keep[order[i]] = 1;
    } else {
      for (size_t c = 0; c < kCellsPerLayer; ++c) keep[c] = phi[c] >= policy.tau ? 1 : 0;
    }
    // The layer's best cell always survives.
    size_t best = 0;
    for (size_t c = 1; c < kCellsPerLayer; ++c)
      if (phi[c] > phi[best]) best = c;
    keep[best] = 1;
    sub.active_mask[l] = keep;
  }
  return sub;
}

std::string shapley_to_csv(const ShapleyReport& report, const SuperNet& net) {
  std::ostringstream out;
  out << "layer,cell,kind,phi\n";
  out.precision(17);
  for (size_t l = 0; l < report.phi.size(); ++l)
    for (size_t c = 0; c < report.phi[l].size(); ++c)
      out << l << "," << c << "," << cell_kind_name(net.layers[l][c].kind) << "," << report.phi[l][c]
          << "\n";
  return out.str();
}

}  // namespace sand
