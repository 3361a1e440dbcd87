#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sand/rng.hpp"
#include "sand/netlist.hpp"
#include "sand/shapley.hpp"

using namespace sand;

namespace {

size_t popcount_mask(const std::vector<uint8_t>& active) {
  size_t n = 0;
  for (uint8_t a : active) n += a;
  return n;
}

LabeledEmbeddings toy_val(uint64_t seed) {
  Rng rng(seed);
  LabeledEmbeddings d;
  d.z = Matrix(12, 32);
  for (size_t i = 0; i < 12; ++i) {
    d.labels.push_back(i % 2);
    for (size_t j = 0; j < 32; ++j) d.z.at(i, j) = rng.next_symmetric(1.0) + (i % 2 ? 0.5 : -0.5);
  }
  return d;
}

}  // namespace

TEST_CASE("two-player closed form") {
  // v({1}) = 1, v({2}) = 0, v({1,2}) = 1.
  auto v = [](const std::vector<uint8_t>& a) { return a[0] ? 1.0 : 0.0; };
  auto phi = exact_shapley(v, 2);
  CHECK(phi[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(phi[1] == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("additive game gives one to every player") {
  auto v = [](const std::vector<uint8_t>& a) { return static_cast<double>(popcount_mask(a)); };
  for (size_t n : {3u, 7u, 12u}) {
    auto phi = exact_shapley(v, n);
    for (double p : phi) CHECK(p == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("null game gives zero to every player") {
  auto v = [](const std::vector<uint8_t>&) { return 0.0; };
  for (double p : exact_shapley(v, 5)) CHECK(p == 0.0);
}

TEST_CASE("dummy player has exactly zero value under exact enumeration") {
  // Player 2 never changes v.
  auto v = [](const std::vector<uint8_t>& a) {
    return 0.7 * a[0] + 0.2 * (a[1] && a[3] ? 1.0 : 0.0);
  };
  auto phi = exact_shapley(v, 4);
  CHECK(phi[2] == 0.0);
}

TEST_CASE("exact shapley is efficient: sums to v(N) - v(empty)") {
  Rng rng(5);
  std::vector<double> table(1u << 8);
  for (double& t : table) t = rng.next_double();
  auto v = [&](const std::vector<uint8_t>& a) {
    size_t m = 0;
    for (size_t i = 0; i < a.size(); ++i) m |= static_cast<size_t>(a[i] ? 1 : 0) << i;
    return table[m];
  };
  auto phi = exact_shapley(v, 8);
  double sum = 0.0;
  for (double p : phi) sum += p;
  CHECK(sum == doctest::Approx(table.back() - table.front()).epsilon(1e-12));
  CHECK_THROWS_AS(exact_shapley(v, 13), Error);
}

TEST_CASE("monte carlo matches exact enumeration within 0.05 on small games") {
  for (uint64_t game = 0; game < 3; ++game) {
    Rng rng(100 + game);
    size_t n = 8 + game;  // up to 10 players
    std::vector<double> table(1u << n);
    // Monotone-ish accuracy-like game in [0, 1].
    for (size_t m = 0; m < table.size(); ++m) {
      double frac = static_cast<double>(__builtin_popcountll(m)) / static_cast<double>(n);
      table[m] = 0.5 + 0.4 * frac + 0.1 * (rng.next_double() - 0.5);
    }
    auto v = [&](const std::vector<uint8_t>& a) {
      size_t m = 0;
      for (size_t i = 0; i < a.size(); ++i) m |= static_cast<size_t>(a[i] ? 1 : 0) << i;
      return table[m];
    };
    auto exact = exact_shapley(v, n);
    auto mc = shapley_mc(v, n, 2000, 42 + game);
    for (size_t i = 0; i < n; ++i) CHECK(std::abs(mc[i] - exact[i]) <= 0.05);

    // Per-run efficiency to 1e-12.
    double sum = 0.0, esum = 0.0;
    for (size_t i = 0; i < n; ++i) {
      sum += mc[i];
      esum += exact[i];
    }
    CHECK(sum == doctest::Approx(table.back() - table.front()).epsilon(1e-12));
    CHECK(esum == doctest::Approx(table.back() - table.front()).epsilon(1e-12));
  }
}

TEST_CASE("monte carlo estimates are deterministic given the seed") {
  auto v = [](const std::vector<uint8_t>& a) { return static_cast<double>(popcount_mask(a)) * 0.1; };
  auto a = shapley_mc(v, 6, 101, 7);
  auto b = shapley_mc(v, 6, 101, 7);
  CHECK(a == b);
  auto c = shapley_mc(v, 6, 101, 8);
  CHECK(a != c);
}

TEST_CASE("supernet estimate: zero head weights make every cell a dummy") {
  SuperNet net = build_supernet(32, 3);
  std::fill(net.head_w.value.data.begin(), net.head_w.value.data.end(), 0.0);
  std::fill(net.head_b.value.data.begin(), net.head_b.value.data.end(), 0.0);
  LabeledEmbeddings val = toy_val(1);
  ShapleyReport r = shapley_estimate(net, val, 40, 9);
  for (const auto& row : r.phi)
    for (double phi : row) CHECK(std::abs(phi) <= 0.02);
  CHECK(r.v_empty == r.v_full);
}

TEST_CASE("supernet estimate covers every cell and records the seeds") {
  SuperNet net = build_supernet(32, 4);
  LabeledEmbeddings val = toy_val(2);
  ShapleyReport r = shapley_estimate(net, val, 16, 11);
  CHECK(r.phi.size() == kSupernetLayers);
  for (const auto& row : r.phi) CHECK(row.size() == kCellsPerLayer);
  CHECK(r.n_permutations == 16);
  CHECK(r.seed == 11);

  // Efficiency on the real characteristic function.
  double sum = 0.0;
  for (const auto& row : r.phi)
    for (double phi : row) sum += phi;
  CHECK(sum == doctest::Approx(r.v_full - r.v_empty).epsilon(1e-10));

  std::string csv = shapley_to_csv(r, net);
  size_t lines = 0;
  for (char c : csv) lines += c == '\n';
  CHECK(lines == 97);  // header + 96 cells
}

TEST_CASE("prune: threshold extremes and per-layer retention") {
  SuperNet net = build_supernet(32, 6);
  LabeledEmbeddings val = toy_val(3);
  ShapleyReport r = shapley_estimate(net, val, 16, 13);

  PrunePolicy all;
  all.tau = -1e300;
  SuperNet full = prune(net, r, all);
  for (const auto& row : full.active_mask)
    for (uint8_t b : row) CHECK(b == 1);

  PrunePolicy none;
  none.tau = 1e300;
  SuperNet minimal = prune(net, r, none);
  for (size_t l = 0; l < kSupernetLayers; ++l) {
    size_t active = 0;
    for (uint8_t b : minimal.active_mask[l]) active += b;
    CHECK(active == 1);  // exactly the layer's max-phi cell
    size_t best = 0;
    for (size_t c = 1; c < kCellsPerLayer; ++c)
      if (r.phi[l][c] > r.phi[l][best]) best = c;
    CHECK(minimal.active_mask[l][best] == 1);
  }

  // Pruned nets always evaluate (at least one cell per layer).
  Matrix z(1, 32, 0.2);
  CHECK_NOTHROW(supernet_forward(minimal, z));

  PrunePolicy topk;
  topk.top_k = true;
  topk.k = 2;
  SuperNet two = prune(net, r, topk);
  for (const auto& row : two.active_mask) {
    size_t active = 0;
    for (uint8_t b : row) active += b;
    CHECK(active == 2);
  }
}
