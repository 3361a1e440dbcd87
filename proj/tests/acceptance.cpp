// Acceptance suite: one pass/fail line per criterion, nonzero exit if
// any criterion fails. Criteria that are statistical run the median of
// three seeded repetitions; every tolerance is pinned here.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <vector>

#include "helpers.hpp"
#include "sand/augment.hpp"
#include "sand/bench_io.hpp"
#include "sand/experiments.hpp"
#include "sand/logicsim.hpp"
#include "sand/model_io.hpp"
#include "sand/pipeline.hpp"
#include "sand/rng.hpp"
#include "sand/shapley.hpp"
#include "sand/synth.hpp"

using namespace sand;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(int criterion, const std::string& what, bool pass, const std::string& detail = "") {
  std::printf("[%s] criterion %2d: %s%s%s\n", pass ? "PASS" : "FAIL", criterion, what.c_str(),
              detail.empty() ? "" : " -- ", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

double median3(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

PipelineConfig desk_config() {
  PipelineConfig cfg;
  cfg.bench_dir = std::string(SAND_DATA_DIR) + "/iscas85";
  cfg.seed = 2026;
  cfg.corpus_synth = 5;
  cfg.corpus_gates_min = 50;
  cfg.corpus_gates_max = 300;
  cfg.corpus_inputs = 10;
  cfg.corpus_outputs = 4;
  cfg.augment.n_pos = 7;
  cfg.augment.n_neg = 8;
  cfg.augment.trigger_width = 3;
  cfg.augment.rarity_threshold = 0.2;
  cfg.augment.reallocate_uninjectable = true;
  cfg.ssl.epochs = 150;
  cfg.supernet.epochs = 50;
  cfg.n_permutations = 128;
  cfg.prune_tau = 0.0;
  cfg.finetune_epochs = 7;
  cfg.test_fraction = 0.4;
  cfg.stability_trials = 20;
  return cfg;
}

// ---------------------------------------------------------------- 1
void criterion_parser() {
  auto start = Clock::now();
  bool ok = true;
  std::string detail;
  size_t n_files = 0;
  for (const auto& entry : std::filesystem::directory_iterator(std::string(SAND_DATA_DIR) + "/iscas85")) {
    if (entry.path().extension() != ".bench") continue;
    ++n_files;
    Netlist a = load_bench_file(entry.path().string());
    Netlist b = parse_bench(write_bench(a), a.name);
    if (!(a == b) || !validate(a).empty()) {
      ok = false;
      detail = "round-trip mismatch on " + entry.path().filename().string();
    }
  }
  double t = seconds_since(start);
  if (n_files == 0) ok = false;
  if (t >= 1.0) ok = false;
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%zu files, %.3fs", n_files, t);
  report(1, "parse/write round-trip on bundled ISCAS-85 files, < 1 s", ok, detail.empty() ? buf : detail);
}

// ---------------------------------------------------------------- 2+3
// Shared desk dataset for the simulation and trojan criteria.
void criterion_simulation_and_trojans(const PipelineConfig& cfg) {
  // Truth tables.
  bool tables_ok = true;
  {
    struct Row { const char* kind; int expected[4]; };
    const Row rows[] = {
        {"AND", {0, 0, 0, 1}}, {"OR", {0, 1, 1, 1}},  {"NAND", {1, 1, 1, 0}},
        {"NOR", {1, 0, 0, 0}}, {"XOR", {0, 1, 1, 0}}, {"XNOR", {1, 0, 0, 1}},
    };
    for (const Row& r : rows) {
      Netlist n = parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(y)\ny = " + std::string(r.kind) + "(a, b)");
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
          tables_ok &= simulate(n, {{"a", uint8_t(a)}, {"b", uint8_t(b)}}).at("y") == r.expected[a * 2 + b];
    }
    Netlist inv = parse_bench("INPUT(a)\nOUTPUT(y)\ny = NOT(a)");
    tables_ok &= simulate(inv, {{"a", 0}}).at("y") == 1 && simulate(inv, {{"a", 1}}).at("y") == 0;
    Netlist buf = parse_bench("INPUT(a)\nOUTPUT(y)\ny = BUFF(a)");
    tables_ok &= simulate(buf, {{"a", 0}}).at("y") == 0 && simulate(buf, {{"a", 1}}).at("y") == 1;
  }

  std::vector<Netlist> anchors = desk_corpus(cfg, false);
  SampleSet set = make_dataset(anchors, cfg.augment, cfg.seed);

  std::unordered_map<std::string, const Netlist*> anchor_by_name;
  for (const Netlist& a : anchors) anchor_by_name[a.name] = &a;

  // Every positive of an anchor with <= 12 frame inputs: exhaustive.
  bool positives_ok = true;
  size_t checked_pos = 0;
  for (const SampleRecord& r : set.records) {
    if (r.role != SampleRole::Positive) continue;
    const Netlist* anchor = anchor_by_name.at(r.origin);
    if (anchor->frame_inputs().size() > 12) continue;
    ++checked_pos;
    EqOptions eq;  // exhaustive
    bool equiv = r.transform == "extract" ? check_cone_equivalence(*anchor, r.circuit, eq).equivalent
                                          : check_equivalence(*anchor, r.circuit, eq).equivalent;
    positives_ok &= equiv;
  }

  // DeMorgan rewrites on <= 24-input circuits: exhaustive equivalence.
  bool demorgan_ok = true;
  for (const Netlist& a : anchors) {
    if (a.frame_inputs().size() > 24) continue;
    for (uint64_t s = 0; s < 4; ++s) {
      Netlist b = demorgan_rewrite(a, s, 1 + s % 3);
      EqOptions eq;
      demorgan_ok &= check_equivalence(a, b, eq).equivalent;
    }
  }

  char buf[160];
  std::snprintf(buf, sizeof(buf), "tables %s, %zu positives exhaustive, rewrites on %zu anchors",
                tables_ok ? "exact" : "WRONG", checked_pos, anchors.size());
  report(2, "simulation oracle: truth tables, positive equivalence, rewrites",
         tables_ok && positives_ok && demorgan_ok && checked_pos > 0, buf);

  // Criterion 3: every negative flips, rare firing on the recorded batch.
  bool flips_ok = true, rarity_ok = true;
  size_t n_neg = 0;
  for (const SampleRecord& r : set.records) {
    if (r.role != SampleRole::Negative) continue;
    ++n_neg;
    const Netlist* anchor = anchor_by_name.at(r.origin);
    const TrojanInfo& t = *r.trojan;

    auto ao = simulate_frame_outputs(*anchor, t.distinguishing);
    auto to = simulate_frame_outputs(r.circuit, t.distinguishing);
    bool flipped = false;
    for (const auto& [name, val] : ao) flipped |= to.at(name) != val;
    flips_ok &= flipped;

    // Independent recount of the firing frequency on the recorded batch.
    Simulator sim(*anchor);
    const size_t k = sim.frame_input_count();
    uint64_t fire = 0;
    std::vector<uint64_t> in_words(k), net_words;
    for (uint64_t block = 0; block * 64 < t.rarity_vectors; ++block) {
      uint64_t lane_mask = ~0ULL;
      if ((block + 1) * 64 > t.rarity_vectors) lane_mask = (1ULL << (t.rarity_vectors - block * 64)) - 1;
      for (size_t i = 0; i < k; ++i) in_words[i] = random_input_word(t.rarity_seed, block, i, k);
      sim.eval_words(in_words, net_words);
      uint64_t m = ~0ULL;
      for (size_t i = 0; i < t.trigger_nets.size(); ++i) {
        uint64_t w = net_words[sim.net_index(t.trigger_nets[i])];
        m &= t.trigger_polarity[i] ? w : ~w;
      }
      fire += std::popcount(m & lane_mask);
    }
    rarity_ok &= fire == t.fire_count;
    rarity_ok &= static_cast<double>(fire) / static_cast<double>(t.rarity_vectors) <= 0.01;
  }
  std::snprintf(buf, sizeof(buf), "%zu negatives, all flips %s, firing <= 1%% %s", n_neg,
                flips_ok ? "exact" : "WRONG", rarity_ok ? "yes" : "NO");
  report(3, "trojan soundness: distinguishing flips and rare triggers", flips_ok && rarity_ok && n_neg > 0,
         buf);
}

// ---------------------------------------------------------------- 4
void criterion_gcn_oracle() {
  bool ok = true;
  double worst = 0.0;
  for (uint64_t seed = 1; seed <= 3; ++seed) {
    SynthSpec spec;
    spec.seed = seed * 17;
    spec.n_gates = 12;  // <= 20 nodes
    spec.n_inputs = 4;
    spec.n_outputs = 2;
    CircuitGraph g = build_graph(synth_circuit(spec));
    if (g.node_count > 20) { ok = false; continue; }

    EncoderModel m = EncoderModel::init({}, seed);
    Matrix z = embed(g, m);
    auto oracle = sand::testing::naive_embed(g, m);
    for (size_t i = 0; i < z.size(); ++i) worst = std::max(worst, std::abs(z.data[i] - oracle[i]));

    Rng rng(seed);
    CircuitGraph pg = sand::testing::permute_graph(g, rng.permutation(g.node_count));
    Matrix pz = embed(pg, m);
    for (size_t i = 0; i < z.size(); ++i) ok &= std::abs(z.data[i] - pz.data[i]) <= 1e-9;
  }
  ok &= worst <= 1e-10;
  char buf[96];
  std::snprintf(buf, sizeof(buf), "max |embed - oracle| = %.2e", worst);
  report(4, "GCN embed matches the message-passing oracle, permutation-invariant", ok, buf);
}

// ---------------------------------------------------------------- 5
void criterion_gradients() {
  auto start = Clock::now();

  auto graph_of = [](uint64_t seed, size_t gates) {
    SynthSpec spec;
    spec.seed = seed;
    spec.n_gates = gates;
    spec.n_inputs = 4;
    spec.n_outputs = 2;
    return build_graph(synth_circuit(spec));
  };

  SslHyper hyper;  // spec-default dims 64/64/64/32
  hyper.margin = 4.0;
  hyper.seed = 3;

  // Two-graph batch: anchor plus negative (L_P vacuous, L_N and L_G live).
  std::vector<GraphSample> two;
  two.push_back({graph_of(5, 10), 0, "a"});
  two.push_back({graph_of(6, 11), 1, "n"});
  std::vector<AnchorGroup> two_groups{{0, {}, {1}}};

  EncoderModel model = EncoderModel::init(hyper.dims, 3);
  for (Param* p : model.params()) p->zero_grad();
  hybrid_loss_and_grads(two, two_groups, model, hyper, true);
  auto loss2 = [&]() { return hybrid_loss_and_grads(two, two_groups, model, hyper, false).total; };
  double err2 = gradient_check(loss2, model.params(), 1e-5);

  // Full-term batch: anchor, positive and negative.
  std::vector<GraphSample> three;
  three.push_back({graph_of(5, 10), 0, "a"});
  three.push_back({graph_of(7, 9), 0, "p"});
  three.push_back({graph_of(6, 11), 1, "n"});
  std::vector<AnchorGroup> three_groups{{0, {1}, {2}}};
  for (Param* p : model.params()) p->zero_grad();
  hybrid_loss_and_grads(three, three_groups, model, hyper, true);
  auto loss3 = [&]() { return hybrid_loss_and_grads(three, three_groups, model, hyper, false).total; };
  double err3 = gradient_check(loss3, model.params(), 1e-5);

  double t = seconds_since(start);
  bool ok = err2 <= 1e-4 && err3 <= 1e-4 && t < 60.0;
  char buf[128];
  std::snprintf(buf, sizeof(buf), "rel err %.2e (2-graph) %.2e (3-graph), %.1fs", err2, err3, t);
  report(5, "hybrid-loss gradient vs central differences on every parameter", ok, buf);
}

// ---------------------------------------------------------------- 6
void criterion_loss_algebra() {
  auto row = [](std::initializer_list<double> v) {
    Matrix m(1, v.size());
    m.data = v;
    return m;
  };
  bool ok = true;
  ok &= loss_positive(row({0, 0}), {row({0, 0})}) == 0.0;
  ok &= std::abs(loss_positive(row({0, 0}), {row({1, 0}), row({0, 2})}) - 5.0) <= 1e-12;
  ok &= loss_negative(row({0, 0}), {row({2, 0})}, 1.0) == 0.0;  // hinge inactive, exact
  ok &= std::abs(loss_negative(row({0, 0}), {row({0, 0})}, 1.0) - 1.0) <= 1e-12;
  ok &= std::abs(loss_negative(row({0, 0}), {row({std::sqrt(0.5), 0})}, 2.0) - 1.5) <= 1e-12;

  std::vector<Matrix> zs{row({0, 0}), row({2, 0}), row({5, 5}), row({5, 5})};
  std::vector<int> labels{0, 0, 1, 1};
  auto mu = centroids(zs, labels);
  ok &= std::abs(mu.first.data[0] - 1.0) <= 1e-12 && std::abs(mu.first.data[1]) <= 1e-12;
  ok &= std::abs(loss_global(zs, labels, mu) - 2.0) <= 1e-12;
  report(6, "loss algebra micro-cases exact to 1e-12", ok);
}

// ---------------------------------------------------------------- 7
void criterion_shapley_oracle() {
  bool ok = true;
  double worst = 0.0;
  for (uint64_t game = 0; game < 3; ++game) {
    size_t n = 8 + game;
    Rng rng(500 + game);
    std::vector<double> table(1u << n);
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
    auto mc = shapley_mc(v, n, 2000, 99 + game);
    double sum_mc = 0.0;
    for (size_t i = 0; i < n; ++i) {
      worst = std::max(worst, std::abs(mc[i] - exact[i]));
      sum_mc += mc[i];
    }
    ok &= std::abs(sum_mc - (table.back() - table.front())) <= 1e-12;
  }
  ok &= worst <= 0.05;

  // Dummy player exactly zero under exact enumeration.
  auto vd = [](const std::vector<uint8_t>& a) { return 0.3 * a[0] + 0.5 * (a[2] && a[3] ? 1 : 0); };
  ok &= exact_shapley(vd, 4)[1] == 0.0;

  char buf[96];
  std::snprintf(buf, sizeof(buf), "max |MC - exact| = %.4f (2000 antithetic perms)", worst);
  report(7, "Shapley: MC vs exact <= 0.05, efficiency 1e-12, dummy exact 0", ok, buf);
}

// ---------------------------------------------------------------- 8 + 9
void criterion_end_to_end(const PipelineConfig& cfg, std::vector<PipelineRun>& runs_out) {
  auto start = Clock::now();
  std::vector<Netlist> anchors = desk_corpus(cfg, false);

  std::vector<double> accs, f1s, pruned, sub_close;
  size_t benign = 0, trojaned = 0;
  for (uint64_t s = 0; s < 3; ++s) {
    PipelineRun run = run_pipeline(cfg, derive_seed(cfg.seed, 0x414343, s), anchors, true);
    accs.push_back(run.full_metrics.accuracy);
    f1s.push_back(run.full_metrics.f1);
    pruned.push_back(run.pruned_fraction);
    sub_close.push_back(run.sub_metrics.accuracy - run.full_metrics.accuracy);
    if (s == 0) {
      for (const auto& r : run.dataset.set.records) {
        benign += r.role == SampleRole::Positive;
        trojaned += r.role == SampleRole::Negative;
      }
    }
    runs_out.push_back(std::move(run));
  }
  double t = seconds_since(start);

  double med_acc = median3(accs), med_f1 = median3(f1s);
  bool ok8 = med_acc >= 0.90 && med_f1 >= 0.90 && t <= 900.0;
  char buf[192];
  std::snprintf(buf, sizeof(buf),
                "corpus c17+%zu synth, %zu benign variants + %zu trojaned; median acc %.3f f1 %.3f, %.0fs",
                anchors.size() - 1, benign, trojaned, med_acc, med_f1, t);
  report(8, "end-to-end desk run: held-out Acc/F1 >= 0.90 (median of 3 seeds)", ok8, buf);

  double med_pruned = median3(pruned);
  double med_gap = median3(sub_close);  // sub - full
  bool ok9 = med_pruned >= 0.30 && med_gap >= -0.02;
  std::snprintf(buf, sizeof(buf), "median pruned %.0f%%, median acc change %+.3f", med_pruned * 100.0,
                med_gap);
  report(9, "tau=0 pruning removes >= 30% of cells within 2 points of full", ok9, buf);
}

// ---------------------------------------------------------------- 10
void criterion_adaptability(const PipelineConfig& cfg) {
  AdaptabilityReport r = adaptability_experiment(cfg);
  bool ok = r.epochs <= 10 && r.unseen_post >= r.seen - 0.10;
  char buf[128];
  std::snprintf(buf, sizeof(buf), "seen %.3f, unseen %.3f (pre %.3f), drop %+.3f, %zu epochs", r.seen,
                r.unseen_post, r.unseen_pre, r.drop, r.epochs);
  report(10, "adaptability: <= 10 fine-tune epochs, drop <= 10 points", ok, buf);
}

// ---------------------------------------------------------------- 11
void criterion_embedding_evolution(const PipelineConfig& cfg) {
  std::vector<double> gains;
  for (uint64_t s = 0; s < 3; ++s) {
    auto snaps = embedding_snapshots(cfg, derive_seed(cfg.seed, 0x534E41, s), {0, cfg.ssl.epochs});
    double s0 = 0, s1 = 0;
    for (const auto& snap : snaps) (snap.epoch == 0 ? s0 : s1) = snap.silhouette_full;
    gains.push_back(s1 - s0);
  }
  double med_gain = median3(gains);

  std::vector<double> sil_gaps;
  for (uint64_t s = 0; s < 3; ++s) {
    AblationReport ab = ablation_global_loss(cfg, derive_seed(cfg.seed, 0x41424C, s));
    sil_gaps.push_back(ab.with_global.silhouette - ab.without_global.silhouette);
    if (ab.manifest_hash_with != ab.manifest_hash_without) sil_gaps.back() = -1e9;  // broken control
  }
  double med_gap = median3(sil_gaps);

  bool ok = med_gain > 0.0 && med_gap >= 0.0;
  char buf[128];
  std::snprintf(buf, sizeof(buf), "median silhouette gain %.3f; ablation median gap %+.3f", med_gain,
                med_gap);
  report(11, "silhouette rises over training; global-loss arm separates at least as well", ok, buf);
}

// ---------------------------------------------------------------- 12
void criterion_stability(const PipelineConfig& cfg) {
  StabilityReport r = stability_trials(cfg, cfg.stability_trials);
  bool ok = r.accuracies.size() == cfg.stability_trials && r.stddev <= 0.05;
  char buf[96];
  std::snprintf(buf, sizeof(buf), "%zu trials, mean %.3f, stddev %.4f", r.accuracies.size(), r.mean,
                r.stddev);
  report(12, "20 re-seeded trials: accuracy stddev <= 0.05", ok, buf);
}

// ---------------------------------------------------------------- 13
void criterion_determinism(const PipelineConfig& cfg) {
  std::vector<Netlist> anchors = desk_corpus(cfg, false);

  AugmentConfig aug = cfg.augment;
  SampleSet s1 = make_dataset(anchors, aug, cfg.seed);
  SampleSet s2 = make_dataset(anchors, aug, cfg.seed);
  bool manifests = manifest_csv(s1, "d") == manifest_csv(s2, "d");

  PipelineConfig small = cfg;
  small.ssl.epochs = 5;
  small.supernet.epochs = 5;
  small.n_permutations = 8;

  auto run_once = [&](std::string* emb_csv) {
    PipelineRun run = run_pipeline(small, small.seed, anchors, true);
    ModelContainer c;
    c.put_section(encoder_to_section(run.encoder));
    c.put_section(supernet_to_section(run.subnet));
    c.config_snapshot = config_to_text(small);
    *emb_csv = embeddings_to_csv(run.dataset, run.split, run.all_z);
    return serialize_model(c);
  };
  std::string emb1, emb2;
  auto bytes1 = run_once(&emb1);
  auto bytes2 = run_once(&emb2);
  bool models = bytes1 == bytes2;
  bool embeddings = emb1 == emb2;

  StabilityReport t1 = stability_trials(small, 2);
  StabilityReport t2 = stability_trials(small, 2);
  bool csvs = stability_to_csv(t1) == stability_to_csv(t2);

  bool ok = manifests && models && embeddings && csvs;
  char buf[128];
  std::snprintf(buf, sizeof(buf), "manifest %s, model bytes %s, embeddings %s, experiment csv %s",
                manifests ? "ok" : "DIFF", models ? "ok" : "DIFF", embeddings ? "ok" : "DIFF",
                csvs ? "ok" : "DIFF");
  report(13, "re-runs reproduce byte-identical artifacts", ok, buf);
}

}  // namespace

int main() {
  auto start = Clock::now();
  PipelineConfig cfg = desk_config();

  criterion_parser();
  criterion_simulation_and_trojans(cfg);
  criterion_gcn_oracle();
  criterion_gradients();
  criterion_loss_algebra();
  criterion_shapley_oracle();

  std::vector<PipelineRun> runs;
  criterion_end_to_end(cfg, runs);
  criterion_adaptability(cfg);
  criterion_embedding_evolution(cfg);
  criterion_stability(cfg);
  criterion_determinism(cfg);

  std::printf("acceptance: %s (%.0fs total)\n", g_failures == 0 ? "all criteria passed" : "FAILURES",
              seconds_since(start));
  return g_failures == 0 ? 0 : 1;
}
