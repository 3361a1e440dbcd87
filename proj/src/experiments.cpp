#include "sand/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sand/bench_io.hpp"
#include "sand/rng.hpp"
#include "sand/synth.hpp"

namespace sand {

std::vector<Netlist> desk_corpus(const PipelineConfig& config, bool sequential, uint64_t seed_tag) {
  std::vector<Netlist> anchors;
  if (!sequential) {
    anchors.push_back(load_bench_file(config.bench_dir + "/c17.bench"));
  }

  uint64_t family = sequential ? 0x534551 : 0x434F4D;
  for (size_t i = 0; i < config.corpus_synth; ++i) {
    // Deterministic retry until the circuit hosts enough rare nets.
    for (uint64_t attempt = 0;; ++attempt) {
      SynthSpec spec;
      spec.seed = derive_seed(config.seed, family + seed_tag, i * 97 + attempt);
      Rng r(spec.seed);
      spec.n_gates = config.corpus_gates_min +
                     r.next_below(config.corpus_gates_max - config.corpus_gates_min + 1);
      spec.n_inputs = config.corpus_inputs;
      spec.n_outputs = config.corpus_outputs;
      spec.sequential = sequential;
      spec.name = (sequential ? "seq" : "comb") + std::to_string(i);
      Netlist nl = synth_circuit(spec);

      SignalProfile profile = random_signal_profile(nl, 2000, derive_seed(spec.seed, 0x434B));
      size_t rare = 0;
      for (const auto& [net, p1] : profile.probability)
        if (std::min(p1, 1.0 - p1) < config.augment.rarity_threshold) ++rare;
      if (rare >= config.augment.trigger_width) {
        anchors.push_back(std::move(nl));
        break;
      }
      if (attempt > 64) throw Error("desk_corpus: could not synthesize an injectable circuit");
    }
  }
  return anchors;
}

PipelineRun run_pipeline(const PipelineConfig& config, uint64_t seed, const std::vector<Netlist>& anchors,
                         bool with_shap) {
  PipelineRun run;

  AugmentConfig aug = config.augment;
  run.dataset = dataset_from_sampleset(make_dataset(anchors, aug, seed));
  run.split = dataset_split(run.dataset.set, config.test_fraction, derive_seed(seed, kSeedTagSplit));

  SslHyper ssl = config.ssl;
  ssl.seed = derive_seed(seed, kSeedTagEncoder);
  auto groups = train_groups(run.dataset, run.split);
  EncoderTrainResult enc = train_encoder(run.dataset.graphs, groups, ssl);
  run.encoder = std::move(enc.model);
  run.encoder_history = std::move(enc.history);

  run.all_z = embed_all(run.encoder, run.dataset);
  LabeledEmbeddings train_emb = select_embeddings(run.all_z, run.dataset, run.split.train);
  LabeledEmbeddings test_emb = select_embeddings(run.all_z, run.dataset, run.split.test);

  SupernetHyper sup = config.supernet;
  sup.seed = derive_seed(seed, kSeedTagSupernet);
  run.supernet = build_supernet(run.encoder.dims.dz, sup.seed);
  SupernetTrainResult sres = train_supernet(run.supernet, train_emb, sup);

  auto eval_net = [&](const SuperNet& net, const LabeledEmbeddings& data) {
    std::vector<int> preds;
    preds.reserve(data.size());
    for (size_t i = 0; i < data.size(); ++i) {
      Matrix zi(1, data.z.cols);
      for (size_t j = 0; j < data.z.cols; ++j) zi.data[j] = data.z.at(i, j);
      preds.push_back(classify(net, zi).label);
    }
    return compute_metrics(preds, data.labels);
  };

  run.full_metrics = eval_net(run.supernet, test_emb);

  if (with_shap) {
    run.shapley = shapley_estimate(run.supernet, sres.val, config.n_permutations,
                                   derive_seed(seed, kSeedTagShap));
    PrunePolicy policy;
    policy.tau = config.prune_tau;
    run.subnet = prune(run.supernet, run.shapley, policy);
    size_t kept = 0;
    for (const auto& row : run.subnet.active_mask)
      for (uint8_t b : row) kept += b;
    run.pruned_fraction =
        1.0 - static_cast<double>(kept) / static_cast<double>(run.subnet.cell_count());
    run.sub_metrics = eval_net(run.subnet, test_emb);
  }
  return run;
}

std::vector<SnapshotResult> embedding_snapshots(const PipelineConfig& config, uint64_t seed,
                                                const std::vector<size_t>& epochs) {
  SslHyper ssl = config.ssl;
  for (size_t e : epochs)
    if (e > ssl.epochs)
      throw Error("embedding_snapshots: capture epoch " + std::to_string(e) +
                  " exceeds the training budget");

  std::vector<Netlist> anchors = desk_corpus(config, false);
  Dataset dataset = dataset_from_sampleset(make_dataset(anchors, config.augment, seed));
  SplitView split = dataset_split(dataset.set, config.test_fraction, derive_seed(seed, kSeedTagSplit));
  ssl.seed = derive_seed(seed, kSeedTagEncoder);

  std::vector<SnapshotResult> results;
  auto capture = [&](size_t epoch, const EncoderModel& model) {
    if (std::find(epochs.begin(), epochs.end(), epoch) == epochs.end()) return;
    Matrix z = embed_all(model, dataset);
    SnapshotResult snap;
    snap.epoch = epoch;
    snap.pca = pca2d(z);
    std::vector<int> labels;
    for (const auto& r : dataset.set.records) labels.push_back(r.label);
    snap.silhouette_full = silhouette(z, labels);
    std::ostringstream csv;
    csv << "sample_id,label,role,x,y\n";
    csv.precision(17);
    for (size_t i = 0; i < dataset.set.records.size(); ++i) {
      const SampleRecord& r = dataset.set.records[i];
      csv << r.id << "," << r.label << "," << sample_role_name(r.role) << "," << snap.pca.x[i] << ","
          << snap.pca.y[i] << "\n";
    }
    snap.csv = csv.str();
    results.push_back(std::move(snap));
  };

  train_encoder(dataset.graphs, train_groups(dataset, split), ssl, capture);
  return results;
}

AblationReport ablation_global_loss(const PipelineConfig& config, uint64_t seed) {
  std::vector<Netlist> anchors = desk_corpus(config, false);

  auto run_arm = [&](double lambda_global, uint64_t* manifest_hash) {
    PipelineConfig arm = config;
    arm.ssl.lambda_global = lambda_global;
    PipelineRun run = run_pipeline(arm, seed, anchors, false);
    std::string manifest = manifest_csv(run.dataset.set, arm.dataset_dir);
    *manifest_hash = fnv1a64(reinterpret_cast<const uint8_t*>(manifest.data()), manifest.size());
    std::vector<int> labels;
    for (const auto& r : run.dataset.set.records) labels.push_back(r.label);
    AblationArm out;
    out.silhouette = silhouette(run.all_z, labels);
    out.accuracy = run.full_metrics.accuracy;
    return out;
  };

  AblationReport report;
  report.with_global = run_arm(config.ssl.lambda_global, &report.manifest_hash_with);
  report.without_global = run_arm(0.0, &report.manifest_hash_without);
  return report;
}

StabilityReport stability_trials(const PipelineConfig& config, size_t n_trials) {
  if (n_trials < 2) throw Error("stability_trials: n_trials must be >= 2");
  std::vector<Netlist> anchors = desk_corpus(config, false);

  StabilityReport report;
  for (size_t t = 0; t < n_trials; ++t) {
    uint64_t trial_seed = derive_seed(config.seed, 0x545249414C, t);
    PipelineRun run = run_pipeline(config, trial_seed, anchors, true);
    report.accuracies.push_back(run.sub_metrics.accuracy);
  }

  double mean = 0.0;
  for (double a : report.accuracies) mean += a;
  mean /= static_cast<double>(report.accuracies.size());
  double var = 0.0;
  for (double a : report.accuracies) var += (a - mean) * (a - mean);
  var /= static_cast<double>(report.accuracies.size() - 1);
  report.mean = mean;
  report.stddev = std::sqrt(var);
  return report;
}

std::string stability_to_csv(const StabilityReport& report) {
  std::ostringstream out;
  out << "trial,accuracy\n";
  out.precision(17);
  for (size_t i = 0; i < report.accuracies.size(); ++i) out << i << "," << report.accuracies[i] << "\n";
  return out.str();
}

AdaptabilityReport adaptability_experiment(const PipelineConfig& config) {
  // Seen family: combinational. Unseen family: sequential synthetics.
  std::vector<Netlist> seen_anchors = desk_corpus(config, false);
  std::vector<Netlist> unseen_anchors = desk_corpus(config, true);

  PipelineRun run = run_pipeline(config, config.seed, seen_anchors, true);

  Dataset unseen =
      dataset_from_sampleset(make_dataset(unseen_anchors, config.augment, derive_seed(config.seed, 0x554E53)));
  SplitView usplit = dataset_split(unseen.set, config.test_fraction, derive_seed(config.seed, kSeedTagSplit));

  // Encoder frozen: embeddings only.
  Matrix uz = embed_all(run.encoder, unseen);
  LabeledEmbeddings utrain = select_embeddings(uz, unseen, usplit.train);
  LabeledEmbeddings utest = select_embeddings(uz, unseen, usplit.test);

  auto acc = [&](const SuperNet& net, const LabeledEmbeddings& d) {
    return supernet_accuracy(net, d);
  };

  AdaptabilityReport report;
  report.seen = run.sub_metrics.accuracy;
  report.unseen_pre = acc(run.subnet, utest);

  SupernetHyper ft = config.supernet;
  ft.seed = derive_seed(config.seed, kSeedTagFinetune);
  finetune(run.subnet, utrain, config.finetune_epochs, ft);

  report.unseen_post = acc(run.subnet, utest);
  report.drop = report.unseen_post - report.seen;
  report.epochs = config.finetune_epochs;
  return report;
}

}  // namespace sand
