#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sand/metrics.hpp"
#include "sand/pipeline.hpp"
#include "sand/shapley.hpp"

namespace sand {

// Desk corpus: c17 from bench_dir plus corpus_synth seeded synthetic
// circuits, each checked to host at least trigger_width rare nets.
// `sequential` switches the synthetic family to DFF-bearing circuits and
// drops c17.
std::vector<Netlist> desk_corpus(const PipelineConfig& config, bool sequential, uint64_t seed_tag = 0);

// One full run: dataset, encoder, SuperNet, SHAP pruning, held-out
// metrics for both the full net and the pruned SubNet.
struct PipelineRun {
  Dataset dataset;
  SplitView split;
  EncoderModel encoder;
  SuperNet supernet;
  SuperNet subnet;
  ShapleyReport shapley;
  Matrix all_z;
  Metrics full_metrics, sub_metrics;  // held-out
  double pruned_fraction = 0.0;
  std::vector<EpochLoss> encoder_history;
};

PipelineRun run_pipeline(const PipelineConfig& config, uint64_t seed, const std::vector<Netlist>& anchors,
                         bool with_shap = true);

struct SnapshotResult {
  size_t epoch;
  Pca2D pca;
  double silhouette_full;  // over the full-dimension embeddings
  std::string csv;         // sample_id,label,role,x,y
};

// Fig-4-shaped captures: trains the encoder once, snapshotting the model
// at the requested epochs.
std::vector<SnapshotResult> embedding_snapshots(const PipelineConfig& config, uint64_t seed,
                                                const std::vector<size_t>& epochs);

struct AblationArm {
  double silhouette = 0.0;
  double accuracy = 0.0;
};
struct AblationReport {
  AblationArm with_global, without_global;
  uint64_t manifest_hash_with = 0, manifest_hash_without = 0;
};
AblationReport ablation_global_loss(const PipelineConfig& config, uint64_t seed);

struct StabilityReport {
  std::vector<double> accuracies;
  double mean = 0.0, stddev = 0.0;
};
StabilityReport stability_trials(const PipelineConfig& config, size_t n_trials);
std::string stability_to_csv(const StabilityReport& report);

struct AdaptabilityReport {
  double seen = 0.0;         // held-out accuracy on the training family
  double unseen_pre = 0.0;   // sequential family before fine-tuning
  double unseen_post = 0.0;  // after fine-tuning the SubNet only
  double drop = 0.0;         // unseen_post - seen
  size_t epochs = 0;
};
AdaptabilityReport adaptability_experiment(const PipelineConfig& config);

}  // namespace sand
