#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sand/augment.hpp"
#include "sand/encoder.hpp"
#include "sand/supernet.hpp"

namespace sand {

// Everything a pipeline run needs, parsed from a flat `key = value` file
// (documented in the README). Flags override file values; unknown keys
// and out-of-range values are errors.
struct PipelineConfig {
  // Paths.
  std::string bench_dir = "data/iscas85";
  std::string dataset_dir = "out/dataset";
  std::string out_dir = "out";
  std::string model_path = "out/model.sandmdl";

  uint64_t seed = 1;

  AugmentConfig augment;
  SslHyper ssl;
  SupernetHyper supernet;

  size_t n_permutations = 200;
  double prune_tau = 0.0;
  size_t finetune_epochs = 7;

  double test_fraction = 0.4;  // dataset-level held-out split
  std::vector<size_t> snapshot_epochs = {0, 50, 150};
  size_t stability_trials = 20;

  // Synthetic desk-corpus settings used by the experiment runners.
  size_t corpus_synth = 5;
  size_t corpus_gates_min = 50, corpus_gates_max = 300;
  size_t corpus_inputs = 10, corpus_outputs = 4;
};

PipelineConfig parse_config_text(const std::string& text);
PipelineConfig load_config_file(const std::string& path);

// Canonical snapshot: fixed key order, full precision; equal configs
// produce identical text.
std::string config_to_text(const PipelineConfig& config);
uint64_t config_hash(const PipelineConfig& config);

// Applies one `key=value` override (CLI flags reuse the file schema).
void apply_override(PipelineConfig& config, const std::string& key, const std::string& value);

}  // namespace sand
