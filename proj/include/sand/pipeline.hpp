#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sand/augment.hpp"
#include "sand/config.hpp"
#include "sand/encoder.hpp"
#include "sand/metrics.hpp"
#include "sand/model_io.hpp"
#include "sand/supernet.hpp"

namespace sand {

// Stage seed tags: every command derives its stream as
// derive_seed(config.seed, tag), so separately invoked stages reproduce
// the in-process pipeline exactly.
constexpr uint64_t kSeedTagSplit = 0x53484C;
constexpr uint64_t kSeedTagEncoder = 0x454E43;
constexpr uint64_t kSeedTagSupernet = 0x535550;
constexpr uint64_t kSeedTagShap = 0x534850;
constexpr uint64_t kSeedTagFinetune = 0x4654;

// Materialized dataset: sample records plus their graphs and the
// per-anchor grouping the contrastive loss trains on.
struct Dataset {
  SampleSet set;
  std::vector<GraphSample> graphs;  // parallel to set.records
  std::vector<AnchorGroup> groups;
};

Dataset dataset_from_sampleset(SampleSet set);

// Bench files plus manifest.csv and trojans.csv (the recorded
// distinguishing assignments) under `dir`.
void write_dataset(const SampleSet& set, const std::string& dir);
SampleSet read_dataset(const std::string& dir);

// Record-index split: anchors always train; each anchor's positives and
// negatives are split separately so both classes appear on both sides.
struct SplitView {
  std::vector<size_t> train, test;
  std::vector<uint8_t> is_test;  // per record
};
SplitView dataset_split(const SampleSet& set, double test_fraction, uint64_t seed);

// Training groups restricted to train-side members.
std::vector<AnchorGroup> train_groups(const Dataset& dataset, const SplitView& split);

Matrix embed_all(const EncoderModel& model, const Dataset& dataset);
LabeledEmbeddings select_embeddings(const Matrix& z, const Dataset& dataset,
                                    const std::vector<size_t>& idx);

// `sample_id,label,role,split,z0..` rows; full precision round-trip.
std::string embeddings_to_csv(const Dataset& dataset, const SplitView& split, const Matrix& z);

struct EmbeddingRows {
  std::vector<std::string> ids;
  std::vector<int> labels;
  std::vector<std::string> roles;
  std::vector<uint8_t> is_test;
  Matrix z;

  LabeledEmbeddings select(bool test_side) const;
};
EmbeddingRows read_embeddings_csv(const std::string& path);

// Filesystem helpers shared by commands.
void make_dirs(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);  // throws MissingArtifact
bool file_exists(const std::string& path);

// Creates out_dir and pins it to this config: a second run with a
// different config hash is refused instead of silently overwriting.
void ensure_run_dir(const PipelineConfig& config);

std::string metrics_to_csv(const Metrics& m);

}  // namespace sand
