#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "sand/circuit_graph.hpp"
#include "sand/tensor.hpp"

namespace sand {

struct EncoderDims {
  size_t f0 = kFeatureWidth;
  size_t d1 = 64, d2 = 64, d3 = 64;
  size_t dz = 32;
};

// Three GCN layers, global sum-pool readout, tanh projection. The GCN
// activation is ReLU; the projection activation is tanh so embeddings are
// bounded.
struct EncoderModel {
  EncoderDims dims;
  Param w1, w2, w3;  // f0 x d1, d1 x d2, d2 x d3
  Param wp, bp;      // d3 x dz, 1 x dz

  std::vector<Param*> params();
  std::vector<const Param*> params() const;

  static EncoderModel init(const EncoderDims& dims, uint64_t seed);
};

// Forward activations kept for backpropagation. p{l} = S * h{l} before the
// layer's weight product.
struct EmbedCache {
  Matrix p0, a1, h1;
  Matrix p1, a2, h2;
  Matrix p2, a3, h3;
  Matrix readout;  // 1 x d3
  Matrix z;        // 1 x dz
};

// z = tanh(readout(GCN(graph)) Wp + bp), a 1 x dz row.
Matrix embed(const CircuitGraph& graph, const EncoderModel& model, EmbedCache* cache = nullptr);

struct EncoderGrads {
  Matrix w1, w2, w3, wp, bp;
  explicit EncoderGrads(const EncoderDims& d);
  void add_into(EncoderModel& model) const;  // accumulate into model grads
};

// Backpropagate d(loss)/dz through one cached forward pass.
void embed_backward(const CircuitGraph& graph, const EncoderModel& model, const EmbedCache& cache,
                    const Matrix& dz, EncoderGrads& grads);

// Contrastive loss terms over embeddings (1 x dz rows).
double loss_positive(const Matrix& z_anchor, const std::vector<Matrix>& z_pos);
double loss_negative(const Matrix& z_anchor, const std::vector<Matrix>& z_neg, double margin);

// Class means; both classes must be present.
std::pair<Matrix, Matrix> centroids(const std::vector<Matrix>& embeddings, const std::vector<int>& labels);

double loss_global(const std::vector<Matrix>& embeddings, const std::vector<int>& labels,
                   const std::pair<Matrix, Matrix>& mu);

struct SslHyper {
  double margin = 1.0;
  double lambda_pos = 1.0, lambda_neg = 1.0, lambda_global = 0.5;
  size_t epochs = 150;
  size_t groups_per_batch = 2;  // whole anchor groups per mini-batch
  OptimizerConfig opt;
  uint64_t seed = 0;
  EncoderDims dims;
};

// One circuit prepared for training.
struct GraphSample {
  CircuitGraph graph;
  int label = 0;  // 0 benign, 1 malicious
  std::string id;
};

// Index view grouping an anchor with its own positives and negatives.
struct AnchorGroup {
  size_t anchor;
  std::vector<size_t> positives;
  std::vector<size_t> negatives;
};

struct EpochLoss {
  double lp = 0, ln = 0, lg = 0, total = 0;
};

struct EncoderTrainResult {
  EncoderModel model;
  std::vector<EpochLoss> history;  // one entry per epoch (mean batch loss)
};

// Called with (epoch, model) after `epoch` epochs have run; epoch 0 is the
// freshly initialized model.
using EpochCallback = std::function<void(size_t, const EncoderModel&)>;

EncoderTrainResult train_encoder(const std::vector<GraphSample>& samples,
                                 const std::vector<AnchorGroup>& groups, const SslHyper& hyper,
                                 const EpochCallback& callback = nullptr);

// Batch-local hybrid loss and its gradients w.r.t. the encoder parameters;
// the training step and the gradient-check oracle share this path.
struct BatchLoss {
  double lp = 0, ln = 0, lg = 0, total = 0;
};
BatchLoss hybrid_loss_and_grads(const std::vector<GraphSample>& samples,
                                const std::vector<AnchorGroup>& groups, EncoderModel& model,
                                const SslHyper& hyper, bool accumulate_grads);

std::string history_to_csv(const std::vector<EpochLoss>& history);

}  // namespace sand
