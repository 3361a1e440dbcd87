#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sand/tensor.hpp"

namespace sand {

enum class CellKind : uint8_t { DENSE, CONV1D, MAXPOOL, AVGPOOL, IDENTITY, RELU_GATE };
constexpr size_t kCellsPerLayer = 6;
constexpr size_t kSupernetLayers = 16;

const char* cell_kind_name(CellKind k);

// One candidate operation. DENSE carries a full affine map, CONV1D a
// single width-3 kernel with bias; the rest are parameter-free.
struct Cell {
  CellKind kind;
  Param weight;
  Param bias;
};

struct LabeledEmbeddings {
  Matrix z;                 // n x d
  std::vector<int> labels;  // 0 benign, 1 malicious
  size_t size() const { return labels.size(); }
};

// 16 layers of 6 cells each over the embedding vector, mean-aggregated
// per layer, with a dense 2-logit head. Layers 4, 8 and 12 halve the
// vector length; all other layers preserve it.
struct SuperNet {
  size_t input_len = 0;
  std::vector<std::vector<Cell>> layers;          // kSupernetLayers x kCellsPerLayer
  std::vector<size_t> in_len, out_len;            // per layer
  std::vector<std::vector<uint8_t>> active_mask;  // 1 = active
  Param head_w, head_b;

  std::vector<Param*> all_params();
  std::vector<Param*> active_params();  // active cells + head
  size_t cell_count() const { return kSupernetLayers * kCellsPerLayer; }
};

bool is_pooling_layer(size_t layer_index);

SuperNet build_supernet(size_t input_len, uint64_t seed);

// Per-cell forward caches needed for backpropagation.
struct CellCache {
  Matrix out;
  std::vector<uint32_t> argmax;  // MAXPOOL routing
};
struct NetCache {
  std::vector<Matrix> layer_in;
  std::vector<std::vector<CellCache>> cells;
  std::vector<size_t> n_active;
  Matrix final_in;
};

// Mean of the active cells' outputs. Empty layers are an error in normal
// operation; coalition evaluation passes allow_empty and gets zeros.
Matrix layer_forward(const SuperNet& net, size_t layer_index, const Matrix& x,
                     const std::vector<uint8_t>& mask, bool allow_empty = false,
                     std::vector<CellCache>* caches = nullptr);

// Full forward to 2 logits under the given mask (defaults to the net's
// own active_mask).
Matrix supernet_forward(const SuperNet& net, const Matrix& x,
                        const std::vector<std::vector<uint8_t>>* mask = nullptr,
                        bool allow_empty = false, NetCache* cache = nullptr);

// Backpropagate dlogits through a cached forward; accumulates into the
// grads of every cell that participated.
void supernet_backward(SuperNet& net, const NetCache& cache, const Matrix& dlogits,
                       const std::vector<std::vector<uint8_t>>* mask = nullptr);

// Fraction of correct argmax predictions (ties resolve to label 0).
double supernet_accuracy(const SuperNet& net, const LabeledEmbeddings& data,
                         const std::vector<std::vector<uint8_t>>* mask = nullptr, bool allow_empty = false);

struct SupernetHyper {
  size_t epochs = 50;
  size_t batch_size = 16;
  OptimizerConfig opt;
  uint64_t seed = 0;
  double val_fraction = 0.25;  // deterministic stratified split
};

struct SupernetEpoch {
  double loss = 0, train_acc = 0, val_acc = 0;
};

struct SupernetTrainResult {
  std::vector<SupernetEpoch> history;
  LabeledEmbeddings val;  // the held-out split used for v(S)
};

// Deterministic stratified split shared by training and the SHAP stage.
void split_labeled(const LabeledEmbeddings& data, double val_fraction, uint64_t seed,
                   LabeledEmbeddings& train, LabeledEmbeddings& val);

// Softmax cross-entropy training of all cells and the head.
SupernetTrainResult train_supernet(SuperNet& net, const LabeledEmbeddings& data,
                                   const SupernetHyper& hyper);

// Updates only active cells and the head; masked cell weights stay
// bit-identical. The mask itself never changes.
SupernetTrainResult finetune(SuperNet& net, const LabeledEmbeddings& data, size_t epochs,
                             const SupernetHyper& hyper);

struct Classification {
  int label = 0;
  double score = 0.5;  // softmax probability of the predicted label
};
Classification classify(const SuperNet& net, const Matrix& z);

std::string mask_to_text(const std::vector<std::vector<uint8_t>>& mask);
std::vector<std::vector<uint8_t>> mask_from_text(const std::string& text);

}  // namespace sand
