#include "sand/supernet.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sand/netlist.hpp"  // Error
#include "sand/rng.hpp"

namespace sand {

const char* cell_kind_name(CellKind k) {
  switch (k) {
    case CellKind::DENSE: return "dense";
    case CellKind::CONV1D: return "conv1d";
    case CellKind::MAXPOOL: return "maxpool";
    case CellKind::AVGPOOL: return "avgpool";
    case CellKind::IDENTITY: return "identity";
    case CellKind::RELU_GATE: return "relu";
  }
  return "?";
}

bool is_pooling_layer(size_t layer_index) {
  // 1-based layers 4, 8, 12.
  return layer_index == 3 || layer_index == 7 || layer_index == 11;
}

std::vector<Param*> SuperNet::all_params() {
  std::vector<Param*> ps;
  for (auto& layer : layers) {
    for (Cell& c : layer) {
      if (c.weight.value.size()) ps.push_back(&c.weight);
      if (c.bias.value.size()) ps.push_back(&c.bias);
    }
  }
  ps.push_back(&head_w);
  ps.push_back(&head_b);
  return ps;
}

std::vector<Param*> SuperNet::active_params() {
  std::vector<Param*> ps;
  for (size_t l = 0; l < layers.size(); ++l) {
    for (size_t c = 0; c < layers[l].size(); ++c) {
      if (!active_mask[l][c]) continue;
      Cell& cell = layers[l][c];
      if (cell.weight.value.size()) ps.push_back(&cell.weight);
      if (cell.bias.value.size()) ps.push_back(&cell.bias);
    }
  }
  ps.push_back(&head_w);
  ps.push_back(&head_b);
  return ps;
}

SuperNet build_supernet(size_t input_len, uint64_t seed) {
  if (input_len < 8) throw Error("build_supernet: input_len must be >= 8");
  size_t len = input_len;
  for (size_t l = 0; l < kSupernetLayers; ++l)
    if (is_pooling_layer(l)) {
      if (len % 2 != 0 || len < 2) throw Error("build_supernet: input_len does not survive pooling");
      len /= 2;
    }

  SuperNet net;
  net.input_len = input_len;
  Rng rng(derive_seed(seed, 0x4E4153));

  auto uniform = [&](size_t r, size_t c, double scale) {
    Matrix m(r, c);
    for (double& v : m.data) v = rng.next_symmetric(scale);
    return m;
  };

  len = input_len;
  for (size_t l = 0; l < kSupernetLayers; ++l) {
    size_t out = is_pooling_layer(l) ? len / 2 : len;
    net.in_len.push_back(len);
    net.out_len.push_back(out);
    std::vector<Cell> layer;
    for (size_t c = 0; c < kCellsPerLayer; ++c) {
      Cell cell;
      cell.kind = static_cast<CellKind>(c);
      switch (cell.kind) {
        case CellKind::DENSE:
          cell.weight = Param(uniform(len, out, 1.0 / std::sqrt(static_cast<double>(len))), "");
          cell.bias = Param(Matrix(1, out, 0.0), "");
          break;
        case CellKind::CONV1D:
          cell.weight = Param(uniform(1, 3, 1.0 / std::sqrt(3.0)), "");
          cell.bias = Param(Matrix(1, 1, 0.0), "");
          break;
        default:
          break;
      }
      layer.push_back(std::move(cell));
    }
    net.layers.push_back(std::move(layer));
    net.active_mask.emplace_back(kCellsPerLayer, 1);
    len = out;
  }
  net.head_w = Param(uniform(len, 2, 1.0 / std::sqrt(static_cast<double>(len))), "head_w");
  net.head_b = Param(Matrix(1, 2, 0.0), "head_b");
  return net;
}

namespace {

// Cell forward. Non-pooling layers preserve length (stride 1, padded);
// pooling layers halve it (stride 2).
Matrix cell_forward(const Cell& cell, const Matrix& x, bool pool, CellCache* cache) {
  const size_t n = x.rows, li = x.cols;
  const size_t lo = pool ? li / 2 : li;
  Matrix y(n, lo, 0.0);
  switch (cell.kind) {
    case CellKind::DENSE:
      y = add_bias(matmul(x, cell.weight.value), cell.bias.value);
      break;
    case CellKind::CONV1D: {
      const double w0 = cell.weight.value.data[0], w1 = cell.weight.value.data[1],
                   w2 = cell.weight.value.data[2];
      const double b = cell.bias.value.data[0];
      const size_t stride = pool ? 2 : 1;
      for (size_t r = 0; r < n; ++r) {
        const double* xr = &x.data[r * li];
        double* yr = &y.data[r * lo];
        for (size_t j = 0; j < lo; ++j) {
          size_t c = j * stride;  // window covers c-1, c, c+1
          double acc = b + w1 * xr[c];
          if (c >= 1) acc += w0 * xr[c - 1];
          if (c + 1 < li) acc += w2 * xr[c + 1];
          yr[j] = acc;
        }
      }
      break;
    }
    case CellKind::MAXPOOL: {
      if (cache) cache->argmax.assign(n * lo, 0);
      for (size_t r = 0; r < n; ++r) {
        const double* xr = &x.data[r * li];
        double* yr = &y.data[r * lo];
        for (size_t j = 0; j < lo; ++j) {
          size_t a = pool ? 2 * j : j;
          size_t b2 = pool ? 2 * j + 1 : std::min(j + 1, li - 1);
          size_t arg = xr[a] >= xr[b2] ? a : b2;
          yr[j] = xr[arg];
          if (cache) cache->argmax[r * lo + j] = static_cast<uint32_t>(arg);
        }
      }
      break;
    }
    case CellKind::AVGPOOL: {
      for (size_t r = 0; r < n; ++r) {
        const double* xr = &x.data[r * li];
        double* yr = &y.data[r * lo];
        for (size_t j = 0; j < lo; ++j) {
          size_t a = pool ? 2 * j : j;
          size_t b2 = pool ? 2 * j + 1 : std::min(j + 1, li - 1);
          yr[j] = 0.5 * (xr[a] + xr[b2]);
        }
      }
      break;
    }
    case CellKind::IDENTITY: {
      for (size_t r = 0; r < n; ++r)
        for (size_t j = 0; j < lo; ++j) y.data[r * lo + j] = x.data[r * li + (pool ? 2 * j : j)];
      break;
    }
    case CellKind::RELU_GATE: {
      for (size_t r = 0; r < n; ++r)
        for (size_t j = 0; j < lo; ++j) {
          double v = x.data[r * li + (pool ? 2 * j : j)];
          y.data[r * lo + j] = v > 0.0 ? v : 0.0;
        }
      break;
    }
  }
  if (cache) cache->out = y;
  return y;
}

// Accumulates dx and the cell's parameter grads from dy.
void cell_backward(Cell& cell, const Matrix& x, const CellCache& cache, const Matrix& dy, bool pool,
                   Matrix& dx) {
  const size_t n = x.rows, li = x.cols, lo = dy.cols;
  switch (cell.kind) {
    case CellKind::DENSE: {
      matmul_backward(x, cell.weight.value, dy, dx, cell.weight.grad);
      for (size_t r = 0; r < n; ++r)
        for (size_t j = 0; j < lo; ++j) cell.bias.grad.data[j] += dy.at(r, j);
      break;
    }
    case CellKind::CONV1D: {
      const double w0 = cell.weight.value.data[0], w1 = cell.weight.value.data[1],
                   w2 = cell.weight.value.data[2];
      double g0 = 0, g1 = 0, g2 = 0, gb = 0;
      const size_t stride = pool ? 2 : 1;
      for (size_t r = 0; r < n; ++r) {
        const double* xr = &x.data[r * li];
        const double* dyr = &dy.data[r * lo];
        double* dxr = &dx.data[r * li];
        for (size_t j = 0; j < lo; ++j) {
          double d = dyr[j];
          size_t c = j * stride;
          gb += d;
          g1 += d * xr[c];
          dxr[c] += d * w1;
          if (c >= 1) {
            g0 += d * xr[c - 1];
            dxr[c - 1] += d * w0;
          }
          if (c + 1 < li) {
            g2 += d * xr[c + 1];
            dxr[c + 1] += d * w2;
          }
        }
      }
      cell.weight.grad.data[0] += g0;
      cell.weight.grad.data[1] += g1;
      cell.weight.grad.data[2] += g2;
      cell.bias.grad.data[0] += gb;
      break;
    }
    case CellKind::MAXPOOL: {
      for (size_t r = 0; r < n; ++r)
        for (size_t j = 0; j < lo; ++j) dx.data[r * li + cache.argmax[r * lo + j]] += dy.at(r, j);
      break;
    }
    case CellKind::AVGPOOL: {
      for (size_t r = 0; r < n; ++r)
        for (size_t j = 0; j < lo; ++j) {
          size_t a = pool ? 2 * j : j;
          size_t b2 = pool ? 2 * j + 1 : std::min(j + 1, li - 1);
          dx.data[r * li + a] += 0.5 * dy.at(r, j);
          dx.data[r * li + b2] += 0.5 * dy.at(r, j);
        }
      break;
    }
    case CellKind::IDENTITY: {
      for (size_t r = 0; r < n; ++r)
        for (size_t j = 0; j < lo; ++j) dx.data[r * li + (pool ? 2 * j : j)] += dy.at(r, j);
      break;
    }
    case CellKind::RELU_GATE: {
      for (size_t r = 0; r < n; ++r)
        for (size_t j = 0; j < lo; ++j) {
          size_t src = r * li + (pool ? 2 * j : j);
          if (x.data[src] > 0.0) dx.data[src] += dy.at(r, j);
        }
      break;
    }
  }
}

}  // namespace

Matrix layer_forward(const SuperNet& net, size_t layer_index, const Matrix& x,
                     const std::vector<uint8_t>& mask, bool allow_empty,
                     std::vector<CellCache>* caches) {
  const bool pool = is_pooling_layer(layer_index);
  const size_t lo = net.out_len[layer_index];
  size_t n_active = 0;
  Matrix acc(x.rows, lo, 0.0);
  for (size_t c = 0; c < kCellsPerLayer; ++c) {
    if (!mask[c]) continue;
    CellCache* cc = caches ? &(*caches)[c] : nullptr;
    Matrix y = cell_forward(net.layers[layer_index][c], x, pool, cc);
    accumulate(acc, y);
    ++n_active;
  }
  if (n_active == 0) {
    if (!allow_empty) throw Error("layer_forward: all cells masked off in layer " + std::to_string(layer_index));
    return acc;  // zero vector contribution
  }
  return scale(acc, 1.0 / static_cast<double>(n_active));
}

Matrix supernet_forward(const SuperNet& net, const Matrix& x,
                        const std::vector<std::vector<uint8_t>>* mask, bool allow_empty,
                        NetCache* cache) {
  if (x.cols != net.input_len) throw Error("supernet_forward: embedding length mismatch");
  const auto& m = mask ? *mask : net.active_mask;
  Matrix cur = x;
  if (cache) {
    cache->layer_in.clear();
    cache->cells.assign(kSupernetLayers, std::vector<CellCache>(kCellsPerLayer));
    cache->n_active.assign(kSupernetLayers, 0);
  }
  for (size_t l = 0; l < kSupernetLayers; ++l) {
    if (cache) {
      cache->layer_in.push_back(cur);
      size_t n_active = 0;
      for (size_t c = 0; c < kCellsPerLayer; ++c) n_active += m[l][c] ? 1 : 0;
      cache->n_active[l] = n_active;
      cur = layer_forward(net, l, cur, m[l], allow_empty, &cache->cells[l]);
    } else {
      cur = layer_forward(net, l, cur, m[l], allow_empty, nullptr);
    }
  }
  if (cache) cache->final_in = cur;
  return add_bias(matmul(cur, net.head_w.value), net.head_b.value);
}

void supernet_backward(SuperNet& net, const NetCache& cache, const Matrix& dlogits,
                       const std::vector<std::vector<uint8_t>>* mask) {
  const auto& m = mask ? *mask : net.active_mask;
  Matrix dcur(cache.final_in.rows, cache.final_in.cols, 0.0);
  matmul_backward(cache.final_in, net.head_w.value, dlogits, dcur, net.head_w.grad);
  for (size_t r = 0; r < dlogits.rows; ++r)
    for (size_t j = 0; j < dlogits.cols; ++j) net.head_b.grad.data[j] += dlogits.at(r, j);

  for (size_t li = kSupernetLayers; li-- > 0;) {
    size_t n_active = cache.n_active[li];
    if (n_active == 0) {
      dcur = Matrix(cache.layer_in[li].rows, cache.layer_in[li].cols, 0.0);
      continue;
    }
    Matrix dy = scale(dcur, 1.0 / static_cast<double>(n_active));
    Matrix dx(cache.layer_in[li].rows, cache.layer_in[li].cols, 0.0);
    bool pool = is_pooling_layer(li);
    for (size_t c = 0; c < kCellsPerLayer; ++c) {
      if (!m[li][c]) continue;
      cell_backward(net.layers[li][c], cache.layer_in[li], cache.cells[li][c], dy, pool, dx);
    }
    dcur = std::move(dx);
  }
}

double supernet_accuracy(const SuperNet& net, const LabeledEmbeddings& data,
                         const std::vector<std::vector<uint8_t>>* mask, bool allow_empty) {
  if (data.size() == 0) throw Error("supernet_accuracy: empty data");
  Matrix logits = supernet_forward(net, data.z, mask, allow_empty, nullptr);
  size_t correct = 0;
  for (size_t i = 0; i < logits.rows; ++i) {
    int pred = logits.at(i, 1) > logits.at(i, 0) ? 1 : 0;  // tie -> 0
    if (pred == data.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(logits.rows);
}

// Per class, the first floor(frac * n) samples after a seeded shuffle go
// to validation.
void split_labeled(const LabeledEmbeddings& data, double val_fraction, uint64_t seed,
                   LabeledEmbeddings& train, LabeledEmbeddings& val) {
  std::vector<size_t> idx0, idx1;
  for (size_t i = 0; i < data.size(); ++i) (data.labels[i] == 0 ? idx0 : idx1).push_back(i);
  Rng rng(derive_seed(seed, 0x53504C49));
  rng.shuffle(idx0);
  rng.shuffle(idx1);

  std::vector<size_t> tr, va;
  for (auto* cls : {&idx0, &idx1}) {
    size_t n_val = static_cast<size_t>(std::floor(val_fraction * static_cast<double>(cls->size())));
    if (val_fraction > 0 && n_val == 0 && cls->size() > 1) n_val = 1;
    for (size_t i = 0; i < cls->size(); ++i) (i < n_val ? va : tr).push_back((*cls)[i]);
  }
  std::sort(tr.begin(), tr.end());
  std::sort(va.begin(), va.end());

  auto take = [&](const std::vector<size_t>& which, LabeledEmbeddings& out) {
    out.z = Matrix(which.size(), data.z.cols, 0.0);
    out.labels.clear();
    for (size_t i = 0; i < which.size(); ++i) {
      for (size_t j = 0; j < data.z.cols; ++j) out.z.at(i, j) = data.z.at(which[i], j);
      out.labels.push_back(data.labels[which[i]]);
    }
  };
  take(tr, train);
  take(va, val);
}

namespace {

SupernetTrainResult run_training(SuperNet& net, const LabeledEmbeddings& data, size_t epochs,
                                 const SupernetHyper& hyper, bool active_only) {
  bool has0 = false, has1 = false;
  for (int l : data.labels) (l == 0 ? has0 : has1) = true;
  if (!has0 || !has1) throw Error("supernet training: both classes must be present");

  LabeledEmbeddings train, val;
  split_labeled(data, hyper.val_fraction, hyper.seed, train, val);
  if (val.size() == 0) val = train;

  SupernetTrainResult res;
  res.val = val;
  Adam opt(hyper.opt);
  std::vector<Param*> params = active_only ? net.active_params() : net.all_params();

  const size_t bs = std::max<size_t>(1, hyper.batch_size);
  for (size_t epoch = 1; epoch <= epochs; ++epoch) {
    Rng rng(derive_seed(hyper.seed, 0x4E455030, epoch));
    std::vector<size_t> order = rng.permutation(train.size());

    double epoch_loss = 0;
    size_t batches = 0;
    for (size_t start = 0; start < order.size(); start += bs) {
      size_t end = std::min(order.size(), start + bs);
      Matrix xb(end - start, train.z.cols, 0.0);
      std::vector<int> yb(end - start);
      for (size_t i = start; i < end; ++i) {
        for (size_t j = 0; j < train.z.cols; ++j) xb.at(i - start, j) = train.z.at(order[i], j);
        yb[i - start] = train.labels[order[i]];
      }
      for (Param* p : params) p->zero_grad();
      NetCache cache;
      Matrix logits = supernet_forward(net, xb, nullptr, false, &cache);
      SceResult sce = softmax_cross_entropy(logits, yb);
      supernet_backward(net, cache, sce.dlogits, nullptr);
      opt.step(params);
      epoch_loss += sce.loss;
      ++batches;
    }
    SupernetEpoch e;
    e.loss = batches ? epoch_loss / static_cast<double>(batches) : 0.0;
    e.train_acc = supernet_accuracy(net, train);
    e.val_acc = supernet_accuracy(net, val);
    res.history.push_back(e);
  }
  return res;
}

}  // namespace

SupernetTrainResult train_supernet(SuperNet& net, const LabeledEmbeddings& data,
                                   const SupernetHyper& hyper) {
  return run_training(net, data, hyper.epochs, hyper, false);
}

SupernetTrainResult finetune(SuperNet& net, const LabeledEmbeddings& data, size_t epochs,
                             const SupernetHyper& hyper) {
  if (epochs < 1) throw Error("finetune: epochs must be >= 1");
  return run_training(net, data, epochs, hyper, true);
}

Classification classify(const SuperNet& net, const Matrix& z) {
  if (z.rows != 1 || z.cols != net.input_len) throw Error("classify: embedding length mismatch");
  Matrix logits = supernet_forward(net, z);
  double a = logits.at(0, 0), b = logits.at(0, 1);
  Classification c;
  c.label = b > a ? 1 : 0;  // tie -> 0
  double mx = std::max(a, b);
  double pa = std::exp(a - mx), pb = std::exp(b - mx);
  double chosen = c.label == 0 ? pa : pb;
  c.score = chosen / (pa + pb);
  return c;
}

std::string mask_to_text(const std::vector<std::vector<uint8_t>>& mask) {
  std::ostringstream out;
  for (const auto& row : mask) {
    for (uint8_t b : row) out << (b ? '1' : '0');
    out << "\n";
  }
  return out.str();
}

std::vector<std::vector<uint8_t>> mask_from_text(const std::string& text) {
  std::vector<std::vector<uint8_t>> mask;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<uint8_t> row;
    for (char ch : line)
      if (ch == '0' || ch == '1') row.push_back(ch == '1' ? 1 : 0);
    if (!row.empty()) mask.push_back(std::move(row));
  }
  return mask;
}

}  // namespace sand
