#include "sand/encoder.hpp"

#include <cmath>
#include <sstream>

#include "sand/rng.hpp"

namespace sand {

namespace {

Matrix uniform_init(size_t rows, size_t cols, double scale, Rng& rng) {
  Matrix m(rows, cols);
  for (double& v : m.data) v = rng.next_symmetric(scale);
  return m;
}

double squared_distance(const Matrix& a, const Matrix& b) {
  double d = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    double t = a.data[i] - b.data[i];
    d += t * t;
  }
  return d;
}

}  // namespace

std::vector<Param*> EncoderModel::params() { return {&w1, &w2, &w3, &wp, &bp}; }
std::vector<const Param*> EncoderModel::params() const { return {&w1, &w2, &w3, &wp, &bp}; }

EncoderModel EncoderModel::init(const EncoderDims& dims, uint64_t seed) {
  EncoderModel m;
  m.dims = dims;
  Rng rng(derive_seed(seed, 0x454E43));  // encoder stream
  m.w1 = Param(uniform_init(dims.f0, dims.d1, 1.0 / std::sqrt(static_cast<double>(dims.f0)), rng), "w1");
  m.w2 = Param(uniform_init(dims.d1, dims.d2, 1.0 / std::sqrt(static_cast<double>(dims.d1)), rng), "w2");
  m.w3 = Param(uniform_init(dims.d2, dims.d3, 1.0 / std::sqrt(static_cast<double>(dims.d2)), rng), "w3");
  m.wp = Param(uniform_init(dims.d3, dims.dz, 1.0 / std::sqrt(static_cast<double>(dims.d3)), rng), "wp");
  m.bp = Param(Matrix(1, dims.dz, 0.0), "bp");
  return m;
}

Matrix embed(const CircuitGraph& graph, const EncoderModel& model, EmbedCache* cache) {
  if (graph.node_features.cols != model.dims.f0) throw Error("embed: feature width mismatch");
  EmbedCache local;
  EmbedCache& c = cache ? *cache : local;

  c.p0 = propagate(graph, graph.node_features);
  c.a1 = matmul(c.p0, model.w1.value);
  c.h1 = relu(c.a1);
  c.p1 = propagate(graph, c.h1);
  c.a2 = matmul(c.p1, model.w2.value);
  c.h2 = relu(c.a2);
  c.p2 = propagate(graph, c.h2);
  c.a3 = matmul(c.p2, model.w3.value);
  c.h3 = relu(c.a3);
  c.readout = row_sum(c.h3);
  c.z = tanh_act(add_bias(matmul(c.readout, model.wp.value), model.bp.value));
  return c.z;
}

EncoderGrads::EncoderGrads(const EncoderDims& d)
    : w1(d.f0, d.d1, 0.0),
      w2(d.d1, d.d2, 0.0),
      w3(d.d2, d.d3, 0.0),
      wp(d.d3, d.dz, 0.0),
      bp(1, d.dz, 0.0) {}

void EncoderGrads::add_into(EncoderModel& model) const {
  accumulate(model.w1.grad, w1);
  accumulate(model.w2.grad, w2);
  accumulate(model.w3.grad, w3);
  accumulate(model.wp.grad, wp);
  accumulate(model.bp.grad, bp);
}

void embed_backward(const CircuitGraph& graph, const EncoderModel& model, const EmbedCache& cache,
                    const Matrix& dz, EncoderGrads& grads) {
  // Projection: z = tanh(readout * Wp + bp).
  Matrix dpre = tanh_backward(cache.z, dz);
  accumulate(grads.bp, dpre);
  Matrix dreadout(1, model.dims.d3, 0.0);
  matmul_backward(cache.readout, model.wp.value, dpre, dreadout, grads.wp);

  // Readout is a sum over nodes: broadcast back.
  Matrix dh3 = row_sum_backward(dreadout, cache.h3.rows);

  // Layer 3.
  Matrix da3 = relu_backward(cache.a3, dh3);
  Matrix dp2(cache.p2.rows, cache.p2.cols, 0.0);
  matmul_backward(cache.p2, model.w3.value, da3, dp2, grads.w3);
  Matrix dh2 = propagate(graph, dp2);  // S is symmetric

  // Layer 2.
  Matrix da2 = relu_backward(cache.a2, dh2);
  Matrix dp1(cache.p1.rows, cache.p1.cols, 0.0);
  matmul_backward(cache.p1, model.w2.value, da2, dp1, grads.w2);
  Matrix dh1 = propagate(graph, dp1);

  // Layer 1.
  Matrix da1 = relu_backward(cache.a1, dh1);
  Matrix dp0(cache.p0.rows, cache.p0.cols, 0.0);
  matmul_backward(cache.p0, model.w1.value, da1, dp0, grads.w1);
}

double loss_positive(const Matrix& z_anchor, const std::vector<Matrix>& z_pos) {
  if (z_pos.empty()) throw Error("loss_positive: empty positive list");
  double total = 0.0;
  for (const Matrix& z : z_pos) total += squared_distance(z_anchor, z);
  return total;
}

double loss_negative(const Matrix& z_anchor, const std::vector<Matrix>& z_neg, double margin) {
  if (z_neg.empty()) throw Error("loss_negative: empty negative list");
  if (margin <= 0.0) throw Error("loss_negative: margin must be positive");
  double total = 0.0;
  for (const Matrix& z : z_neg) total += std::max(0.0, margin - squared_distance(z_anchor, z));
  return total;
}

std::pair<Matrix, Matrix> centroids(const std::vector<Matrix>& embeddings, const std::vector<int>& labels) {
  if (embeddings.size() != labels.size() || embeddings.empty()) throw Error("centroids: bad input");
  size_t dz = embeddings[0].cols;
  Matrix mu0(1, dz, 0.0), mu1(1, dz, 0.0);
  size_t n0 = 0, n1 = 0;
  for (size_t i = 0; i < embeddings.size(); ++i) {
    if (labels[i] == 0) {
      accumulate(mu0, embeddings[i]);
      ++n0;
    } else {
      accumulate(mu1, embeddings[i]);
      ++n1;
    }
  }
  if (n0 == 0 || n1 == 0) throw Error("centroids: a class is absent");
  return {scale(mu0, 1.0 / static_cast<double>(n0)), scale(mu1, 1.0 / static_cast<double>(n1))};
}

double loss_global(const std::vector<Matrix>& embeddings, const std::vector<int>& labels,
                   const std::pair<Matrix, Matrix>& mu) {
  if (embeddings.size() != labels.size()) throw Error("loss_global: size mismatch");
  double total = 0.0;
  for (size_t i = 0; i < embeddings.size(); ++i)
    total += squared_distance(embeddings[i], labels[i] == 0 ? mu.first : mu.second);
  return total;
}

BatchLoss hybrid_loss_and_grads(const std::vector<GraphSample>& samples,
                                const std::vector<AnchorGroup>& groups, EncoderModel& model,
                                const SslHyper& hyper, bool accumulate_grads) {
  // Members of this batch, in a fixed order: anchors, then their positives
  // and negatives group by group.
  std::vector<size_t> member;
  for (const AnchorGroup& g : groups) {
    member.push_back(g.anchor);
    member.insert(member.end(), g.positives.begin(), g.positives.end());
    member.insert(member.end(), g.negatives.begin(), g.negatives.end());
  }
  const size_t n = member.size();
  std::vector<size_t> slot_of(samples.size(), SIZE_MAX);
  for (size_t i = 0; i < n; ++i) slot_of[member[i]] = i;

  // Forward, parallel over graphs.
  std::vector<EmbedCache> caches(n);
#pragma omp parallel for schedule(dynamic)
  for (int64_t i = 0; i < static_cast<int64_t>(n); ++i)
    embed(samples[member[i]].graph, model, &caches[i]);

  std::vector<Matrix> z(n);
  std::vector<int> labels(n);
  for (size_t i = 0; i < n; ++i) {
    z[i] = caches[i].z;
    labels[i] = samples[member[i]].label;
  }

  // Batch-local class centroids (constants under backpropagation).
  size_t dz = model.dims.dz;
  Matrix mu0(1, dz, 0.0), mu1(1, dz, 0.0);
  size_t n0 = 0, n1 = 0;
  for (size_t i = 0; i < n; ++i) {
    if (labels[i] == 0) {
      accumulate(mu0, z[i]);
      ++n0;
    } else {
      accumulate(mu1, z[i]);
      ++n1;
    }
  }
  if (n0) mu0 = scale(mu0, 1.0 / static_cast<double>(n0));
  if (n1) mu1 = scale(mu1, 1.0 / static_cast<double>(n1));

  BatchLoss loss;
  std::vector<Matrix> dz_acc(n, Matrix(1, dz, 0.0));

  for (const AnchorGroup& g : groups) {
    size_t a = slot_of[g.anchor];
    for (size_t p : g.positives) {
      size_t ps = slot_of[p];
      Matrix diff = sub(z[a], z[ps]);
      loss.lp += squared_distance(z[a], z[ps]);
      accumulate(dz_acc[a], scale(diff, 2.0 * hyper.lambda_pos));
      accumulate(dz_acc[ps], scale(diff, -2.0 * hyper.lambda_pos));
    }
    for (size_t q : g.negatives) {
      size_t qs = slot_of[q];
      double d2 = squared_distance(z[a], z[qs]);
      if (d2 < hyper.margin) {
        loss.ln += hyper.margin - d2;
        Matrix diff = sub(z[a], z[qs]);
        accumulate(dz_acc[a], scale(diff, -2.0 * hyper.lambda_neg));
        accumulate(dz_acc[qs], scale(diff, 2.0 * hyper.lambda_neg));
      }
    }
  }
  for (size_t i = 0; i < n; ++i) {
    const Matrix& mu = labels[i] == 0 ? mu0 : mu1;
    if ((labels[i] == 0 && n0 == 0) || (labels[i] == 1 && n1 == 0)) continue;
    loss.lg += squared_distance(z[i], mu);
    accumulate(dz_acc[i], scale(sub(z[i], mu), 2.0 * hyper.lambda_global));
  }
  loss.total = hyper.lambda_pos * loss.lp + hyper.lambda_neg * loss.ln + hyper.lambda_global * loss.lg;

  if (accumulate_grads) {
    // Backward, parallel over graphs into per-graph buffers, merged in
    // member order so the sum is independent of the thread count.
    std::vector<EncoderGrads> grads(n, EncoderGrads(model.dims));
#pragma omp parallel for schedule(dynamic)
    for (int64_t i = 0; i < static_cast<int64_t>(n); ++i)
      embed_backward(samples[member[i]].graph, model, caches[i], dz_acc[i], grads[i]);
    for (size_t i = 0; i < n; ++i) grads[i].add_into(model);
  }
  return loss;
}

EncoderTrainResult train_encoder(const std::vector<GraphSample>& samples,
                                 const std::vector<AnchorGroup>& groups, const SslHyper& hyper,
                                 const EpochCallback& callback) {
  bool has_pos = false, has_neg = false;
  for (const AnchorGroup& g : groups) {
    has_pos |= !g.positives.empty();
    has_neg |= !g.negatives.empty();
  }
  if (groups.empty() || !has_pos || !has_neg)
    throw Error("train_encoder: need at least one anchor with a positive and a negative");

  EncoderTrainResult res;
  res.model = EncoderModel::init(hyper.dims, hyper.seed);
  Adam opt(hyper.opt);

  if (callback) callback(0, res.model);

  const size_t per_batch = std::max<size_t>(1, hyper.groups_per_batch);
  for (size_t epoch = 1; epoch <= hyper.epochs; ++epoch) {
    Rng rng(derive_seed(hyper.seed, 0x45504F43, epoch));
    std::vector<size_t> order = rng.permutation(groups.size());

    EpochLoss acc;
    size_t batches = 0;
    for (size_t start = 0; start < order.size(); start += per_batch) {
      std::vector<AnchorGroup> batch;
      for (size_t i = start; i < std::min(order.size(), start + per_batch); ++i)
        batch.push_back(groups[order[i]]);

      auto params = res.model.params();
      for (Param* p : params) p->zero_grad();
      BatchLoss loss = hybrid_loss_and_grads(samples, batch, res.model, hyper, true);
      opt.step(params);

      acc.lp += loss.lp;
      acc.ln += loss.ln;
      acc.lg += loss.lg;
      acc.total += loss.total;
      ++batches;
    }
    double inv = 1.0 / static_cast<double>(batches);
    res.history.push_back({acc.lp * inv, acc.ln * inv, acc.lg * inv, acc.total * inv});

    for (const Param* p : res.model.params())
      if (!all_finite(p->value)) throw Error("train_encoder: non-finite parameter at epoch " + std::to_string(epoch));

    if (callback) callback(epoch, res.model);
  }
  return res;
}

std::string history_to_csv(const std::vector<EpochLoss>& history) {
  std::ostringstream out;
  out << "epoch,L_P,L_N,L_G,L\n";
  out.precision(17);
  for (size_t i = 0; i < history.size(); ++i) {
    out << (i + 1) << "," << history[i].lp << "," << history[i].ln << "," << history[i].lg << ","
        << history[i].total << "\n";
  }
  return out.str();
}

}  // namespace sand
