#include "sand/metrics.hpp"

#include <cmath>

#include "sand/netlist.hpp"  // Error
#include "sand/rng.hpp"

namespace sand {

Metrics compute_metrics(const std::vector<int>& predictions, const std::vector<int>& labels) {
  if (predictions.size() != labels.size()) throw Error("compute_metrics: length mismatch");
  if (predictions.empty()) throw Error("compute_metrics: empty input");

  Metrics m;
  for (size_t i = 0; i < predictions.size(); ++i) {
    bool pred = predictions[i] == 1, truth = labels[i] == 1;
    if (pred && truth) ++m.tp;
    else if (pred && !truth) ++m.fp;
    else if (!pred && truth) ++m.fn;
    else ++m.tn;
  }
  const double total = static_cast<double>(predictions.size());
  m.accuracy = static_cast<double>(m.tp + m.tn) / total;

  if (m.tp + m.fn > 0) {
    m.recall = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn);
  } else {
    m.recall = 0.0;
    m.recall_defined = false;
  }
  if (m.tp + m.fp > 0) {
    m.precision = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp);
  } else {
    m.precision = 0.0;
    m.precision_defined = false;
  }
  if (m.precision + m.recall > 0.0 && m.precision_defined && m.recall_defined) {
    m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  } else if (m.precision + m.recall > 0.0) {
    // One side defined and positive; harmonic mean with the 0-flagged side.
    m.f1 = 0.0;
    m.f1_defined = false;
  } else {
    m.f1 = 0.0;
    m.f1_defined = false;
  }
  return m;
}

namespace {

// Deterministic pseudo-random start direction; practically never
// orthogonal to the principal eigenvector.
std::vector<double> start_vector(size_t d) {
  std::vector<double> v(d);
  double norm = 0.0;
  for (size_t i = 0; i < d; ++i) {
    v[i] = 0.25 + static_cast<double>(counter_hash(0x50434131, i) >> 11) * 0x1.0p-53;
    norm += v[i] * v[i];
  }
  norm = std::sqrt(norm);
  for (double& x : v) x /= norm;
  return v;
}

// Leading eigenpair of symmetric c by power iteration.
std::pair<double, std::vector<double>> power_iterate(const Matrix& c) {
  const size_t d = c.rows;
  std::vector<double> v = start_vector(d), w(d);
  double lambda = 0.0;
  for (size_t iter = 0; iter < 1000; ++iter) {
    for (size_t i = 0; i < d; ++i) {
      double acc = 0.0;
      for (size_t j = 0; j < d; ++j) acc += c.at(i, j) * v[j];
      w[i] = acc;
    }
    double norm = 0.0;
    for (double x : w) norm += x * x;
    norm = std::sqrt(norm);
    if (norm == 0.0) break;  // v in the null space; eigenvalue 0
    for (size_t i = 0; i < d; ++i) w[i] /= norm;

    lambda = 0.0;
    for (size_t i = 0; i < d; ++i) {
      double acc = 0.0;
      for (size_t j = 0; j < d; ++j) acc += c.at(i, j) * w[j];
      lambda += w[i] * acc;
    }
    double residual = 0.0;
    for (size_t i = 0; i < d; ++i) {
      double acc = 0.0;
      for (size_t j = 0; j < d; ++j) acc += c.at(i, j) * w[j];
      double r = acc - lambda * w[i];
      residual += r * r;
    }
    v = w;
    if (std::sqrt(residual) <= 1e-10 * std::max(1.0, std::abs(lambda))) break;
  }
  return {lambda, v};
}

void fix_sign(std::vector<double>& v) {
  for (double x : v) {
    if (x != 0.0) {
      if (x < 0.0)
        for (double& y : v) y = -y;
      return;
    }
  }
}

}  // namespace

Pca2D pca2d(const Matrix& embeddings) {
  const size_t n = embeddings.rows, d = embeddings.cols;
  if (n < 3) throw Error("pca2d: need at least 3 samples");
  if (d < 2) throw Error("pca2d: need dimension >= 2");

  // Mean-center.
  std::vector<double> mean(d, 0.0);
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < d; ++j) mean[j] += embeddings.at(i, j);
  for (double& x : mean) x /= static_cast<double>(n);

  Matrix centered(n, d);
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < d; ++j) centered.at(i, j) = embeddings.at(i, j) - mean[j];

  // Covariance (population normalization; ratios are unaffected).
  Matrix cov(d, d, 0.0);
  for (size_t i = 0; i < n; ++i)
    for (size_t a = 0; a < d; ++a) {
      double va = centered.at(i, a);
      if (va == 0.0) continue;
      for (size_t b = 0; b < d; ++b) cov.at(a, b) += va * centered.at(i, b);
    }
  for (double& x : cov.data) x /= static_cast<double>(n);

  double trace = 0.0;
  for (size_t a = 0; a < d; ++a) trace += cov.at(a, a);
  if (trace <= 0.0) throw Error("pca2d: rank-0 data (all points identical)");

  auto [l1, v1] = power_iterate(cov);
  Matrix deflated = cov;
  for (size_t a = 0; a < d; ++a)
    for (size_t b = 0; b < d; ++b) deflated.at(a, b) -= l1 * v1[a] * v1[b];
  auto [l2, v2] = power_iterate(deflated);

  fix_sign(v1);
  fix_sign(v2);

  Pca2D out;
  out.component[0] = v1;
  out.component[1] = v2;
  out.explained[0] = std::max(0.0, l1 / trace);
  out.explained[1] = std::max(0.0, l2 / trace);
  out.x.resize(n);
  out.y.resize(n);
  for (size_t i = 0; i < n; ++i) {
    double px = 0.0, py = 0.0;
    for (size_t j = 0; j < d; ++j) {
      px += centered.at(i, j) * v1[j];
      py += centered.at(i, j) * v2[j];
    }
    out.x[i] = px;
    out.y[i] = py;
  }
  return out;
}

double silhouette(const Matrix& embeddings, const std::vector<int>& labels) {
  const size_t n = embeddings.rows;
  if (labels.size() != n) throw Error("silhouette: length mismatch");
  size_t n0 = 0, n1 = 0;
  for (int l : labels) (l == 0 ? n0 : n1)++;
  if (n0 < 2 || n1 < 2) throw Error("silhouette: both classes need at least 2 members");

  auto dist = [&](size_t i, size_t j) {
    double acc = 0.0;
    for (size_t c = 0; c < embeddings.cols; ++c) {
      double t = embeddings.at(i, c) - embeddings.at(j, c);
      acc += t * t;
    }
    return std::sqrt(acc);
  };

  double total = 0.0;
  for (size_t i = 0; i < n; ++i) {
    double same = 0.0, other = 0.0;
    size_t n_same = 0, n_other = 0;
    for (size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      if (labels[j] == labels[i]) {
        same += dist(i, j);
        ++n_same;
      } else {
        other += dist(i, j);
        ++n_other;
      }
    }
    double a = same / static_cast<double>(n_same);
    double b = other / static_cast<double>(n_other);
    double denom = std::max(a, b);
    total += denom > 0.0 ? (b - a) / denom : 0.0;
  }
  return total / static_cast<double>(n);
}

}  // namespace sand
