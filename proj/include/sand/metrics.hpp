#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sand/tensor.hpp"

namespace sand {

// Confusion-matrix statistics with Trojan (label 1) as the positive
// class. Undefined ratios report 0 with the matching flag cleared.
struct Metrics {
  uint64_t tp = 0, fp = 0, tn = 0, fn = 0;
  double accuracy = 0, recall = 0, precision = 0, f1 = 0;
  bool recall_defined = true, precision_defined = true, f1_defined = true;
};

Metrics compute_metrics(const std::vector<int>& predictions, const std::vector<int>& labels);

struct Pca2D {
  std::vector<double> x, y;          // per-sample coordinates
  std::vector<double> component[2];  // orthonormal directions
  double explained[2] = {0, 0};      // variance ratios, non-increasing
};

// Top-2 principal components by power iteration with deflation: fixed
// start vector, up to 1000 iterations or residual 1e-10; each component's
// first nonzero coordinate is made positive.
Pca2D pca2d(const Matrix& embeddings);

// Mean silhouette over plain Euclidean distances; both classes need at
// least 2 members.
double silhouette(const Matrix& embeddings, const std::vector<int>& labels);

}  // namespace sand
