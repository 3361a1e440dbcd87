#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace sand {

// Dense row-major matrix of 64-bit floats. Small fixed operation set with
// hand-written backward rules; no autodiff graph.
struct Matrix {
  size_t rows = 0, cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(size_t r, size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& at(size_t r, size_t c) { return data[r * cols + c]; }
  double at(size_t r, size_t c) const { return data[r * cols + c]; }
  size_t size() const { return data.size(); }
  bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }

  bool operator==(const Matrix& o) const { return rows == o.rows && cols == o.cols && data == o.data; }
};

bool all_finite(const Matrix& m);

// a (r x k) times b (k x c). The parallel kernel owns one output row per
// iteration with a fixed inner order, so it is bit-identical to the serial
// reference for any thread count.
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix matmul_serial(const Matrix& a, const Matrix& b);

// dC flows back as dA += dC * B^T, dB += A^T * dC.
void matmul_backward(const Matrix& a, const Matrix& b, const Matrix& dc, Matrix& da, Matrix& db);

Matrix transpose(const Matrix& a);
Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double s);
Matrix hadamard(const Matrix& a, const Matrix& b);
void accumulate(Matrix& into, const Matrix& inc);  // into += inc

Matrix relu(const Matrix& x);
Matrix relu_backward(const Matrix& x, const Matrix& dy);  // mask on x > 0

Matrix sigmoid(const Matrix& x);
Matrix sigmoid_backward(const Matrix& y, const Matrix& dy);  // y = sigmoid(x)

Matrix tanh_act(const Matrix& x);
Matrix tanh_backward(const Matrix& y, const Matrix& dy);  // y = tanh(x)

// Column-wise reduction over rows: (n x c) -> (1 x c).
Matrix row_sum(const Matrix& x);
Matrix row_sum_backward(const Matrix& dy, size_t rows);  // broadcast back to (rows x c)

// x (n x c) + bias (1 x c) broadcast over rows.
Matrix add_bias(const Matrix& x, const Matrix& bias);

// Mean softmax cross-entropy over the batch, numerically stable for any
// logit magnitude. labels[i] indexes the true class of row i.
struct SceResult {
  double loss = 0.0;
  Matrix dlogits;  // gradient of the mean loss
};
SceResult softmax_cross_entropy(const Matrix& logits, const std::vector<int>& labels);

// Trainable tensor: value plus gradient accumulator of the same shape.
struct Param {
  Matrix value;
  Matrix grad;
  std::string name;

  Param() = default;
  Param(Matrix v, std::string n = "") : value(std::move(v)), name(std::move(n)) {
    grad = Matrix(value.rows, value.cols, 0.0);
  }
  void zero_grad() { std::fill(grad.data.begin(), grad.data.end(), 0.0); }
};

struct OptimizerConfig {
  bool plain_sgd = false;  // plain step uses value -= lr * grad
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with bias correction. Moment buffers are sized on first use and
// keyed by position, so the same parameter list must be passed every step.
class Adam {
 public:
  explicit Adam(OptimizerConfig cfg = {}) : cfg_(cfg) {}

  void step(const std::vector<Param*>& params);
  uint64_t step_count() const { return step_; }
  const OptimizerConfig& config() const { return cfg_; }

 private:
  OptimizerConfig cfg_;
  uint64_t step_ = 0;
  std::vector<Matrix> m_, v_;
};

// Central-difference check of the populated analytic gradients against
// loss_fn, which must recompute the loss from the params' current values.
// Returns the max relative error |analytic - numeric| /
// max(1e-8, |analytic| + |numeric|).
double gradient_check(const std::function<double()>& loss_fn, const std::vector<Param*>& params,
                      double eps = 1e-5);

}  // namespace sand
