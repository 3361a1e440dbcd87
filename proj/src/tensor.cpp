#include "sand/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "sand/netlist.hpp"  // sand::Error

namespace sand {

namespace {

void require_shape(bool ok, const char* what) {
  if (!ok) throw Error(std::string("shape mismatch in ") + what);
}

}  // namespace

bool all_finite(const Matrix& m) {
  return std::all_of(m.data.begin(), m.data.end(), [](double x) { return std::isfinite(x); });
}

Matrix matmul_serial(const Matrix& a, const Matrix& b) {
  require_shape(a.cols == b.rows, "matmul");
  Matrix c(a.rows, b.cols, 0.0);
  for (size_t i = 0; i < a.rows; ++i) {
    const double* arow = &a.data[i * a.cols];
    double* crow = &c.data[i * c.cols];
    for (size_t k = 0; k < a.cols; ++k) {
      double av = arow[k];
      if (av == 0.0) continue;
      const double* brow = &b.data[k * b.cols];
      for (size_t j = 0; j < b.cols; ++j) crow[j] += av * brow[j];
    }
  }
  return c;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  require_shape(a.cols == b.rows, "matmul");
  Matrix c(a.rows, b.cols, 0.0);
#ifdef _OPENMP
  if (!omp_in_parallel() && a.rows * b.cols * a.cols >= (1u << 16)) {
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < static_cast<int64_t>(a.rows); ++i) {
      const double* arow = &a.data[static_cast<size_t>(i) * a.cols];
      double* crow = &c.data[static_cast<size_t>(i) * c.cols];
      for (size_t k = 0; k < a.cols; ++k) {
        double av = arow[k];
        if (av == 0.0) continue;
        const double* brow = &b.data[k * b.cols];
        for (size_t j = 0; j < b.cols; ++j) crow[j] += av * brow[j];
      }
    }
    return c;
  }
#endif
  return matmul_serial(a, b);
}

void matmul_backward(const Matrix& a, const Matrix& b, const Matrix& dc, Matrix& da, Matrix& db) {
  require_shape(dc.rows == a.rows && dc.cols == b.cols && a.cols == b.rows, "matmul_backward");
  require_shape(da.same_shape(a) && db.same_shape(b), "matmul_backward grads");
  // dA += dC * B^T
  for (size_t i = 0; i < a.rows; ++i) {
    const double* dcrow = &dc.data[i * dc.cols];
    double* darow = &da.data[i * da.cols];
    for (size_t k = 0; k < a.cols; ++k) {
      const double* brow = &b.data[k * b.cols];
      double acc = 0.0;
      for (size_t j = 0; j < b.cols; ++j) acc += dcrow[j] * brow[j];
      darow[k] += acc;
    }
  }
  // dB += A^T * dC
  for (size_t i = 0; i < a.rows; ++i) {
    const double* arow = &a.data[i * a.cols];
    const double* dcrow = &dc.data[i * dc.cols];
    for (size_t k = 0; k < a.cols; ++k) {
      double av = arow[k];
      if (av == 0.0) continue;
      double* dbrow = &db.data[k * db.cols];
      for (size_t j = 0; j < dc.cols; ++j) dbrow[j] += av * dcrow[j];
    }
  }
}

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols, a.rows);
  for (size_t i = 0; i < a.rows; ++i)
    for (size_t j = 0; j < a.cols; ++j) t.at(j, i) = a.at(i, j);
  return t;
}

Matrix add(const Matrix& a, const Matrix& b) {
  require_shape(a.same_shape(b), "add");
  Matrix c = a;
  for (size_t i = 0; i < c.size(); ++i) c.data[i] += b.data[i];
  return c;
}

Matrix sub(const Matrix& a, const Matrix& b) {
  require_shape(a.same_shape(b), "sub");
  Matrix c = a;
  for (size_t i = 0; i < c.size(); ++i) c.data[i] -= b.data[i];
  return c;
}

Matrix scale(const Matrix& a, double s) {
  Matrix c = a;
  for (double& x : c.data) x *= s;
  return c;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
  require_shape(a.same_shape(b), "hadamard");
  Matrix c = a;
  for (size_t i = 0; i < c.size(); ++i) c.data[i] *= b.data[i];
  return c;
}

void accumulate(Matrix& into, const Matrix& inc) {
  require_shape(into.same_shape(inc), "accumulate");
  for (size_t i = 0; i < into.size(); ++i) into.data[i] += inc.data[i];
}

Matrix relu(const Matrix& x) {
  Matrix y = x;
  for (double& v : y.data) v = v > 0.0 ? v : 0.0;
  return y;
}

Matrix relu_backward(const Matrix& x, const Matrix& dy) {
  require_shape(x.same_shape(dy), "relu_backward");
  Matrix dx = dy;
  for (size_t i = 0; i < dx.size(); ++i)
    if (x.data[i] <= 0.0) dx.data[i] = 0.0;
  return dx;
}

Matrix sigmoid(const Matrix& x) {
  Matrix y = x;
  for (double& v : y.data) v = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
  return y;
}

Matrix sigmoid_backward(const Matrix& y, const Matrix& dy) {
  require_shape(y.same_shape(dy), "sigmoid_backward");
  Matrix dx = dy;
  for (size_t i = 0; i < dx.size(); ++i) dx.data[i] *= y.data[i] * (1.0 - y.data[i]);
  return dx;
}

Matrix tanh_act(const Matrix& x) {
  Matrix y = x;
  for (double& v : y.data) v = std::tanh(v);
  return y;
}

Matrix tanh_backward(const Matrix& y, const Matrix& dy) {
  require_shape(y.same_shape(dy), "tanh_backward");
  Matrix dx = dy;
  for (size_t i = 0; i < dx.size(); ++i) dx.data[i] *= 1.0 - y.data[i] * y.data[i];
  return dx;
}

Matrix row_sum(const Matrix& x) {
  Matrix s(1, x.cols, 0.0);
  for (size_t i = 0; i < x.rows; ++i)
    for (size_t j = 0; j < x.cols; ++j) s.data[j] += x.at(i, j);
  return s;
}

Matrix row_sum_backward(const Matrix& dy, size_t rows) {
  require_shape(dy.rows == 1, "row_sum_backward");
  Matrix dx(rows, dy.cols);
  for (size_t i = 0; i < rows; ++i)
    for (size_t j = 0; j < dy.cols; ++j) dx.at(i, j) = dy.data[j];
  return dx;
}

Matrix add_bias(const Matrix& x, const Matrix& bias) {
  require_shape(bias.rows == 1 && bias.cols == x.cols, "add_bias");
  Matrix y = x;
  for (size_t i = 0; i < x.rows; ++i)
    for (size_t j = 0; j < x.cols; ++j) y.at(i, j) += bias.data[j];
  return y;
}

SceResult softmax_cross_entropy(const Matrix& logits, const std::vector<int>& labels) {
  require_shape(logits.rows == labels.size(), "softmax_cross_entropy");
  SceResult res;
  res.dlogits = Matrix(logits.rows, logits.cols, 0.0);
  double total = 0.0;
  const double inv_batch = 1.0 / static_cast<double>(logits.rows);
  for (size_t i = 0; i < logits.rows; ++i) {
    int label = labels[i];
    if (label < 0 || static_cast<size_t>(label) >= logits.cols) throw Error("label out of range");
    double mx = logits.at(i, 0);
    for (size_t j = 1; j < logits.cols; ++j) mx = std::max(mx, logits.at(i, j));
    double denom = 0.0;
    for (size_t j = 0; j < logits.cols; ++j) denom += std::exp(logits.at(i, j) - mx);
    double log_denom = std::log(denom);
    total += -(logits.at(i, static_cast<size_t>(label)) - mx - log_denom);
    for (size_t j = 0; j < logits.cols; ++j) {
      double p = std::exp(logits.at(i, j) - mx) / denom;
      res.dlogits.at(i, j) = (p - (static_cast<size_t>(label) == j ? 1.0 : 0.0)) * inv_batch;
    }
  }
  res.loss = total * inv_batch;
  return res;
}

void Adam::step(const std::vector<Param*>& params) {
  if (m_.empty()) {
    for (const Param* p : params) {
      m_.emplace_back(p->value.rows, p->value.cols, 0.0);
      v_.emplace_back(p->value.rows, p->value.cols, 0.0);
    }
  }
  if (m_.size() != params.size()) throw Error("optimizer bound to a different parameter list");
  ++step_;

  if (cfg_.plain_sgd) {
    for (Param* p : params)
      for (size_t i = 0; i < p->value.size(); ++i) p->value.data[i] -= cfg_.lr * p->grad.data[i];
    return;
  }

  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
  for (size_t pi = 0; pi < params.size(); ++pi) {
    Param* p = params[pi];
    if (!m_[pi].same_shape(p->value)) throw Error("optimizer state shape mismatch");
    for (size_t i = 0; i < p->value.size(); ++i) {
      double g = p->grad.data[i];
      double& m = m_[pi].data[i];
      double& v = v_[pi].data[i];
      m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * g;
      v = cfg_.beta2 * v + (1.0 - cfg_.beta2) * g * g;
      double mhat = m / bc1;
      double vhat = v / bc2;
      p->value.data[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
}

double gradient_check(const std::function<double()>& loss_fn, const std::vector<Param*>& params,
                      double eps) {
  double worst = 0.0;
  for (Param* p : params) {
    for (size_t i = 0; i < p->value.size(); ++i) {
      double saved = p->value.data[i];
      p->value.data[i] = saved + eps;
      double fp = loss_fn();
      p->value.data[i] = saved - eps;
      double fm = loss_fn();
      p->value.data[i] = saved;
      double numeric = (fp - fm) / (2.0 * eps);
      double analytic = p->grad.data[i];
      double denom = std::max(1e-8, std::abs(analytic) + std::abs(numeric));
      worst = std::max(worst, std::abs(analytic - numeric) / denom);
    }
  }
  return worst;
}

}  // namespace sand
