#include "core/layers.hpp"

#include <cmath>
#include <cstdio>

#include "core/error.hpp"

namespace msuda {

void log_warn(const std::string& msg) {
  std::fprintf(stderr, "[msuda] warning: %s\n", msg.c_str());
}

void AffineLayer::init_he(Rng& rng) {
  const double scale = std::sqrt(2.0 / static_cast<double>(in_dim()));
  for (double& w : weight.data) w = scale * rng.normal();
  for (double& b : bias) b = 0.0;
}

void AffineLayer::zero_grads() {
  grad_weight.fill(0.0);
  for (double& g : grad_bias) g = 0.0;
}

Matrix AffineLayer::forward(const Matrix& x) const {
  if (x.cols != in_dim()) throw_dimension("affine forward: input width mismatch");
  Matrix y(x.rows, out_dim());
  for (std::size_t b = 0; b < x.rows; ++b) {
    const double* xb = x.row(b);
    double* yb = y.row(b);
    for (std::size_t o = 0; o < out_dim(); ++o) {
      const double* w = weight.row(o);
      double acc = bias[o];
      for (std::size_t i = 0; i < in_dim(); ++i) acc += w[i] * xb[i];
      yb[o] = acc;
    }
  }
  return y;
}

Matrix AffineLayer::forward(const SparseBatch& x) const {
  if (x.dim != in_dim()) throw_dimension("affine forward: sparse input width mismatch");
  Matrix y(x.size(), out_dim());
  for (std::size_t b = 0; b < x.size(); ++b) {
    const SparseVector& sv = *x.rows[b];
    double* yb = y.row(b);
    for (std::size_t o = 0; o < out_dim(); ++o) yb[o] = bias[o];
    for (std::size_t k = 0; k < sv.indices.size(); ++k) {
      const std::size_t i = sv.indices[k];
      if (i >= in_dim()) throw_dimension("affine forward: sparse index out of range");
      const double v = sv.values[k];
      for (std::size_t o = 0; o < out_dim(); ++o) yb[o] += weight.at(o, i) * v;
    }
  }
  return y;
}

Matrix AffineLayer::backward(const Matrix& x, const Matrix& grad_out, bool accumulate) {
  if (grad_out.rows != x.rows || grad_out.cols != out_dim() || x.cols != in_dim())
    throw_dimension("affine backward: shape mismatch");
  if (accumulate) {
    for (std::size_t b = 0; b < x.rows; ++b) {
      const double* xb = x.row(b);
      const double* gy = grad_out.row(b);
      for (std::size_t o = 0; o < out_dim(); ++o) {
        const double g = gy[o];
        if (g == 0.0) continue;
        double* gw = grad_weight.row(o);
        for (std::size_t i = 0; i < in_dim(); ++i) gw[i] += g * xb[i];
        grad_bias[o] += g;
      }
    }
  }
  Matrix gx(x.rows, in_dim());
  for (std::size_t b = 0; b < x.rows; ++b) {
    const double* gy = grad_out.row(b);
    double* gxb = gx.row(b);
    for (std::size_t o = 0; o < out_dim(); ++o) {
      const double g = gy[o];
      if (g == 0.0) continue;
      const double* w = weight.row(o);
      for (std::size_t i = 0; i < in_dim(); ++i) gxb[i] += g * w[i];
    }
  }
  return gx;
}

void AffineLayer::backward_params(const SparseBatch& x, const Matrix& grad_out) {
  if (grad_out.rows != x.size() || grad_out.cols != out_dim() || x.dim != in_dim())
    throw_dimension("affine backward: shape mismatch");
  for (std::size_t b = 0; b < x.size(); ++b) {
    const SparseVector& sv = *x.rows[b];
    const double* gy = grad_out.row(b);
    for (std::size_t o = 0; o < out_dim(); ++o) grad_bias[o] += gy[o];
    for (std::size_t k = 0; k < sv.indices.size(); ++k) {
      const std::size_t i = sv.indices[k];
      const double v = sv.values[k];
      for (std::size_t o = 0; o < out_dim(); ++o) grad_weight.at(o, i) += gy[o] * v;
    }
  }
}

Matrix relu(const Matrix& x) {
  Matrix y = x;
  for (double& v : y.data) v = v > 0.0 ? v : 0.0;
  return y;
}

Matrix relu_backward(const Matrix& x, const Matrix& grad_out) {
  if (!x.same_shape(grad_out)) throw_dimension("relu backward: shape mismatch");
  Matrix gx(x.rows, x.cols);
  for (std::size_t i = 0; i < x.data.size(); ++i)
    gx.data[i] = x.data[i] > 0.0 ? grad_out.data[i] : 0.0;
  return gx;
}

Matrix softmax(const Matrix& logits) {
  Matrix p(logits.rows, logits.cols);
  for (std::size_t r = 0; r < logits.rows; ++r) {
    const double* in = logits.row(r);
    double* out = p.row(r);
    double mx = in[0];
    for (std::size_t c = 1; c < logits.cols; ++c)
      if (in[c] > mx) mx = in[c];
    double sum = 0.0;
    for (std::size_t c = 0; c < logits.cols; ++c) {
      out[c] = std::exp(in[c] - mx);
      sum += out[c];
    }
    for (std::size_t c = 0; c < logits.cols; ++c) out[c] /= sum;
  }
  return p;
}

double cross_entropy(const Matrix& probs, const Matrix& onehot) {
  if (!probs.same_shape(onehot)) throw_dimension("cross_entropy: shape mismatch");
  if (probs.rows == 0) return 0.0;
  double total = 0.0;
  for (std::size_t r = 0; r < probs.rows; ++r) {
    const double* p = probs.row(r);
    const double* y = onehot.row(r);
    for (std::size_t c = 0; c < probs.cols; ++c) {
      if (y[c] != 0.0) {
        double pc = p[c];
        if (pc < kProbFloor) pc = kProbFloor;
        total -= y[c] * std::log(pc);
      }
    }
  }
  return total / static_cast<double>(probs.rows);
}

Matrix softmax_xent_grad(const Matrix& probs, const Matrix& onehot, double scale) {
  if (!probs.same_shape(onehot)) throw_dimension("softmax_xent_grad: shape mismatch");
  Matrix g(probs.rows, probs.cols);
  const double s = scale / static_cast<double>(probs.rows);
  for (std::size_t i = 0; i < probs.data.size(); ++i)
    g.data[i] = s * (probs.data[i] - onehot.data[i]);
  return g;
}

Matrix onehot_rows(const std::vector<int>& labels, std::size_t num_classes) {
  Matrix m(labels.size(), num_classes);
  for (std::size_t r = 0; r < labels.size(); ++r) {
    const int lb = labels[r];
    if (lb < 0 || static_cast<std::size_t>(lb) >= num_classes)
      throw_dimension("onehot_rows: label out of range");
    m.at(r, static_cast<std::size_t>(lb)) = 1.0;
  }
  return m;
}

void Mlp::init_he(Rng& rng) {
  hidden.init_he(rng);
  output.init_he(rng);
}

void Mlp::zero_grads() {
  hidden.zero_grads();
  output.zero_grads();
}

Matrix Mlp::forward(const SparseBatch& x, Cache* cache) const {
  Matrix pre = hidden.forward(x);
  Matrix act = relu(pre);
  Matrix out = output.forward(act);
  if (cache) {
    cache->sparse_in = &x;
    cache->dense_in = Matrix();
    cache->pre_act = std::move(pre);
    cache->act = std::move(act);
  }
  return out;
}

Matrix Mlp::forward(const Matrix& x, Cache* cache) const {
  Matrix pre = hidden.forward(x);
  Matrix act = relu(pre);
  Matrix out = output.forward(act);
  if (cache) {
    cache->sparse_in = nullptr;
    cache->dense_in = x;
    cache->pre_act = std::move(pre);
    cache->act = std::move(act);
  }
  return out;
}

void Mlp::backward(const Cache& cache, const Matrix& grad_out, bool accumulate) {
  Matrix d_act = output.backward(cache.act, grad_out, accumulate);
  Matrix d_pre = relu_backward(cache.pre_act, d_act);
  if (cache.sparse_in) {
    if (accumulate) hidden.backward_params(*cache.sparse_in, d_pre);
  } else {
    hidden.backward(cache.dense_in, d_pre, accumulate);
  }
}

}  // namespace msuda
