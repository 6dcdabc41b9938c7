#pragma once

#include <vector>

#include "core/matrix.hpp"
#include "core/rng.hpp"

namespace msuda {

// Probabilities are clamped to this floor before any log.
inline constexpr double kProbFloor = 1e-12;

// Fully connected layer; weight is out x in, gradients accumulate until an
// optimizer step zeroes them.
struct AffineLayer {
  Matrix weight;
  std::vector<double> bias;
  Matrix grad_weight;
  std::vector<double> grad_bias;

  AffineLayer() = default;
  AffineLayer(std::size_t in, std::size_t out)
      : weight(out, in),
        bias(out, 0.0),
        grad_weight(out, in),
        grad_bias(out, 0.0) {}

  std::size_t in_dim() const { return weight.cols; }
  std::size_t out_dim() const { return weight.rows; }

  // Fan-in scaled normal weights, zero bias.
  void init_he(Rng& rng);
  void zero_grads();

  Matrix forward(const Matrix& x) const;
  Matrix forward(const SparseBatch& x) const;

  // Returns dL/dx for upstream layers; accumulates parameter gradients when
  // requested. x must be the batch the forward pass saw.
  Matrix backward(const Matrix& x, const Matrix& grad_out, bool accumulate);
  // Parameter gradients only; used at the input layer where dL/dx is unused.
  void backward_params(const SparseBatch& x, const Matrix& grad_out);
};

Matrix relu(const Matrix& x);
// Passes grad_out through only where x > 0.
Matrix relu_backward(const Matrix& x, const Matrix& grad_out);

// Row-wise softmax, computed with max subtraction.
Matrix softmax(const Matrix& logits);

// Mean over the batch of -ln(probability of the true class).
double cross_entropy(const Matrix& probs, const Matrix& onehot);

// Gradient of cross_entropy(softmax(logits)) wrt logits: scale * (p - y) / batch.
Matrix softmax_xent_grad(const Matrix& probs, const Matrix& onehot, double scale = 1.0);

Matrix onehot_rows(const std::vector<int>& labels, std::size_t num_classes);

// Two affine layers with ReLU on the hidden activation; output is linear.
// The extractor shape used for E_s, the per-source extractors and E_t.
struct Mlp {
  AffineLayer hidden;
  AffineLayer output;

  struct Cache {
    const SparseBatch* sparse_in = nullptr;
    Matrix dense_in;  // set when the forward input was dense
    Matrix pre_act;
    Matrix act;
  };

  Mlp() = default;
  Mlp(std::size_t in, std::size_t hid, std::size_t out)
      : hidden(in, hid), output(hid, out) {}

  std::size_t in_dim() const { return hidden.in_dim(); }
  std::size_t out_dim() const { return output.out_dim(); }

  void init_he(Rng& rng);
  void zero_grads();

  Matrix forward(const SparseBatch& x, Cache* cache = nullptr) const;
  Matrix forward(const Matrix& x, Cache* cache = nullptr) const;
  // Accumulates parameter gradients from dL/d(output); needs the cache of the
  // matching forward call.
  void backward(const Cache& cache, const Matrix& grad_out, bool accumulate);
};

}  // namespace msuda
