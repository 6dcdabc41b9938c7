#include "doctest.h"

#include <cmath>

#include "core/layers.hpp"
#include "core/rng.hpp"

using namespace msuda;

namespace {

// Independent triple-loop oracle for y = x W^T + b.
Matrix matmul_oracle(const AffineLayer& layer, const Matrix& x) {
  Matrix y(x.rows, layer.out_dim());
  for (std::size_t b = 0; b < x.rows; ++b)
    for (std::size_t o = 0; o < layer.out_dim(); ++o) {
      double acc = layer.bias[o];
      for (std::size_t i = 0; i < layer.in_dim(); ++i)
        acc += layer.weight.at(o, i) * x.at(b, i);
      y.at(b, o) = acc;
    }
  return y;
}

}  // namespace

TEST_CASE("affine forward: identity weights pass input through") {
  AffineLayer layer(2, 2);
  layer.weight.at(0, 0) = 1.0;
  layer.weight.at(1, 1) = 1.0;
  const Matrix y = layer.forward(Matrix::from_rows({{3.0, 4.0}}));
  CHECK(y.at(0, 0) == doctest::Approx(3.0));
  CHECK(y.at(0, 1) == doctest::Approx(4.0));
}

TEST_CASE("affine forward: 2x2 hand case") {
  AffineLayer layer(2, 2);
  layer.weight = Matrix::from_rows({{1, 1}, {1, -1}});
  const Matrix y = layer.forward(Matrix::from_rows({{2.0, 1.0}}));
  CHECK(y.at(0, 0) == doctest::Approx(3.0));
  CHECK(y.at(0, 1) == doctest::Approx(1.0));
}

TEST_CASE("affine forward matches the naive matmul oracle") {
  Rng rng(11);
  AffineLayer layer(5, 3);
  layer.init_he(rng);
  for (double& b : layer.bias) b = rng.normal();
  Matrix x(4, 5);
  for (double& v : x.data) v = rng.normal();
  const Matrix got = layer.forward(x);
  const Matrix want = matmul_oracle(layer, x);
  for (std::size_t i = 0; i < got.data.size(); ++i)
    CHECK(std::abs(got.data[i] - want.data[i]) < 1e-12);
}

TEST_CASE("sparse forward agrees with dense forward") {
  Rng rng(5);
  AffineLayer layer(20, 7);
  layer.init_he(rng);
  SparseVector row_a, row_b;
  row_a.indices = {0, 3, 19};
  row_a.values = {1.5, 0.25, 2.0};
  row_b.indices = {7};
  row_b.values = {3.0};
  SparseBatch sb;
  sb.dim = 20;
  sb.rows = {&row_a, &row_b};
  const Matrix sparse_y = layer.forward(sb);
  const Matrix dense_y = layer.forward(sb.dense());
  REQUIRE(sparse_y.same_shape(dense_y));
  for (std::size_t i = 0; i < sparse_y.data.size(); ++i)
    CHECK(sparse_y.data[i] == doctest::Approx(dense_y.data[i]).epsilon(1e-12));
}

TEST_CASE("relu clips negatives and routes gradients") {
  const Matrix y = relu(Matrix::from_rows({{-1.0, 0.0, 2.0}}));
  CHECK(y.data == std::vector<double>{0.0, 0.0, 2.0});

  const Matrix all_neg = relu(Matrix::from_rows({{-3.0, -0.5}}));
  CHECK(all_neg.data == std::vector<double>{0.0, 0.0});
  const Matrix g0 = relu_backward(Matrix::from_rows({{-3.0, -0.5}}),
                                  Matrix::from_rows({{7.0, 7.0}}));
  CHECK(g0.data == std::vector<double>{0.0, 0.0});

  const Matrix g = relu_backward(Matrix::from_rows({{1.0, -1.0}}),
                                 Matrix::from_rows({{5.0, 5.0}}));
  CHECK(g.data == std::vector<double>{5.0, 0.0});
}

TEST_CASE("softmax: symmetric logits give uniform rows") {
  const Matrix two = softmax(Matrix::from_rows({{0.0, 0.0}}));
  CHECK(two.at(0, 0) == doctest::Approx(0.5));
  CHECK(two.at(0, 1) == doctest::Approx(0.5));
  const Matrix four = softmax(Matrix::from_rows({{0.0, 0.0, 0.0, 0.0}}));
  for (std::size_t c = 0; c < 4; ++c) CHECK(four.at(0, c) == doctest::Approx(0.25));
}

TEST_CASE("softmax survives extreme logits") {
  const Matrix p = softmax(Matrix::from_rows({{1000.0, 0.0}}));
  CHECK(all_finite(p));
  CHECK(p.at(0, 0) == doctest::Approx(1.0));
  CHECK(p.at(0, 1) == doctest::Approx(0.0));
}

TEST_CASE("softmax rows land on the simplex for arbitrary finite logits") {
  Rng rng(42);
  for (int trial = 0; trial < 50; ++trial) {
    Matrix logits(3, 5);
    const double scale = std::pow(10.0, rng.uniform() * 6.0 - 3.0);
    for (double& v : logits.data) v = scale * rng.normal();
    const Matrix p = softmax(logits);
    REQUIRE(all_finite(p));
    for (std::size_t r = 0; r < p.rows; ++r) {
      double sum = 0.0;
      for (std::size_t c = 0; c < p.cols; ++c) {
        CHECK(p.at(r, c) >= 0.0);
        sum += p.at(r, c);
      }
      CHECK(std::abs(sum - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("cross entropy on known values") {
  // uniform over 2 classes
  const Matrix u2 = Matrix::from_rows({{0.5, 0.5}});
  CHECK(cross_entropy(u2, Matrix::from_rows({{1.0, 0.0}})) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-9));
  // uniform over 4 classes: maximal discriminator confusion
  const Matrix u4 = Matrix::from_rows({{0.25, 0.25, 0.25, 0.25}});
  CHECK(cross_entropy(u4, Matrix::from_rows({{0.0, 0.0, 1.0, 0.0}})) ==
        doctest::Approx(std::log(4.0)).epsilon(1e-9));
  // 0.9 on the true class
  const Matrix p = Matrix::from_rows({{0.9, 0.1}});
  CHECK(cross_entropy(p, Matrix::from_rows({{1.0, 0.0}})) ==
        doctest::Approx(0.105360516).epsilon(1e-6));
}

TEST_CASE("cross entropy is nonnegative and zero only at certainty") {
  CHECK(cross_entropy(Matrix::from_rows({{1.0, 0.0}}), Matrix::from_rows({{1.0, 0.0}})) == 0.0);
  Rng rng(9);
  for (int trial = 0; trial < 30; ++trial) {
    Matrix logits(2, 4);
    for (double& v : logits.data) v = 3.0 * rng.normal();
    const Matrix p = softmax(logits);
    std::vector<int> labels = {static_cast<int>(rng.below(4)), static_cast<int>(rng.below(4))};
    const double ce = cross_entropy(p, onehot_rows(labels, 4));
    CHECK(ce >= 0.0);
    if (p.at(0, labels[0]) < 1.0 || p.at(1, labels[1]) < 1.0) CHECK(ce > 0.0);
  }
}

TEST_CASE("cross entropy clamps vanishing probabilities") {
  const Matrix p = Matrix::from_rows({{0.0, 1.0}});
  const double ce = cross_entropy(p, Matrix::from_rows({{1.0, 0.0}}));
  CHECK(std::isfinite(ce));
  CHECK(ce == doctest::Approx(-std::log(1e-12)));
}

TEST_CASE("mlp forward is deterministic and caches support backward") {
  Rng rng(3);
  Mlp mlp(6, 4, 3);
  mlp.init_he(rng);
  SparseVector row;
  row.indices = {1, 5};
  row.values = {1.0, 2.0};
  SparseBatch x;
  x.dim = 6;
  x.rows = {&row};
  const Matrix a = mlp.forward(x);
  const Matrix b = mlp.forward(x);
  CHECK(a.data == b.data);

  Mlp::Cache cache;
  mlp.forward(x, &cache);
  Matrix dy(1, 3, 1.0);
  mlp.backward(cache, dy, true);
  bool any = false;
  for (double g : mlp.output.grad_weight.data) any = any || g != 0.0;
  CHECK(any);
}
