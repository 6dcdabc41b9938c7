#include "doctest.h"

#include <cmath>

#include "core/error.hpp"
#include "core/matrix.hpp"

using namespace msuda;

TEST_CASE("from_rows builds row-major storage") {
  const Matrix m = Matrix::from_rows({{1.0, 2.0}, {3.0, 4.0}, {5.0, 6.0}});
  CHECK(m.rows == 3);
  CHECK(m.cols == 2);
  CHECK(m.at(0, 1) == 2.0);
  CHECK(m.at(2, 0) == 5.0);
  CHECK(m.data == std::vector<double>{1, 2, 3, 4, 5, 6});
}

TEST_CASE("from_rows rejects ragged input") {
  CHECK_THROWS_AS(Matrix::from_rows({{1.0}, {1.0, 2.0}}), Error);
}

TEST_CASE("all_finite flags NaN and infinity") {
  Matrix m(2, 2, 1.0);
  CHECK(all_finite(m));
  m.at(1, 1) = std::nan("");
  CHECK_FALSE(all_finite(m));
  m.at(1, 1) = 1e308 * 10;
  CHECK_FALSE(all_finite(m));
}

TEST_CASE("sparse batch densifies to the right coordinates") {
  SparseVector a;
  a.indices = {1, 4};
  a.values = {2.0, 3.0};
  SparseVector b;  // empty row is legal
  SparseBatch batch;
  batch.dim = 6;
  batch.rows = {&a, &b};
  const Matrix d = batch.dense();
  CHECK(d.rows == 2);
  CHECK(d.cols == 6);
  CHECK(d.at(0, 1) == 2.0);
  CHECK(d.at(0, 4) == 3.0);
  CHECK(d.at(0, 0) == 0.0);
  for (std::size_t c = 0; c < 6; ++c) CHECK(d.at(1, c) == 0.0);
}

TEST_CASE("hconcat then hsplit is the identity") {
  const Matrix a = Matrix::from_rows({{1, 2}, {3, 4}});
  const Matrix b = Matrix::from_rows({{5}, {6}});
  const Matrix cat = hconcat(a, b);
  CHECK(cat.cols == 3);
  CHECK(cat.at(0, 2) == 5.0);
  auto [left, right] = hsplit(cat, 2);
  CHECK(left.data == a.data);
  CHECK(right.data == b.data);
}

TEST_CASE("hconcat rejects mismatched row counts") {
  CHECK_THROWS_AS(hconcat(Matrix(2, 2), Matrix(3, 2)), Error);
}
