#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <utility>
#include <vector>

namespace msuda {

// Dense row-major matrix of doubles; the substrate for every layer below.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> init);

  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  double* row(std::size_t r) { return data.data() + r * cols; }
  const double* row(std::size_t r) const { return data.data() + r * cols; }

  std::size_t size() const { return data.size(); }
  bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
  void fill(double v);
};

bool all_finite(const Matrix& m);

// Sparse non-negative vector: strictly increasing indices, positive values.
struct SparseVector {
  std::vector<std::uint32_t> indices;
  std::vector<double> values;

  std::size_t nnz() const { return indices.size(); }
};

// A batch of sparse rows sharing one input dimension. Rows point into
// caller-owned storage.
struct SparseBatch {
  std::size_t dim = 0;
  std::vector<const SparseVector*> rows;

  std::size_t size() const { return rows.size(); }
  Matrix dense() const;
};

Matrix hconcat(const Matrix& a, const Matrix& b);
std::pair<Matrix, Matrix> hsplit(const Matrix& m, std::size_t left_cols);

}  // namespace msuda
