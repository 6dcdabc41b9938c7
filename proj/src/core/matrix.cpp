#include "core/matrix.hpp"

#include <cmath>

#include "core/error.hpp"

namespace msuda {

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> init) {
  Matrix m;
  m.rows = init.size();
  m.cols = init.size() ? init.begin()->size() : 0;
  m.data.reserve(m.rows * m.cols);
  for (const auto& r : init) {
    if (r.size() != m.cols) throw_dimension("from_rows: ragged initializer");
    for (double v : r) m.data.push_back(v);
  }
  return m;
}

void Matrix::fill(double v) {
  for (double& x : data) x = v;
}

bool all_finite(const Matrix& m) {
  for (double v : m.data) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Matrix SparseBatch::dense() const {
  Matrix out(rows.size(), dim);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const SparseVector& sv = *rows[r];
    double* dst = out.row(r);
    for (std::size_t k = 0; k < sv.indices.size(); ++k) {
      if (sv.indices[k] >= dim) throw_dimension("sparse index out of range");
      dst[sv.indices[k]] = sv.values[k];
    }
  }
  return out;
}

Matrix hconcat(const Matrix& a, const Matrix& b) {
  if (a.rows != b.rows) throw_dimension("hconcat: row counts differ");
  Matrix out(a.rows, a.cols + b.cols);
  for (std::size_t r = 0; r < a.rows; ++r) {
    double* dst = out.row(r);
    const double* ra = a.row(r);
    const double* rb = b.row(r);
    for (std::size_t c = 0; c < a.cols; ++c) dst[c] = ra[c];
    for (std::size_t c = 0; c < b.cols; ++c) dst[a.cols + c] = rb[c];
  }
  return out;
}

std::pair<Matrix, Matrix> hsplit(const Matrix& m, std::size_t left_cols) {
  if (left_cols > m.cols) throw_dimension("hsplit: split point beyond columns");
  Matrix a(m.rows, left_cols);
  Matrix b(m.rows, m.cols - left_cols);
  for (std::size_t r = 0; r < m.rows; ++r) {
    const double* src = m.row(r);
    double* ra = a.row(r);
    double* rb = b.row(r);
    for (std::size_t c = 0; c < left_cols; ++c) ra[c] = src[c];
    for (std::size_t c = left_cols; c < m.cols; ++c) rb[c - left_cols] = src[c];
  }
  return {std::move(a), std::move(b)};
}

}  // namespace msuda
