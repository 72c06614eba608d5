#include "congraph/matrix.hpp"

#include <algorithm>
#include <cmath>

#include "congraph/error.hpp"

namespace congraph {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw ShapeError("matrix data has " + std::to_string(data_.size()) + " values, expected " +
                     std::to_string(rows_ * cols_));
  }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw ShapeError("ragged matrix initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::column(std::span<const double> values) {
  return Matrix(values.size(), 1, std::vector<double>(values.begin(), values.end()));
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

void Matrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Matrix::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

std::string Matrix::shape_string() const {
  return "(" + std::to_string(rows_) + "x" + std::to_string(cols_) + ")";
}

void gemm_acc(const Matrix& a, const Matrix& b, Matrix& out) {
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  assert(b.rows() == k && out.rows() == n && out.cols() == m);
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  double* po = out.data().data();
  for (std::size_t i = 0; i < n; ++i) {
    double* orow = po + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = pa[i * k + p];
      if (av == 0.0) continue;
      const double* brow = pb + p * m;
      for (std::size_t j = 0; j < m; ++j) orow[j] += av * brow[j];
    }
  }
}

void gemm_tn_acc(const Matrix& a, const Matrix& b, Matrix& out) {
  // a: k x n, b: k x m, out: n x m
  const std::size_t k = a.rows(), n = a.cols(), m = b.cols();
  assert(b.rows() == k && out.rows() == n && out.cols() == m);
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  double* po = out.data().data();
  for (std::size_t p = 0; p < k; ++p) {
    const double* brow = pb + p * m;
    for (std::size_t i = 0; i < n; ++i) {
      const double av = pa[p * n + i];
      if (av == 0.0) continue;
      double* orow = po + i * m;
      for (std::size_t j = 0; j < m; ++j) orow[j] += av * brow[j];
    }
  }
}

void gemm_nt_acc(const Matrix& a, const Matrix& b, Matrix& out) {
  // a: n x k, b: m x k, out: n x m
  const std::size_t n = a.rows(), k = a.cols(), m = b.rows();
  assert(b.cols() == k && out.rows() == n && out.cols() == m);
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  double* po = out.data().data();
  for (std::size_t i = 0; i < n; ++i) {
    const double* arow = pa + i * k;
    for (std::size_t j = 0; j < m; ++j) {
      const double* brow = pb + j * k;
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += arow[p] * brow[p];
      po[i * m + j] += s;
    }
  }
}

Matrix transpose(const Matrix& m) {
  Matrix t(m.cols(), m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) t(c, r) = m(r, c);
  return t;
}

Matrix permute_square(const Matrix& m, std::span<const std::size_t> perm) {
  if (m.rows() != m.cols() || perm.size() != m.rows()) {
    throw ShapeError("permute_square: matrix " + m.shape_string() + " vs permutation of size " +
                     std::to_string(perm.size()));
  }
  Matrix out(m.rows(), m.cols());
  for (std::size_t a = 0; a < perm.size(); ++a)
    for (std::size_t b = 0; b < perm.size(); ++b) out(a, b) = m(perm[a], perm[b]);
  return out;
}

Matrix permute_rows(const Matrix& m, std::span<const std::size_t> perm) {
  if (perm.size() != m.rows()) {
    throw ShapeError("permute_rows: matrix " + m.shape_string() + " vs permutation of size " +
                     std::to_string(perm.size()));
  }
  Matrix out(m.rows(), m.cols());
  for (std::size_t a = 0; a < perm.size(); ++a) {
    auto src = m.row(perm[a]);
    std::copy(src.begin(), src.end(), out.row(a).begin());
  }
  return out;
}

}  // namespace congraph
