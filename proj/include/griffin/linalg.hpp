#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace griffin {

// Thrown when data that must be finite contains NaN/Inf.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Rows with L2 norm below this are treated as zero rows when normalizing.
inline constexpr double kZeroRowEps = 1e-12;

namespace detail {
template <class T>
void require_finite(const std::vector<T>& data, const char* what) {
  for (const T& v : data) {
    if (!std::isfinite(double(v))) {
      throw NumericError(std::string(what) + ": non-finite element");
    }
  }
}
}  // namespace detail

// Dense row-major matrix. Storage is single precision by default (Matrix);
// MatrixD gives a double-precision mode for tight oracle work.
template <class T>
class Mat {
 public:
  Mat() = default;
  Mat(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, T(0)) {}
  Mat(std::size_t rows, std::size_t cols, std::vector<T> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      throw std::invalid_argument("matrix: data length != rows*cols");
    }
    detail::require_finite(data_, "matrix");
  }

  static Mat identity(std::size_t n) {
    Mat m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = T(1);
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }

  std::span<const T> row(std::size_t r) const {
    return std::span<const T>(data_.data() + r * cols_, cols_);
  }
  std::span<T> row(std::size_t r) {
    return std::span<T>(data_.data() + r * cols_, cols_);
  }

  const std::vector<T>& data() const { return data_; }
  std::vector<T>& data() { return data_; }

  // Reshape in place, reusing capacity. Contents are unspecified after the
  // call; every element must be written before use.
  void assign_shape(std::size_t rows, std::size_t cols) {
    rows_ = rows;
    cols_ = cols;
    data_.resize(rows * cols);
  }

  void check_finite(const char* what = "matrix") const {
    detail::require_finite(data_, what);
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

using Matrix = Mat<float>;
using MatrixD = Mat<double>;

template <class T>
class Vec {
 public:
  Vec() = default;
  explicit Vec(std::size_t len) : data_(len, T(0)) {}
  explicit Vec(std::vector<T> data) : data_(std::move(data)) {
    detail::require_finite(data_, "vector");
  }

  std::size_t len() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  T operator[](std::size_t i) const { return data_[i]; }
  T& operator[](std::size_t i) { return data_[i]; }

  const std::vector<T>& data() const { return data_; }
  std::vector<T>& data() { return data_; }
  std::span<const T> span() const { return std::span<const T>(data_); }

  void check_finite(const char* what = "vector") const {
    detail::require_finite(data_, what);
  }

 private:
  std::vector<T> data_;
};

using Vector = Vec<float>;
using VectorD = Vec<double>;

// Ordered set of distinct indices into [0, universe).
class IndexSet {
 public:
  IndexSet() = default;
  IndexSet(std::vector<std::size_t> indices, std::size_t universe);

  static IndexSet full(std::size_t universe);

  const std::vector<std::size_t>& indices() const { return indices_; }
  std::size_t universe() const { return universe_; }
  std::size_t size() const { return indices_.size(); }
  bool contains(std::size_t i) const;

  bool operator==(const IndexSet& other) const = default;

 private:
  std::vector<std::size_t> indices_;  // strictly increasing
  std::size_t universe_ = 0;
};

// Dot products accumulate in double regardless of storage precision.
double dot(std::span<const float> a, std::span<const float> b);
double dot(std::span<const double> a, std::span<const double> b);

// Scales each row to unit L2 norm; rows with norm < kZeroRowEps map to zero.
template <class T>
Mat<T> row_normalize(const Mat<T>& m) {
  Mat<T> out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double sq = 0.0;
    for (std::size_t j = 0; j < m.cols(); ++j) {
      const double v = double(m(i, j));
      sq += v * v;
    }
    const double norm = std::sqrt(sq);
    if (norm < kZeroRowEps) continue;  // leave the row at zero
    for (std::size_t j = 0; j < m.cols(); ++j) {
      out(i, j) = T(double(m(i, j)) / norm);
    }
  }
  return out;
}

// Column-wise L2 norms, accumulated in double.
template <class T>
VectorD column_l2_norms(const Mat<T>& m) {
  std::vector<double> sq(m.cols(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      const double v = double(m(i, j));
      sq[j] += v * v;
    }
  }
  std::vector<double> out(m.cols());
  for (std::size_t j = 0; j < m.cols(); ++j) out[j] = std::sqrt(sq[j]);
  return VectorD(std::move(out));
}

// Indices of the k largest values, ties broken by lowest index,
// result sorted ascending. Throws std::invalid_argument unless 1 <= k <= len.
IndexSet top_k_indices(std::span<const double> v, std::size_t k);
IndexSet top_k_indices(const VectorD& v, std::size_t k);
IndexSet top_k_indices(const Vector& v, std::size_t k);

}  // namespace griffin
