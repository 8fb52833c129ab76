#include "griffin/linalg.hpp"

#include <algorithm>
#include <numeric>

namespace griffin {

IndexSet::IndexSet(std::vector<std::size_t> indices, std::size_t universe)
    : indices_(std::move(indices)), universe_(universe) {
  for (std::size_t i = 0; i < indices_.size(); ++i) {
    if (indices_[i] >= universe_) {
      throw std::invalid_argument("index set: index out of universe");
    }
    if (i > 0 && indices_[i] <= indices_[i - 1]) {
      throw std::invalid_argument("index set: indices must be strictly increasing");
    }
  }
}

IndexSet IndexSet::full(std::size_t universe) {
  std::vector<std::size_t> all(universe);
  std::iota(all.begin(), all.end(), std::size_t(0));
  return IndexSet(std::move(all), universe);
}

bool IndexSet::contains(std::size_t i) const {
  return std::binary_search(indices_.begin(), indices_.end(), i);
}

namespace {

// Four independent accumulators: fixed summation order, decent ILP.
template <class T>
double dot_impl(const T* a, const T* b, std::size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t i = 0;
  if (n >= 4) {
    for (; i + 4 <= n; i += 4) {
      s0 += double(a[i]) * double(b[i]);
      s1 += double(a[i + 1]) * double(b[i + 1]);
      s2 += double(a[i + 2]) * double(b[i + 2]);
      s3 += double(a[i + 3]) * double(b[i + 3]);
    }
  }
  for (; i < n; ++i) s0 += double(a[i]) * double(b[i]);
  return (s0 + s1) + (s2 + s3);
}

}  // namespace

double dot(std::span<const float> a, std::span<const float> b) {
  return dot_impl(a.data(), b.data(), std::min(a.size(), b.size()));
}

double dot(std::span<const double> a, std::span<const double> b) {
  return dot_impl(a.data(), b.data(), std::min(a.size(), b.size()));
}

IndexSet top_k_indices(std::span<const double> v, std::size_t k) {
  if (k == 0 || k > v.size()) {
    throw std::invalid_argument("top_k_indices: require 1 <= k <= len");
  }
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t(0));
  // Larger value first; equal values keep the lower index.
  std::partial_sort(order.begin(), order.begin() + std::ptrdiff_t(k), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (v[a] != v[b]) return v[a] > v[b];
                      return a < b;
                    });
  std::vector<std::size_t> picked(order.begin(), order.begin() + std::ptrdiff_t(k));
  std::sort(picked.begin(), picked.end());
  return IndexSet(std::move(picked), v.size());
}

IndexSet top_k_indices(const VectorD& v, std::size_t k) {
  return top_k_indices(std::span<const double>(v.data()), k);
}

IndexSet top_k_indices(const Vector& v, std::size_t k) {
  std::vector<double> widened(v.data().begin(), v.data().end());
  return top_k_indices(std::span<const double>(widened), k);
}

}  // namespace griffin
