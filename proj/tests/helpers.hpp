#pragma once

#include <vector>

#include "griffin/ffn.hpp"
#include "griffin/rng.hpp"

namespace griffin::testing {

inline Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng,
                            double scale = 1.0) {
  Matrix m(rows, cols);
  for (float& v : m.data()) v = float(scale * rng.next_normal());
  return m;
}

inline MatrixD random_matrix_d(std::size_t rows, std::size_t cols, Rng& rng,
                               double scale = 1.0) {
  MatrixD m(rows, cols);
  for (double& v : m.data()) v = scale * rng.next_normal();
  return m;
}

inline Vector random_vector(std::size_t len, Rng& rng, double scale = 1.0) {
  std::vector<float> data(len);
  for (float& v : data) v = float(scale * rng.next_normal());
  return Vector(std::move(data));
}

inline FFBlock random_block(std::size_t d, std::size_t d_ff, ActivationKind act,
                            bool glu, Rng& rng) {
  const double scale = 1.0 / std::sqrt(double(d));
  std::optional<Matrix> wg;
  std::optional<Vector> bg;
  if (glu) {
    wg = random_matrix(d_ff, d, rng, scale);
    bg = random_vector(d_ff, rng, 0.1);
  }
  return FFBlock(random_matrix(d_ff, d, rng, scale), random_vector(d_ff, rng, 0.1),
                 std::move(wg), std::move(bg),
                 random_matrix(d, d_ff, rng, 1.0 / std::sqrt(double(d_ff))),
                 random_vector(d, rng, 0.1), act, glu);
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(double(a.data()[i]) - double(b.data()[i])));
  }
  return worst;
}

inline double max_rel_diff(const Matrix& a, const Matrix& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = double(a.data()[i]);
    const double y = double(b.data()[i]);
    const double denom = std::max({std::abs(x), std::abs(y), 1e-8});
    worst = std::max(worst, std::abs(x - y) / denom);
  }
  return worst;
}

// Structured-equivalence oracle: full forward with non-expert activations
// zeroed out.
inline Matrix masked_forward(const FFBlock& block, const Matrix& x,
                             const IndexSet& experts) {
  ActivationMatrix acts = ff1_forward(block, x);
  Matrix z = acts.z;
  for (std::size_t i = 0; i < z.rows(); ++i) {
    for (std::size_t j = 0; j < z.cols(); ++j) {
      if (!experts.contains(j)) z(i, j) = 0.0f;
    }
  }
  return ff2_forward(block, z);
}

}  // namespace griffin::testing
