#pragma once

#include <optional>

#include "griffin/linalg.hpp"

namespace griffin {

// Nonlinearity applied inside FF1. With glu = true the activation sits on the
// gate branch: SiLU -> SwiGLU, GELU -> GEGLU, ReLU -> ReGLU.
enum class ActivationKind { ReLU, SiLU, GELU, Identity };

const char* activation_name(ActivationKind kind);
ActivationKind activation_from_name(const std::string& name);

// Scalar activations (double internally).
float apply_activation(ActivationKind kind, float x, bool gelu_tanh = false);
double silu(double x);
double gelu_erf(double x);
double gelu_tanh(double x);

// Feedforward block:
//   non-GLU: FF1(x) = act(W1 x + b1)
//   GLU:     FF1(x) = act(Wg x + bg) . (W1 x + b1)   (elementwise)
//   FF2(z)  = W2 z + b2
struct FFBlock {
  Matrix w1;                 // [d_ff, d]
  Vector b1;                 // [d_ff]
  std::optional<Matrix> wg;  // [d_ff, d], present iff glu
  std::optional<Vector> bg;  // [d_ff], present iff glu
  Matrix w2;                 // [d, d_ff]
  Vector b2;                 // [d]
  ActivationKind act = ActivationKind::ReLU;
  bool glu = false;
  bool use_gelu_tanh = false;  // tanh-approximate GELU; exact erf by default

  FFBlock() = default;
  FFBlock(Matrix w1_in, Vector b1_in, std::optional<Matrix> wg_in,
          std::optional<Vector> bg_in, Matrix w2_in, Vector b2_in,
          ActivationKind act_in, bool glu_in);

  std::size_t d() const { return w1.cols(); }
  std::size_t d_ff() const { return w1.rows(); }

  void validate() const;
};

// FF activations for a sequence: z = FF1(X) row per token, plus the
// row-normalized relative activations.
struct ActivationMatrix {
  Matrix z;     // [s, d_ff]
  Matrix zbar;  // [s, d_ff], rows scaled to unit L2 norm

  ActivationMatrix() = default;
  explicit ActivationMatrix(Matrix z_in)
      : z(std::move(z_in)), zbar(row_normalize(z)) {}
};

// z = FF1(x) with zbar computed alongside. x is [s, d].
ActivationMatrix ff1_forward(const FFBlock& block, const Matrix& x);

// FF2(z) = z W2^T + b2. z is [s, d_ff]; result [s, d].
Matrix ff2_forward(const FFBlock& block, const Matrix& z);

// FF2(FF1(x)).
Matrix ff_forward(const FFBlock& block, const Matrix& x);

}  // namespace griffin
