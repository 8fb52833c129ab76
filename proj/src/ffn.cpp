#include "griffin/ffn.hpp"

#include <cmath>

namespace griffin {

const char* activation_name(ActivationKind kind) {
  switch (kind) {
    case ActivationKind::ReLU: return "relu";
    case ActivationKind::SiLU: return "silu";
    case ActivationKind::GELU: return "gelu";
    case ActivationKind::Identity: return "identity";
  }
  return "?";
}

ActivationKind activation_from_name(const std::string& name) {
  if (name == "relu") return ActivationKind::ReLU;
  if (name == "silu") return ActivationKind::SiLU;
  if (name == "gelu") return ActivationKind::GELU;
  if (name == "identity") return ActivationKind::Identity;
  throw std::invalid_argument("unknown activation: " + name);
}

double silu(double x) { return x / (1.0 + std::exp(-x)); }

double gelu_erf(double x) {
  return 0.5 * x * (1.0 + std::erf(x * 0.70710678118654752440));
}

double gelu_tanh(double x) {
  const double c = 0.79788456080286535588;  // sqrt(2/pi)
  return 0.5 * x * (1.0 + std::tanh(c * (x + 0.044715 * x * x * x)));
}

float apply_activation(ActivationKind kind, float x, bool use_tanh) {
  switch (kind) {
    case ActivationKind::ReLU: return x > 0.0f ? x : 0.0f;
    case ActivationKind::SiLU: return float(silu(double(x)));
    case ActivationKind::GELU:
      return float(use_tanh ? gelu_tanh(double(x)) : gelu_erf(double(x)));
    case ActivationKind::Identity: return x;
  }
  return x;
}

FFBlock::FFBlock(Matrix w1_in, Vector b1_in, std::optional<Matrix> wg_in,
                 std::optional<Vector> bg_in, Matrix w2_in, Vector b2_in,
                 ActivationKind act_in, bool glu_in)
    : w1(std::move(w1_in)),
      b1(std::move(b1_in)),
      wg(std::move(wg_in)),
      bg(std::move(bg_in)),
      w2(std::move(w2_in)),
      b2(std::move(b2_in)),
      act(act_in),
      glu(glu_in) {
  if (b1.empty()) b1 = Vector(d_ff());
  if (b2.empty()) b2 = Vector(d());
  if (glu && wg && !bg) bg = Vector(d_ff());
  validate();
}

void FFBlock::validate() const {
  const std::size_t dff = w1.rows();
  const std::size_t dim = w1.cols();
  if (dff == 0 || dim == 0) throw std::invalid_argument("ff block: empty w1");
  if (b1.len() != dff) throw std::invalid_argument("ff block: b1 length != d_ff");
  if (w2.rows() != dim || w2.cols() != dff) {
    throw std::invalid_argument("ff block: w2 must be [d, d_ff]");
  }
  if (b2.len() != dim) throw std::invalid_argument("ff block: b2 length != d");
  if (glu != (wg.has_value() && bg.has_value())) {
    throw std::invalid_argument("ff block: glu flag must match wg/bg presence");
  }
  if (glu) {
    if (wg->rows() != dff || wg->cols() != dim) {
      throw std::invalid_argument("ff block: wg shape != w1 shape");
    }
    if (bg->len() != dff) throw std::invalid_argument("ff block: bg length != d_ff");
  }
}

ActivationMatrix ff1_forward(const FFBlock& block, const Matrix& x) {
  if (x.cols() != block.d()) {
    throw std::invalid_argument("ff1_forward: x.cols != d");
  }
  const std::size_t s = x.rows();
  const std::size_t dff = block.d_ff();
  Matrix z(s, dff);
  for (std::size_t i = 0; i < s; ++i) {
    const auto xi = x.row(i);
    for (std::size_t j = 0; j < dff; ++j) {
      const float lin = float(dot(block.w1.row(j), xi) + double(block.b1[j]));
      if (block.glu) {
        const float gate = float(dot(block.wg->row(j), xi) + double((*block.bg)[j]));
        z(i, j) = apply_activation(block.act, gate, block.use_gelu_tanh) * lin;
      } else {
        z(i, j) = apply_activation(block.act, lin, block.use_gelu_tanh);
      }
    }
  }
  z.check_finite("ff1_forward output");
  return ActivationMatrix(std::move(z));
}

Matrix ff2_forward(const FFBlock& block, const Matrix& z) {
  if (z.cols() != block.d_ff()) {
    throw std::invalid_argument("ff2_forward: z.cols != d_ff");
  }
  const std::size_t s = z.rows();
  const std::size_t dim = block.d();
  Matrix out(s, dim);
  for (std::size_t i = 0; i < s; ++i) {
    const auto zi = z.row(i);
    for (std::size_t j = 0; j < dim; ++j) {
      out(i, j) = float(dot(block.w2.row(j), zi) + double(block.b2[j]));
    }
  }
  out.check_finite("ff2_forward output");
  return out;
}

Matrix ff_forward(const FFBlock& block, const Matrix& x) {
  return ff2_forward(block, ff1_forward(block, x).z);
}

}  // namespace griffin
