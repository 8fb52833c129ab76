#include "griffin/gate.hpp"

#include <cmath>

namespace griffin {

SparsityConfig::SparsityConfig(double sparsity) : ff_sparsity(sparsity) {
  if (!(sparsity >= 0.0 && sparsity < 1.0)) {
    throw std::invalid_argument("sparsity must be in [0, 1)");
  }
}

std::size_t SparsityConfig::k_for(std::size_t d_ff) const {
  const auto k = std::size_t(std::llround((1.0 - ff_sparsity) * double(d_ff)));
  return std::max<std::size_t>(1, std::min(k, d_ff));
}

NeuronStatistic::NeuronStatistic(VectorD s_in, std::size_t token_count_in)
    : s(std::move(s_in)), token_count(token_count_in) {
  for (double v : s.data()) {
    if (v < 0.0) throw std::invalid_argument("neuron statistic: negative entry");
  }
}

NeuronStatistic compute_statistic(const ActivationMatrix& acts) {
  if (acts.z.rows() == 0 || acts.z.cols() == 0) {
    throw std::invalid_argument("compute_statistic: empty activation matrix");
  }
  // Column norms of zbar, recomputed from z at double precision so the
  // normalization does not round through single-precision storage.
  const std::size_t s_rows = acts.z.rows();
  const std::size_t dff = acts.z.cols();
  std::vector<double> sq(dff, 0.0);
  for (std::size_t i = 0; i < s_rows; ++i) {
    double row_sq = 0.0;
    for (std::size_t j = 0; j < dff; ++j) {
      const double v = double(acts.z(i, j));
      row_sq += v * v;
    }
    if (std::sqrt(row_sq) < kZeroRowEps) continue;
    for (std::size_t j = 0; j < dff; ++j) {
      const double v = double(acts.z(i, j));
      sq[j] += v * v / row_sq;
    }
  }
  std::vector<double> s(dff);
  for (std::size_t j = 0; j < dff; ++j) s[j] = std::sqrt(sq[j]);
  return NeuronStatistic(VectorD(std::move(s)), s_rows);
}

ExpertSet select_experts(const NeuronStatistic& stat, const SparsityConfig& cfg) {
  const std::size_t k = cfg.k_for(stat.d_ff());
  return ExpertSet{top_k_indices(stat.s, k), cfg};
}

namespace {

void gather_rows_into(const Matrix& m, const std::vector<std::size_t>& rows,
                      Matrix& out) {
  out.assign_shape(rows.size(), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto src = m.row(rows[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
}

void gather_cols_into(const Matrix& m, const std::vector<std::size_t>& cols,
                      Matrix& out) {
  out.assign_shape(m.rows(), cols.size());
  const std::size_t k = cols.size();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const float* src = m.data().data() + i * m.cols();
    float* dst = out.data().data() + i * k;
    for (std::size_t j = 0; j < k; ++j) dst[j] = src[cols[j]];
  }
}

Vector gather(const Vector& v, const std::vector<std::size_t>& idx) {
  std::vector<float> out(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) out[i] = v[idx[i]];
  return Vector(std::move(out));
}

}  // namespace

void prune_block_into(const FFBlock& block, const ExpertSet& experts,
                      PrunedFFBlock& out) {
  if (experts.experts.universe() != block.d_ff()) {
    throw std::invalid_argument("prune_block: expert universe != d_ff");
  }
  const auto& idx = experts.experts.indices();
  FFBlock& hat = out.block;
  gather_rows_into(block.w1, idx, hat.w1);
  hat.b1 = gather(block.b1, idx);
  if (block.glu) {
    if (!hat.wg) hat.wg.emplace();
    gather_rows_into(*block.wg, idx, *hat.wg);
    hat.bg = gather(*block.bg, idx);
  } else {
    hat.wg.reset();
    hat.bg.reset();
  }
  gather_cols_into(block.w2, idx, hat.w2);
  hat.b2 = block.b2;
  hat.act = block.act;
  hat.glu = block.glu;
  hat.use_gelu_tanh = block.use_gelu_tanh;
  hat.validate();
  out.experts = experts;
}

PrunedFFBlock prune_block(const FFBlock& block, const ExpertSet& experts) {
  PrunedFFBlock out;
  prune_block_into(block, experts, out);
  return out;
}

Matrix pruned_forward(const PrunedFFBlock& pruned, const Matrix& x) {
  return ff_forward(pruned.block, x);
}

NeuronStatistic aggregate_statistics(const std::vector<NeuronStatistic>& stats) {
  if (stats.empty()) {
    throw std::invalid_argument("aggregate_statistics: empty list");
  }
  const std::size_t dff = stats.front().d_ff();
  std::vector<double> acc(dff, 0.0);
  std::size_t tokens = 0;
  for (const auto& stat : stats) {
    if (stat.d_ff() != dff) {
      throw std::invalid_argument("aggregate_statistics: mismatched lengths");
    }
    if (stat.token_count == 0) {
      throw std::invalid_argument("aggregate_statistics: zero token count");
    }
    const double scale = 1.0 / std::sqrt(double(stat.token_count));
    for (std::size_t j = 0; j < dff; ++j) acc[j] += stat.s[j] * scale;
    tokens += stat.token_count;
  }
  return NeuronStatistic(VectorD(std::move(acc)), tokens);
}

PromptResult griffin_pipeline(const FFBlock& block, const Matrix& prompt,
                              const SparsityConfig& cfg) {
  if (prompt.rows() == 0) {
    throw std::invalid_argument("griffin_pipeline: empty prompt");
  }
  ActivationMatrix acts = ff1_forward(block, prompt);
  Matrix prompt_output = ff2_forward(block, acts.z);
  const NeuronStatistic stat = compute_statistic(acts);
  const ExpertSet experts = select_experts(stat, cfg);
  return PromptResult{std::move(prompt_output), prune_block(block, experts)};
}

}  // namespace griffin
