#include "griffin/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace griffin {

MagnitudeMetric magnitude_metric(const FFBlock& block) {
  const std::size_t dff = block.d_ff();
  std::vector<double> scores(dff);
  for (std::size_t j = 0; j < dff; ++j) {
    double score = std::sqrt(dot(block.w1.row(j), block.w1.row(j)));
    if (block.glu) {
      score *= std::sqrt(dot(block.wg->row(j), block.wg->row(j)));
    }
    scores[j] = score;
  }
  return MagnitudeMetric{VectorD(std::move(scores))};
}

ExpertSet magnitude_experts(const FFBlock& block, const SparsityConfig& cfg) {
  const MagnitudeMetric metric = magnitude_metric(block);
  const std::size_t k = cfg.k_for(block.d_ff());
  return ExpertSet{top_k_indices(metric.scores, k), cfg};
}

namespace {

// Per-row mask keeping the top `keep` scores |W_ij| * col_norm[j].
Matrix row_mask(const Matrix& w, const std::vector<double>& col_norms,
                std::size_t keep) {
  Matrix mask(w.rows(), w.cols());
  std::vector<std::size_t> order(w.cols());
  for (std::size_t i = 0; i < w.rows(); ++i) {
    std::iota(order.begin(), order.end(), std::size_t(0));
    auto score = [&](std::size_t j) { return std::abs(double(w(i, j))) * col_norms[j]; };
    std::partial_sort(order.begin(), order.begin() + std::ptrdiff_t(keep), order.end(),
                      [&](std::size_t a, std::size_t b) {
                        const double sa = score(a), sb = score(b);
                        if (sa != sb) return sa > sb;
                        return a < b;
                      });
    for (std::size_t j = 0; j < keep; ++j) mask(i, order[j]) = 1.0f;
  }
  return mask;
}

Matrix masked(const Matrix& w, const Matrix& mask) {
  Matrix out = w;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (mask.data()[i] == 0.0f) out.data()[i] = 0.0f;
  }
  return out;
}

}  // namespace

FFBlock WandaMask::apply(const FFBlock& block) const {
  FFBlock out = block;
  out.w1 = masked(block.w1, w1_mask);
  if (block.glu && wg_mask) out.wg = masked(*block.wg, *wg_mask);
  if (w2_mask) out.w2 = masked(block.w2, *w2_mask);
  return out;
}

WandaMask wanda_prune(const FFBlock& block, const Matrix& prompt, double sparsity,
                      const WandaOptions& opts) {
  if (!(sparsity >= 0.0 && sparsity < 1.0)) {
    throw std::invalid_argument("wanda_prune: sparsity must be in [0, 1)");
  }
  if (prompt.rows() == 0) {
    throw std::invalid_argument("wanda_prune: empty prompt");
  }
  const auto keep_of = [sparsity](std::size_t cols) {
    return std::size_t(std::llround((1.0 - sparsity) * double(cols)));
  };

  // Input feature norms: prompt hidden states for W1/Wg.
  const VectorD x_norms = column_l2_norms(prompt);
  WandaMask out;
  out.sparsity = sparsity;
  out.w1_mask = row_mask(block.w1, x_norms.data(), keep_of(block.d()));
  if (block.glu) {
    out.wg_mask = row_mask(*block.wg, x_norms.data(), keep_of(block.d()));
  }
  if (opts.mask_w2) {
    // Input features of W2 are the prompt activations z.
    const ActivationMatrix acts = ff1_forward(block, prompt);
    const VectorD z_norms = column_l2_norms(acts.z);
    out.w2_mask = row_mask(block.w2, z_norms.data(), keep_of(block.d_ff()));
  }
  return out;
}

ExpertSet sampled_experts(const NeuronStatistic& stat, const SparsityConfig& cfg,
                          SelectionMode mode, std::uint64_t rng_seed) {
  const std::size_t dff = stat.d_ff();
  const std::size_t k = cfg.k_for(dff);
  if (mode == SelectionMode::TopK) {
    return select_experts(stat, cfg);
  }

  std::size_t positive = 0;
  for (double v : stat.s.data()) positive += (v > 0.0) ? 1 : 0;
  if (positive < k) {
    throw std::invalid_argument("sampled_experts: fewer than k positive weights");
  }

  std::vector<bool> taken(dff, false);
  std::vector<std::size_t> picked;
  picked.reserve(k);

  if (mode == SelectionMode::HalfTopKHalfSampling) {
    const std::size_t top_half = (k + 1) / 2;
    const IndexSet top = top_k_indices(stat.s, top_half);
    for (std::size_t j : top.indices()) {
      taken[j] = true;
      picked.push_back(j);
    }
  }

  // Sequential weighted draws without replacement, renormalizing over the
  // remaining mass after each draw.
  Rng rng(rng_seed);
  std::vector<double> weights(stat.s.data());
  for (std::size_t j = 0; j < dff; ++j) {
    if (taken[j]) weights[j] = 0.0;
  }
  while (picked.size() < k) {
    double total = 0.0;
    for (double w : weights) total += w;
    if (!(total > 0.0)) {
      throw std::invalid_argument("sampled_experts: insufficient positive mass");
    }
    const double target = rng.next_real() * total;
    double cum = 0.0;
    std::size_t chosen = dff;
    for (std::size_t j = 0; j < dff; ++j) {
      if (weights[j] <= 0.0) continue;
      cum += weights[j];
      chosen = j;
      if (target < cum) break;
    }
    picked.push_back(chosen);
    weights[chosen] = 0.0;
    taken[chosen] = true;
  }

  std::sort(picked.begin(), picked.end());
  return ExpertSet{IndexSet(std::move(picked), dff), cfg};
}

}  // namespace griffin
