#pragma once

#include "griffin/gate.hpp"
#include "griffin/rng.hpp"

namespace griffin {

// Static neuron-magnitude scores: ||row_j(W1)||_2, multiplied elementwise by
// ||row_j(Wg)||_2 for GLU blocks.
struct MagnitudeMetric {
  VectorD scores;  // [d_ff], nonnegative
};

MagnitudeMetric magnitude_metric(const FFBlock& block);

// Input-independent expert selection by weight magnitudes.
ExpertSet magnitude_experts(const FFBlock& block, const SparsityConfig& cfg);

// Unstructured per-prompt weight masks, one per FF matrix. Entries are 0/1;
// each row keeps round((1 - sparsity) * cols) weights.
struct WandaMask {
  Matrix w1_mask;                 // [d_ff, d]
  std::optional<Matrix> wg_mask;  // [d_ff, d]
  std::optional<Matrix> w2_mask;  // [d, d_ff], absent when mask_w2 = false
  double sparsity = 0.0;

  // Copy of the block with masked weights zeroed; unmasked entries are
  // bit-identical to the original. Biases untouched.
  FFBlock apply(const FFBlock& block) const;
};

struct WandaOptions {
  bool mask_w2 = true;  // also mask the down projection
};

// Scores S_ij = |W_ij| * ||X_.j||_2 with X the prompt hidden states for
// W1/Wg and the prompt activations z for W2; keeps the top (1 - sparsity)
// fraction within each row.
WandaMask wanda_prune(const FFBlock& block, const Matrix& prompt, double sparsity,
                      const WandaOptions& opts = {});

enum class SelectionMode { TopK, WeightedSampling, HalfTopKHalfSampling };

// Expert selection from a statistic: plain top-k, weighted sampling without
// replacement (probability proportional to s), or ceil(k/2) top-k followed by
// weighted sampling from the complement. Deterministic given the rng seed.
ExpertSet sampled_experts(const NeuronStatistic& stat, const SparsityConfig& cfg,
                          SelectionMode mode, std::uint64_t rng_seed);

}  // namespace griffin
