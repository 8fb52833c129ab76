#pragma once

#include <vector>

#include "griffin/ffn.hpp"

namespace griffin {

// FF sparsity level and the neuron count it keeps.
struct SparsityConfig {
  double ff_sparsity = 0.0;  // fraction of FF neurons removed, in [0, 1)

  SparsityConfig() = default;
  explicit SparsityConfig(double sparsity);

  // k = max(1, round((1 - sparsity) * d_ff)), round half up.
  std::size_t k_for(std::size_t d_ff) const;
};

// Per-neuron importance statistic: s[j] = || column j of zbar ||_2 over the
// token axis. Entries are nonnegative; for a single sequence of S tokens each
// entry is at most sqrt(S).
struct NeuronStatistic {
  VectorD s;                   // [d_ff]
  std::size_t token_count = 0;  // S

  NeuronStatistic() = default;
  NeuronStatistic(VectorD s_in, std::size_t token_count_in);

  std::size_t d_ff() const { return s.len(); }
};

// The selected expert neurons plus the sparsity config that produced them.
struct ExpertSet {
  IndexSet experts;
  SparsityConfig config;

  std::size_t k() const { return experts.size(); }
};

// Reparameterized block restricted to the expert neurons, in ascending index
// order. The inner block is a regular FFBlock with d_ff = k, so the pruned
// forward is the same code path as the full forward.
struct PrunedFFBlock {
  FFBlock block;
  ExpertSet experts;

  std::size_t k() const { return block.d_ff(); }
};

NeuronStatistic compute_statistic(const ActivationMatrix& acts);

ExpertSet select_experts(const NeuronStatistic& stat, const SparsityConfig& cfg);

PrunedFFBlock prune_block(const FFBlock& block, const ExpertSet& experts);

// In-place variant reusing out's storage; re-selection loops avoid repeated
// large allocations this way.
void prune_block_into(const FFBlock& block, const ExpertSet& experts,
                      PrunedFFBlock& out);

Matrix pruned_forward(const PrunedFFBlock& pruned, const Matrix& x);

// s_bar = sum_i s_i / sqrt(S_i); token_count accumulates sum of S_i.
NeuronStatistic aggregate_statistics(const std::vector<NeuronStatistic>& stats);

struct PromptResult {
  Matrix prompt_output;  // full-block output for the prompt, bit-identical
  PrunedFFBlock pruned;  // block to use for every generation step
};

// Prompt phase: run the full block, derive the statistic and expert set from
// the prompt activations, and return the pruned block for generation.
PromptResult griffin_pipeline(const FFBlock& block, const Matrix& prompt,
                              const SparsityConfig& cfg);

}  // namespace griffin
