#pragma once

#include <vector>

#include "griffin/gate.hpp"
#include "griffin/rng.hpp"

namespace griffin {

// Windowed |zbar| export for heatmap rendering outside the library.
struct HeatmapExport {
  std::size_t layer = 0;
  Matrix values;  // [tokens, features], entries in [0, 1]
};

// Mean pairwise top-k Jaccard similarity per layer and k.
struct JaccardReport {
  std::vector<std::size_t> k_grid;
  std::vector<std::vector<double>> mean_similarity;  // [layer][k index]
};

enum class ControlKind { Original, PermutedTokens, UniformRandomTokens };

const char* control_name(ControlKind kind);
ControlKind control_from_name(const std::string& name);

// |a n b| / |a u b|; two empty sets count as identical (1).
double jaccard(const IndexSet& a, const IndexSet& b);

// For each k in the grid, the mean Jaccard similarity of top-k index sets
// over all unordered pairs of samples. Requires >= 2 samples sharing d_ff.
std::vector<double> intersample_similarity(const std::vector<NeuronStatistic>& samples,
                                           const std::vector<std::size_t>& k_grid);

// Entries of s sorted descending and min-max normalized to [0, 1]. A constant
// statistic yields all zeros.
VectorD sorted_statistic_profile(const NeuronStatistic& stat);

// Original: unchanged. PermutedTokens: seeded shuffle of the same multiset.
// UniformRandomTokens: same length, i.i.d. uniform over [0, vocab).
std::vector<std::size_t> control_inputs(const std::vector<std::size_t>& tokens,
                                        ControlKind kind, std::size_t vocab,
                                        std::uint64_t rng_seed);

// |zbar| restricted to the leading (tokens, features) window.
HeatmapExport heatmap_export(const ActivationMatrix& acts, std::size_t window_tokens,
                             std::size_t window_features, std::size_t layer = 0);

}  // namespace griffin
