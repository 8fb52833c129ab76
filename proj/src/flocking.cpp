#include "griffin/flocking.hpp"

#include <algorithm>
#include <cmath>

namespace griffin {

const char* control_name(ControlKind kind) {
  switch (kind) {
    case ControlKind::Original: return "none";
    case ControlKind::PermutedTokens: return "permute";
    case ControlKind::UniformRandomTokens: return "random";
  }
  return "?";
}

ControlKind control_from_name(const std::string& name) {
  if (name == "none") return ControlKind::Original;
  if (name == "permute") return ControlKind::PermutedTokens;
  if (name == "random") return ControlKind::UniformRandomTokens;
  throw std::invalid_argument("unknown control kind: " + name);
}

double jaccard(const IndexSet& a, const IndexSet& b) {
  if (a.universe() != b.universe()) {
    throw std::invalid_argument("jaccard: universe mismatch");
  }
  if (a.size() == 0 && b.size() == 0) return 1.0;
  std::size_t inter = 0;
  std::size_t ia = 0, ib = 0;
  const auto& va = a.indices();
  const auto& vb = b.indices();
  while (ia < va.size() && ib < vb.size()) {
    if (va[ia] == vb[ib]) {
      ++inter;
      ++ia;
      ++ib;
    } else if (va[ia] < vb[ib]) {
      ++ia;
    } else {
      ++ib;
    }
  }
  const std::size_t uni = va.size() + vb.size() - inter;
  return double(inter) / double(uni);
}

std::vector<double> intersample_similarity(const std::vector<NeuronStatistic>& samples,
                                           const std::vector<std::size_t>& k_grid) {
  if (samples.size() < 2) {
    throw std::invalid_argument("intersample_similarity: need >= 2 samples");
  }
  const std::size_t dff = samples.front().d_ff();
  for (const auto& s : samples) {
    if (s.d_ff() != dff) {
      throw std::invalid_argument("intersample_similarity: mismatched d_ff");
    }
  }
  std::vector<double> means;
  means.reserve(k_grid.size());
  for (std::size_t k : k_grid) {
    std::vector<IndexSet> tops;
    tops.reserve(samples.size());
    for (const auto& s : samples) tops.push_back(top_k_indices(s.s, k));
    double sum = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < tops.size(); ++i) {
      for (std::size_t j = i + 1; j < tops.size(); ++j) {
        sum += jaccard(tops[i], tops[j]);
        ++pairs;
      }
    }
    means.push_back(sum / double(pairs));
  }
  return means;
}

VectorD sorted_statistic_profile(const NeuronStatistic& stat) {
  std::vector<double> sorted(stat.s.data());
  if (sorted.empty()) return VectorD();
  std::sort(sorted.begin(), sorted.end(), std::greater<double>());
  const double hi = sorted.front();
  const double lo = sorted.back();
  const double range = hi - lo;
  if (range <= 0.0) {
    std::fill(sorted.begin(), sorted.end(), 0.0);
    return VectorD(std::move(sorted));
  }
  for (double& v : sorted) v = (v - lo) / range;
  return VectorD(std::move(sorted));
}

std::vector<std::size_t> control_inputs(const std::vector<std::size_t>& tokens,
                                        ControlKind kind, std::size_t vocab,
                                        std::uint64_t rng_seed) {
  if (vocab == 0) {
    throw std::invalid_argument("control_inputs: empty vocabulary");
  }
  std::vector<std::size_t> out = tokens;
  Rng rng(rng_seed);
  switch (kind) {
    case ControlKind::Original:
      break;
    case ControlKind::PermutedTokens:
      rng.shuffle(out);
      break;
    case ControlKind::UniformRandomTokens:
      for (auto& t : out) t = std::size_t(rng.next_below(vocab));
      break;
  }
  return out;
}

HeatmapExport heatmap_export(const ActivationMatrix& acts, std::size_t window_tokens,
                             std::size_t window_features, std::size_t layer) {
  if (window_tokens > acts.zbar.rows() || window_features > acts.zbar.cols()) {
    throw std::invalid_argument("heatmap_export: window exceeds dims");
  }
  Matrix values(window_tokens, window_features);
  for (std::size_t i = 0; i < window_tokens; ++i) {
    for (std::size_t j = 0; j < window_features; ++j) {
      values(i, j) = std::abs(acts.zbar(i, j));
    }
  }
  return HeatmapExport{layer, std::move(values)};
}

}  // namespace griffin
