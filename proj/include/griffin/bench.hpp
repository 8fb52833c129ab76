#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "griffin/gate.hpp"

namespace griffin {

// "P+G" timing scenario: generate gen_len tokens from a prompt_len prompt.
struct BenchScenario {
  std::size_t prompt_len = 2048;
  std::size_t gen_len = 128;
  std::size_t d = 4096;
  std::size_t d_ff = 11008;
  std::vector<double> sparsities = {0.5};
  std::size_t repeats = 3;  // >= 3
  std::size_t warmup = 1;   // >= 1

  void validate() const;
};

struct BenchRecord {
  std::string method;  // "full" or "griffin"
  std::size_t prompt_len = 0;
  std::size_t gen_len = 0;
  std::size_t d = 0;
  std::size_t d_ff = 0;
  double sparsity = 0.0;
  double prompt_s = 0.0;      // median full prompt pass
  double gen_s = 0.0;         // median generation-phase wall time
  double gen_mean_s = 0.0;
  double gen_stddev_s = 0.0;
  double select_s = 0.0;      // statistic + top-k + prune, median
  double speedup = 1.0;       // full gen median / method gen median
};

// Times one full prompt pass, then gen_len sequential single-token forward
// calls per method. Medians over `repeats` after `warmup` discarded rounds.
std::vector<BenchRecord> bench_generation(const BenchScenario& scenario,
                                          const FFBlock& block,
                                          std::uint64_t seed = 0);

// Header "method,P,G,D,D_FF,sparsity,prompt_s,gen_s,speedup", one row per
// record, values at 6 significant digits.
void emit_csv(const std::vector<BenchRecord>& records, std::ostream& out);
std::string bench_csv(const std::vector<BenchRecord>& records);
std::vector<BenchRecord> parse_bench_csv(std::istream& in);

// Per-token FF work proportional to the active neuron count: matvec
// multiply-adds, bias adds, activation and gating per neuron. The
// d_ff-independent b2 add is excluded so pruned counts scale exactly with k.
std::uint64_t ff_neuron_flops_per_token(std::size_t d, std::size_t d_ff, bool glu);

}  // namespace griffin
