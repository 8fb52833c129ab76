#pragma once

#include <optional>
#include <string>
#include <vector>

#include "griffin/baselines.hpp"
#include "griffin/gate.hpp"
#include "griffin/rng.hpp"

namespace griffin {

// Attention-free decoder stack: embedding -> N residual FF blocks with RMS
// pre-norm -> output projection. FF blocks act tokenwise, so positions are
// independent and teacher-forced evaluation is exact.
struct ToyLayer {
  Vector norm_scale;  // [d]
  FFBlock ff;
};

struct ToyModel {
  std::size_t vocab = 0;
  std::size_t dim = 0;
  std::vector<ToyLayer> layers;
  Matrix embed;    // [vocab, d]
  Matrix unembed;  // [vocab, d]
  bool tied_unembed = false;

  void validate() const;
};

inline constexpr double kRmsNormEps = 1e-6;

// Teacher-forced prompt/generation split: positions < prompt_len use full
// blocks, the rest use the generation-phase blocks.
struct SimulationPartition {
  std::size_t prompt_len = 0;  // P >= 1
  std::size_t gen_len = 0;     // G >= 1

  SimulationPartition() = default;
  SimulationPartition(std::size_t p, std::size_t g);
  std::size_t total() const { return prompt_len + gen_len; }
};

enum class Method { Full, Griffin, Magnitude, Wanda, Sample, TopkSample };

const char* method_name(Method m);
Method method_from_name(const std::string& name);

struct MethodConfig {
  Method method = Method::Full;
  double sparsity = 0.5;
  std::uint64_t seed = 0;  // sampling-based selection
  WandaOptions wanda{};
  bool reselect_each_step = false;  // re-derive experts at every generation position
};

// x / rms(x) * scale, rowwise.
Matrix rms_norm_rows(const Matrix& x, const Vector& scale);

// Logits for every position. When gen_blocks is non-empty it must hold one
// block per layer; positions >= partition.prompt_len run through those blocks
// instead of the full ones.
Matrix forward_logits(const ToyModel& model, const std::vector<std::size_t>& tokens);
Matrix forward_logits(const ToyModel& model, const std::vector<std::size_t>& tokens,
                      const std::vector<FFBlock>& gen_blocks,
                      const SimulationPartition& partition);
Matrix forward_logits(const ToyModel& model, const std::vector<std::size_t>& tokens,
                      const std::vector<PrunedFFBlock>& pruned,
                      const SimulationPartition& partition);

// GRIFFIN statistic per layer, computed from a full-block pass over the
// prompt tokens.
std::vector<NeuronStatistic> prompt_statistics(const ToyModel& model,
                                               const std::vector<std::size_t>& prompt);

// Per-layer FF activations from a full-block pass (analysis exports).
std::vector<ActivationMatrix> trace_activations(const ToyModel& model,
                                                const std::vector<std::size_t>& tokens);

// Top-k per layer from per-layer statistics, pruned against the model blocks.
std::vector<PrunedFFBlock> prune_all_layers(const ToyModel& model,
                                            const std::vector<NeuronStatistic>& stats,
                                            const SparsityConfig& cfg);

// Per-layer generation blocks for a method, selected from the prompt tokens.
// Empty result means "use the full blocks" (Method::Full).
std::vector<FFBlock> generation_blocks(const ToyModel& model,
                                       const std::vector<std::size_t>& prompt,
                                       const MethodConfig& cfg,
                                       std::vector<ExpertSet>* expert_sets = nullptr);

// loss[t] = -log softmax(logits[t-1])[tokens[t]] for t in [1, S); loss[0] = 0.
std::vector<double> next_token_losses(const Matrix& logits,
                                      const std::vector<std::size_t>& tokens);

// exp(mean loss) over target positions [from, to).
double perplexity_over(const std::vector<double>& losses, std::size_t from, std::size_t to);

struct EvalResult {
  double ppl_full = 0.0;
  double ppl_method = 0.0;
};

// Perplexity of the generation-partition targets (positions P..S-1), for the
// full model and for the method on the same token stream.
EvalResult generation_perplexity(const ToyModel& model, const std::vector<std::size_t>& tokens,
                                 const SimulationPartition& partition, const MethodConfig& cfg);

// All tokens but the last form the prompt; the final token runs one forced
// generation step through the method's blocks. Returns last-position logits.
std::vector<float> classification_as_generation(const ToyModel& model,
                                                const std::vector<std::size_t>& tokens,
                                                const MethodConfig& cfg);

struct BatchEvalResult {
  std::vector<double> ppl_full;    // per sequence
  std::vector<double> ppl_method;  // per sequence
};

// Shares expert sets across consecutive groups of batch_size sequences via
// the aggregated statistic; batch_size = 0 aggregates over every sequence.
// Only structured statistic methods (Griffin/Sample/TopkSample) batch.
BatchEvalResult batched_generation_perplexity(const ToyModel& model,
                                              const std::vector<std::vector<std::size_t>>& sequences,
                                              const SimulationPartition& partition,
                                              const MethodConfig& cfg, std::size_t batch_size);

// ---------------------------------------------------------------------------
// Planted models: synthetic weights with known ground-truth expert structure.
// Each cluster owns a set of planted neurons every one of its tokens drives
// at `dominance` times the background level, plus per-token personal neurons
// that carry the next-token signal.
// ---------------------------------------------------------------------------

struct PlantedSpec {
  std::size_t clusters = 2;
  std::size_t experts_per_cluster = 8;
  double dominance = 10.0;  // > 1
  std::uint64_t rng_seed = 0;
};

struct PlantedDims {
  std::size_t d_ff = 64;
  std::size_t tokens_per_cluster = 16;  // cluster vocabulary size
  std::size_t neurons_per_token = 1;    // personal neurons per token
  std::size_t cycle_len = 4;            // next-token cycle length
  double follow_prob = 0.7;             // bigram follow probability baked into W2
  double embed_noise = 0.05;
};

struct PlantedModel {
  ToyModel model;
  std::vector<IndexSet> supports;                        // planted set per cluster
  std::vector<std::size_t> token_cluster;                // [vocab]
  std::vector<std::size_t> next_token;                   // cycle successor, [vocab]
  std::vector<std::vector<std::size_t>> token_neurons;   // personal neurons, [vocab]
  std::vector<std::vector<std::vector<std::size_t>>> cycles;  // [cluster][cycle][pos]
  PlantedSpec spec;
  PlantedDims dims;

  std::size_t vocab() const { return model.vocab; }
};

PlantedModel generate_planted_model(const PlantedSpec& spec, const PlantedDims& dims);

// Random walk over `cycles_per_seq` of the cluster's cycles (all cycles when
// 0): follow the cycle with follow_prob, otherwise jump to a token of the
// active set with geometric weights of ratio `skew` (1 = uniform).
std::vector<std::size_t> sample_planted_sequence(const PlantedModel& pm, std::size_t cluster,
                                                 std::size_t length, std::size_t cycles_per_seq,
                                                 double skew, Rng& rng);

}  // namespace griffin
