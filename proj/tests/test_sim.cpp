#include <cmath>
#include <numeric>

#include "doctest.h"
#include "griffin/flocking.hpp"
#include "griffin/sim.hpp"
#include "helpers.hpp"

using namespace griffin;
using griffin::testing::max_abs_diff;
using griffin::testing::random_block;
using griffin::testing::random_matrix;
using griffin::testing::random_vector;

namespace {

ToyModel random_model(Rng& rng, std::size_t vocab, std::size_t dim, std::size_t dff,
                      std::size_t layers, bool glu) {
  ToyModel model;
  model.vocab = vocab;
  model.dim = dim;
  model.embed = random_matrix(vocab, dim, rng);
  model.unembed = random_matrix(vocab, dim, rng, 0.5);
  for (std::size_t i = 0; i < layers; ++i) {
    ToyLayer layer;
    std::vector<float> scale(dim, 1.0f);
    layer.norm_scale = Vector(std::move(scale));
    layer.ff = random_block(dim, dff, glu ? ActivationKind::SiLU : ActivationKind::GELU,
                            glu, rng);
    model.layers.push_back(std::move(layer));
  }
  return model;
}

std::vector<std::size_t> random_tokens(Rng& rng, std::size_t vocab, std::size_t len) {
  std::vector<std::size_t> tokens(len);
  for (auto& t : tokens) t = rng.next_below(vocab);
  return tokens;
}

}  // namespace

TEST_CASE("forward_logits is deterministic and validates tokens") {
  Rng rng(80);
  const ToyModel model = random_model(rng, 10, 6, 12, 2, true);
  const auto tokens = random_tokens(rng, 10, 5);
  const Matrix a = forward_logits(model, tokens);
  const Matrix b = forward_logits(model, tokens);
  CHECK(max_abs_diff(a, b) == 0.0);
  CHECK(a.rows() == 5);
  CHECK(a.cols() == 10);
  CHECK_THROWS_AS(forward_logits(model, {0, 99}), std::invalid_argument);
}

TEST_CASE("zero-sparsity pruned blocks reproduce baseline logits at all positions") {
  Rng rng(81);
  const ToyModel model = random_model(rng, 8, 5, 10, 2, false);
  const auto tokens = random_tokens(rng, 8, 7);
  const SimulationPartition partition(3, 4);
  const std::vector<std::size_t> prompt(tokens.begin(), tokens.begin() + 3);

  const auto stats = prompt_statistics(model, prompt);
  const auto pruned = prune_all_layers(model, stats, SparsityConfig(0.0));
  const Matrix base = forward_logits(model, tokens);
  const Matrix part = forward_logits(model, tokens, pruned, partition);
  CHECK(max_abs_diff(base, part) == 0.0);
}

TEST_CASE("generation partition matches the masked-activation oracle on one layer") {
  Rng rng(82);
  const ToyModel model = random_model(rng, 12, 8, 64, 1, false);
  const auto tokens = random_tokens(rng, 12, 10);
  const SimulationPartition partition(6, 4);
  const std::vector<std::size_t> prompt(tokens.begin(), tokens.begin() + 6);

  const auto stats = prompt_statistics(model, prompt);
  const auto pruned = prune_all_layers(model, stats, SparsityConfig(0.5));
  const Matrix got = forward_logits(model, tokens, pruned, partition);

  // oracle: full hidden pass with non-expert activations zeroed at gen rows
  Matrix x(10, 8);
  for (std::size_t i = 0; i < 10; ++i) {
    const auto row = model.embed.row(tokens[i]);
    std::copy(row.begin(), row.end(), x.row(i).begin());
  }
  const auto& layer = model.layers[0];
  const Matrix h = rms_norm_rows(x, layer.norm_scale);
  const ActivationMatrix acts = ff1_forward(layer.ff, h);
  Matrix z = acts.z;
  const IndexSet& experts = pruned[0].experts.experts;
  for (std::size_t i = 6; i < 10; ++i) {
    for (std::size_t j = 0; j < z.cols(); ++j) {
      if (!experts.contains(j)) z(i, j) = 0.0f;
    }
  }
  const Matrix ff_out = ff2_forward(layer.ff, z);
  Matrix hidden = x;
  for (std::size_t i = 0; i < 10; ++i) {
    for (std::size_t j = 0; j < 8; ++j) hidden(i, j) += ff_out(i, j);
  }
  Matrix want(10, 12);
  for (std::size_t i = 0; i < 10; ++i) {
    for (std::size_t v = 0; v < 12; ++v) {
      want(i, v) = float(dot(model.unembed.row(v), hidden.row(i)));
    }
  }
  CHECK(griffin::testing::max_rel_diff(got, want) < 1e-5);
}

TEST_CASE("prefix consistency: prompt logits identical across methods") {
  Rng rng(83);
  const ToyModel model = random_model(rng, 10, 6, 20, 2, true);
  const auto tokens = random_tokens(rng, 10, 9);
  const SimulationPartition partition(5, 4);
  const std::vector<std::size_t> prompt(tokens.begin(), tokens.begin() + 5);
  const Matrix base = forward_logits(model, tokens);

  for (Method m : {Method::Griffin, Method::Magnitude, Method::Wanda}) {
    MethodConfig cfg;
    cfg.method = m;
    cfg.sparsity = 0.5;
    const auto blocks = generation_blocks(model, prompt, cfg);
    const Matrix got = forward_logits(model, tokens, blocks, partition);
    for (std::size_t i = 0; i < 5; ++i) {
      for (std::size_t v = 0; v < 10; ++v) {
        CHECK(got(i, v) == base(i, v));
      }
    }
  }
}

TEST_CASE("uniform-logit model has perplexity equal to vocab size") {
  ToyModel model;
  model.vocab = 13;
  model.dim = 4;
  model.embed = Matrix(13, 4);
  model.unembed = Matrix(13, 4);
  ToyLayer layer;
  layer.norm_scale = Vector(std::vector<float>(4, 1.0f));
  layer.ff = FFBlock(Matrix(6, 4), Vector(6), std::nullopt, std::nullopt, Matrix(4, 6),
                     Vector(4), ActivationKind::ReLU, false);
  model.layers.push_back(std::move(layer));

  Rng rng(84);
  const auto tokens = random_tokens(rng, 13, 12);
  MethodConfig cfg;
  cfg.method = Method::Griffin;
  cfg.sparsity = 0.5;
  const EvalResult res = generation_perplexity(model, tokens, SimulationPartition(6, 6), cfg);
  CHECK(res.ppl_full == doctest::Approx(13.0).epsilon(1e-9));
  CHECK(res.ppl_method == doctest::Approx(13.0).epsilon(1e-9));
}

TEST_CASE("zero sparsity gives ppl_method == ppl_full exactly") {
  Rng rng(85);
  const ToyModel model = random_model(rng, 9, 5, 14, 2, false);
  const auto tokens = random_tokens(rng, 9, 10);
  for (Method m : {Method::Griffin, Method::Magnitude, Method::Wanda}) {
    MethodConfig cfg;
    cfg.method = m;
    cfg.sparsity = 0.0;
    const EvalResult res =
        generation_perplexity(model, tokens, SimulationPartition(5, 5), cfg);
    CHECK(res.ppl_method == res.ppl_full);
  }
}

TEST_CASE("full-method losses do not depend on the partition point") {
  Rng rng(86);
  const ToyModel model = random_model(rng, 11, 6, 16, 1, true);
  const auto tokens = random_tokens(rng, 11, 12);
  const Matrix base = forward_logits(model, tokens);
  const auto base_losses = next_token_losses(base, tokens);
  MethodConfig cfg;  // Full
  for (std::size_t p : {2, 4, 8}) {
    const SimulationPartition partition(p, 12 - p);
    const EvalResult res = generation_perplexity(model, tokens, partition, cfg);
    CHECK(res.ppl_full == doctest::Approx(perplexity_over(base_losses, p, 12)).epsilon(1e-12));
    CHECK(res.ppl_method == res.ppl_full);
  }
}

TEST_CASE("classification_as_generation selects from all but the final token") {
  Rng rng(87);
  const ToyModel model = random_model(rng, 10, 6, 18, 2, true);
  const auto tokens = random_tokens(rng, 10, 8);

  MethodConfig cfg;
  cfg.method = Method::Griffin;
  cfg.sparsity = 0.0;
  const auto logits = classification_as_generation(model, tokens, cfg);
  const Matrix base = forward_logits(model, tokens);
  for (std::size_t v = 0; v < 10; ++v) {
    CHECK(logits[v] == base(7, v));
  }
  CHECK_THROWS_AS(classification_as_generation(model, {1}, cfg), std::invalid_argument);

  // repeated-token sequence: experts from the prompt equal experts from the
  // full sequence (identical rows add no new directions)
  const std::vector<std::size_t> repeated(8, 4);
  const std::vector<std::size_t> prompt(repeated.begin(), repeated.end() - 1);
  cfg.sparsity = 0.5;
  std::vector<ExpertSet> from_prompt, from_full;
  generation_blocks(model, prompt, cfg, &from_prompt);
  generation_blocks(model, repeated, cfg, &from_full);
  for (std::size_t li = 0; li < from_prompt.size(); ++li) {
    CHECK(from_prompt[li].experts.indices() == from_full[li].experts.indices());
  }
}

TEST_CASE("batched evaluation with identical sequences matches batch of one") {
  Rng rng(88);
  const ToyModel model = random_model(rng, 10, 6, 20, 1, false);
  const auto seq = random_tokens(rng, 10, 8);
  const std::vector<std::vector<std::size_t>> batch4(4, seq);
  const SimulationPartition partition(4, 4);
  MethodConfig cfg;
  cfg.method = Method::Griffin;
  cfg.sparsity = 0.5;
  const BatchEvalResult one = batched_generation_perplexity(model, {seq}, partition, cfg, 1);
  const BatchEvalResult four = batched_generation_perplexity(model, batch4, partition, cfg, 4);
  for (double p : four.ppl_method) {
    CHECK(p == doctest::Approx(one.ppl_method[0]).epsilon(1e-12));
  }
}

TEST_CASE("reselect_each_step flag runs and stays close to frozen selection") {
  Rng rng(89);
  const ToyModel model = random_model(rng, 8, 5, 12, 1, false);
  const auto tokens = random_tokens(rng, 8, 8);
  MethodConfig cfg;
  cfg.method = Method::Griffin;
  cfg.sparsity = 0.25;
  cfg.reselect_each_step = true;
  const EvalResult res = generation_perplexity(model, tokens, SimulationPartition(4, 4), cfg);
  CHECK(res.ppl_method > 0.0);
  CHECK(std::isfinite(res.ppl_method));
}

// ---------------------------------------------------------------------------
// planted models
// ---------------------------------------------------------------------------

TEST_CASE("planted model validates dimensions") {
  PlantedSpec spec;
  spec.clusters = 4;
  spec.experts_per_cluster = 20;
  PlantedDims dims;
  dims.d_ff = 64;  // 80 planted neurons will not fit
  CHECK_THROWS_AS(generate_planted_model(spec, dims), std::invalid_argument);
}

TEST_CASE("single-cluster planted model: griffin recovers all experts at k = 8") {
  PlantedSpec spec;
  spec.clusters = 1;
  spec.experts_per_cluster = 8;
  spec.dominance = 10.0;
  spec.rng_seed = 5;
  PlantedDims dims;
  dims.d_ff = 64;
  dims.tokens_per_cluster = 16;
  const PlantedModel pm = generate_planted_model(spec, dims);

  Rng rng(90);
  const auto tokens = sample_planted_sequence(pm, 0, 48, 0, 1.0, rng);
  const auto stats = prompt_statistics(pm.model, tokens);
  const ExpertSet picked =
      select_experts(stats[0], SparsityConfig(1.0 - 8.0 / 64.0));
  CHECK(picked.experts.indices() == pm.supports[0].indices());
}

TEST_CASE("huge dominance leaves almost no statistic mass outside the support") {
  PlantedSpec spec;
  spec.clusters = 1;
  spec.experts_per_cluster = 8;
  spec.dominance = 1e6;
  spec.rng_seed = 6;
  PlantedDims dims;
  dims.d_ff = 64;
  dims.tokens_per_cluster = 16;
  const PlantedModel pm = generate_planted_model(spec, dims);
  Rng rng(91);
  const auto tokens = sample_planted_sequence(pm, 0, 32, 0, 1.0, rng);
  const auto stats = prompt_statistics(pm.model, tokens);
  double inside = 0.0, total = 0.0;
  for (std::size_t j = 0; j < stats[0].d_ff(); ++j) {
    total += stats[0].s[j];
    if (pm.supports[0].contains(j)) inside += stats[0].s[j];
  }
  CHECK((total - inside) / total < 1e-3);
}

TEST_CASE("two disjoint clusters have top-8 jaccard 0") {
  PlantedSpec spec;
  spec.clusters = 2;
  spec.experts_per_cluster = 8;
  spec.dominance = 10.0;
  spec.rng_seed = 7;
  PlantedDims dims;
  dims.d_ff = 64;
  dims.tokens_per_cluster = 16;
  const PlantedModel pm = generate_planted_model(spec, dims);
  CHECK(jaccard(pm.supports[0], pm.supports[1]) == 0.0);

  Rng rng(92);
  auto rng_a = rng.child(0);
  auto rng_b = rng.child(1);
  const auto seq_a = sample_planted_sequence(pm, 0, 40, 0, 1.0, rng_a);
  const auto seq_b = sample_planted_sequence(pm, 1, 40, 0, 1.0, rng_b);
  const auto stat_a = prompt_statistics(pm.model, seq_a)[0];
  const auto stat_b = prompt_statistics(pm.model, seq_b)[0];
  CHECK(jaccard(top_k_indices(stat_a.s, 8), top_k_indices(stat_b.s, 8)) == 0.0);
}

TEST_CASE("planted sequences stay inside the cluster vocabulary") {
  PlantedSpec spec;
  spec.clusters = 2;
  spec.experts_per_cluster = 4;
  spec.rng_seed = 8;
  PlantedDims dims;
  dims.d_ff = 48;
  dims.tokens_per_cluster = 12;
  dims.cycle_len = 4;
  const PlantedModel pm = generate_planted_model(spec, dims);
  Rng rng(93);
  const auto seq = sample_planted_sequence(pm, 1, 64, 2, 0.7, rng);
  CHECK(seq.size() == 64);
  std::size_t distinct = 0;
  std::vector<bool> seen(pm.vocab(), false);
  for (std::size_t t : seq) {
    CHECK(pm.token_cluster[t] == 1);
    if (!seen[t]) {
      seen[t] = true;
      ++distinct;
    }
  }
  CHECK(distinct <= 8);  // 2 cycles of 4 tokens
  CHECK_THROWS_AS(sample_planted_sequence(pm, 5, 8, 0, 1.0, rng), std::invalid_argument);
}

TEST_CASE("planted full model predicts cycle successors better than chance") {
  PlantedSpec spec;
  spec.clusters = 2;
  spec.experts_per_cluster = 8;
  spec.rng_seed = 9;
  PlantedDims dims;
  dims.d_ff = 64;
  dims.tokens_per_cluster = 16;
  const PlantedModel pm = generate_planted_model(spec, dims);
  Rng rng(94);
  const auto tokens = sample_planted_sequence(pm, 0, 64, 0, 1.0, rng);
  const Matrix logits = forward_logits(pm.model, tokens);
  // argmax at each position should be the cycle successor
  std::size_t correct = 0;
  for (std::size_t t = 0; t + 1 < tokens.size(); ++t) {
    const auto row = logits.row(t);
    std::size_t best = 0;
    for (std::size_t v = 1; v < pm.vocab(); ++v) {
      if (row[v] > row[best]) best = v;
    }
    if (best == pm.next_token[tokens[t]]) ++correct;
  }
  CHECK(double(correct) / double(tokens.size() - 1) > 0.95);

  const auto losses = next_token_losses(logits, tokens);
  const double ppl = perplexity_over(losses, 1, tokens.size());
  CHECK(ppl < double(pm.vocab()));  // far better than uniform
}
