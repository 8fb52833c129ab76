#include "griffin/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace griffin {

void ToyModel::validate() const {
  if (vocab == 0 || dim == 0) throw std::invalid_argument("toy model: empty dims");
  if (embed.rows() != vocab || embed.cols() != dim) {
    throw std::invalid_argument("toy model: embed must be [vocab, d]");
  }
  if (unembed.rows() != vocab || unembed.cols() != dim) {
    throw std::invalid_argument("toy model: unembed must be [vocab, d]");
  }
  for (const auto& layer : layers) {
    if (layer.ff.d() != dim) throw std::invalid_argument("toy model: layer dim mismatch");
    if (layer.norm_scale.len() != dim) {
      throw std::invalid_argument("toy model: norm scale length != d");
    }
    layer.ff.validate();
  }
}

SimulationPartition::SimulationPartition(std::size_t p, std::size_t g)
    : prompt_len(p), gen_len(g) {
  if (p < 1 || g < 1) throw std::invalid_argument("partition: require P >= 1, G >= 1");
}

const char* method_name(Method m) {
  switch (m) {
    case Method::Full: return "full";
    case Method::Griffin: return "griffin";
    case Method::Magnitude: return "magnitude";
    case Method::Wanda: return "wanda";
    case Method::Sample: return "sample";
    case Method::TopkSample: return "topk-sample";
  }
  return "?";
}

Method method_from_name(const std::string& name) {
  if (name == "full") return Method::Full;
  if (name == "griffin") return Method::Griffin;
  if (name == "magnitude") return Method::Magnitude;
  if (name == "wanda") return Method::Wanda;
  if (name == "sample") return Method::Sample;
  if (name == "topk-sample") return Method::TopkSample;
  throw std::invalid_argument("unknown method: " + name);
}

Matrix rms_norm_rows(const Matrix& x, const Vector& scale) {
  if (x.cols() != scale.len()) {
    throw std::invalid_argument("rms_norm_rows: scale length != cols");
  }
  Matrix out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double sq = 0.0;
    for (std::size_t j = 0; j < x.cols(); ++j) {
      const double v = double(x(i, j));
      sq += v * v;
    }
    const double inv = 1.0 / std::sqrt(sq / double(x.cols()) + kRmsNormEps);
    for (std::size_t j = 0; j < x.cols(); ++j) {
      out(i, j) = float(double(x(i, j)) * inv * double(scale[j]));
    }
  }
  return out;
}

namespace {

Matrix embed_tokens(const ToyModel& model, const std::vector<std::size_t>& tokens) {
  if (tokens.empty()) throw std::invalid_argument("forward: empty token sequence");
  Matrix x(tokens.size(), model.dim);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i] >= model.vocab) {
      throw std::invalid_argument("forward: token out of range at position " +
                                  std::to_string(i));
    }
    const auto src = model.embed.row(tokens[i]);
    std::copy(src.begin(), src.end(), x.row(i).begin());
  }
  return x;
}

Matrix take_rows(const Matrix& m, std::size_t from, std::size_t to) {
  Matrix out(to - from, m.cols());
  for (std::size_t i = from; i < to; ++i) {
    const auto src = m.row(i);
    std::copy(src.begin(), src.end(), out.row(i - from).begin());
  }
  return out;
}

void add_rows(Matrix& dst, const Matrix& src, std::size_t at) {
  for (std::size_t i = 0; i < src.rows(); ++i) {
    auto d = dst.row(at + i);
    const auto s = src.row(i);
    for (std::size_t j = 0; j < src.cols(); ++j) d[j] += s[j];
  }
}

// Residual stack with an optional prompt/generation split per layer.
Matrix forward_hidden(const ToyModel& model, const std::vector<std::size_t>& tokens,
                      const std::vector<FFBlock>* gen_blocks, std::size_t prompt_len) {
  model.validate();
  Matrix x = embed_tokens(model, tokens);
  const std::size_t s = tokens.size();
  const std::size_t split = gen_blocks ? std::min(prompt_len, s) : s;
  for (std::size_t li = 0; li < model.layers.size(); ++li) {
    const auto& layer = model.layers[li];
    const Matrix h = rms_norm_rows(x, layer.norm_scale);
    if (split > 0) {
      add_rows(x, ff_forward(layer.ff, take_rows(h, 0, split)), 0);
    }
    if (split < s) {
      const FFBlock& gen = (*gen_blocks)[li];
      add_rows(x, ff_forward(gen, take_rows(h, split, s)), split);
    }
  }
  return x;
}

Matrix project_logits(const ToyModel& model, const Matrix& hidden) {
  Matrix logits(hidden.rows(), model.vocab);
  for (std::size_t i = 0; i < hidden.rows(); ++i) {
    const auto hi = hidden.row(i);
    for (std::size_t v = 0; v < model.vocab; ++v) {
      logits(i, v) = float(dot(model.unembed.row(v), hi));
    }
  }
  logits.check_finite("logits");
  return logits;
}

}  // namespace

Matrix forward_logits(const ToyModel& model, const std::vector<std::size_t>& tokens) {
  return project_logits(model, forward_hidden(model, tokens, nullptr, 0));
}

Matrix forward_logits(const ToyModel& model, const std::vector<std::size_t>& tokens,
                      const std::vector<FFBlock>& gen_blocks,
                      const SimulationPartition& partition) {
  if (partition.total() != tokens.size()) {
    throw std::invalid_argument("forward: partition P+G != sequence length");
  }
  if (gen_blocks.empty()) {
    return forward_logits(model, tokens);
  }
  if (gen_blocks.size() != model.layers.size()) {
    throw std::invalid_argument("forward: need one generation block per layer");
  }
  return project_logits(
      model, forward_hidden(model, tokens, &gen_blocks, partition.prompt_len));
}

Matrix forward_logits(const ToyModel& model, const std::vector<std::size_t>& tokens,
                      const std::vector<PrunedFFBlock>& pruned,
                      const SimulationPartition& partition) {
  std::vector<FFBlock> blocks;
  blocks.reserve(pruned.size());
  for (const auto& p : pruned) blocks.push_back(p.block);
  return forward_logits(model, tokens, blocks, partition);
}

std::vector<NeuronStatistic> prompt_statistics(const ToyModel& model,
                                               const std::vector<std::size_t>& prompt) {
  model.validate();
  Matrix x = embed_tokens(model, prompt);
  std::vector<NeuronStatistic> stats;
  stats.reserve(model.layers.size());
  for (const auto& layer : model.layers) {
    const Matrix h = rms_norm_rows(x, layer.norm_scale);
    const ActivationMatrix acts = ff1_forward(layer.ff, h);
    stats.push_back(compute_statistic(acts));
    add_rows(x, ff2_forward(layer.ff, acts.z), 0);
  }
  return stats;
}

std::vector<ActivationMatrix> trace_activations(const ToyModel& model,
                                                const std::vector<std::size_t>& tokens) {
  model.validate();
  Matrix x = embed_tokens(model, tokens);
  std::vector<ActivationMatrix> acts;
  acts.reserve(model.layers.size());
  for (const auto& layer : model.layers) {
    const Matrix h = rms_norm_rows(x, layer.norm_scale);
    acts.push_back(ff1_forward(layer.ff, h));
    add_rows(x, ff2_forward(layer.ff, acts.back().z), 0);
  }
  return acts;
}

std::vector<PrunedFFBlock> prune_all_layers(const ToyModel& model,
                                            const std::vector<NeuronStatistic>& stats,
                                            const SparsityConfig& cfg) {
  if (stats.size() != model.layers.size()) {
    throw std::invalid_argument("prune_all_layers: one statistic per layer required");
  }
  std::vector<PrunedFFBlock> out;
  out.reserve(stats.size());
  for (std::size_t li = 0; li < stats.size(); ++li) {
    out.push_back(prune_block(model.layers[li].ff, select_experts(stats[li], cfg)));
  }
  return out;
}

std::vector<FFBlock> generation_blocks(const ToyModel& model,
                                       const std::vector<std::size_t>& prompt,
                                       const MethodConfig& cfg,
                                       std::vector<ExpertSet>* expert_sets) {
  if (expert_sets) expert_sets->clear();
  if (cfg.method == Method::Full) return {};

  const SparsityConfig sparsity(cfg.sparsity);
  std::vector<FFBlock> blocks;
  blocks.reserve(model.layers.size());

  if (cfg.method == Method::Magnitude) {
    for (const auto& layer : model.layers) {
      ExpertSet experts = magnitude_experts(layer.ff, sparsity);
      if (expert_sets) expert_sets->push_back(experts);
      blocks.push_back(prune_block(layer.ff, experts).block);
    }
    return blocks;
  }

  if (cfg.method == Method::Wanda) {
    // Per-layer input hidden states come from a full prompt pass.
    model.validate();
    Matrix x = embed_tokens(model, prompt);
    for (const auto& layer : model.layers) {
      const Matrix h = rms_norm_rows(x, layer.norm_scale);
      const WandaMask mask = wanda_prune(layer.ff, h, cfg.sparsity, cfg.wanda);
      blocks.push_back(mask.apply(layer.ff));
      add_rows(x, ff_forward(layer.ff, h), 0);
    }
    return blocks;
  }

  // Statistic-driven structured methods.
  const std::vector<NeuronStatistic> stats = prompt_statistics(model, prompt);
  for (std::size_t li = 0; li < stats.size(); ++li) {
    ExpertSet experts;
    switch (cfg.method) {
      case Method::Griffin:
        experts = select_experts(stats[li], sparsity);
        break;
      case Method::Sample:
        experts = sampled_experts(stats[li], sparsity, SelectionMode::WeightedSampling,
                                  cfg.seed + li);
        break;
      case Method::TopkSample:
        experts = sampled_experts(stats[li], sparsity,
                                  SelectionMode::HalfTopKHalfSampling, cfg.seed + li);
        break;
      default:
        throw std::invalid_argument("generation_blocks: unhandled method");
    }
    if (expert_sets) expert_sets->push_back(experts);
    blocks.push_back(prune_block(model.layers[li].ff, experts).block);
  }
  return blocks;
}

std::vector<double> next_token_losses(const Matrix& logits,
                                      const std::vector<std::size_t>& tokens) {
  if (logits.rows() != tokens.size()) {
    throw std::invalid_argument("next_token_losses: logits rows != tokens");
  }
  std::vector<double> losses(tokens.size(), 0.0);
  for (std::size_t t = 1; t < tokens.size(); ++t) {
    const auto row = logits.row(t - 1);
    double hi = -1e300;
    for (float v : row) hi = std::max(hi, double(v));
    double denom = 0.0;
    for (float v : row) denom += std::exp(double(v) - hi);
    losses[t] = -(double(row[tokens[t]]) - hi - std::log(denom));
  }
  return losses;
}

double perplexity_over(const std::vector<double>& losses, std::size_t from, std::size_t to) {
  if (from >= to || to > losses.size()) {
    throw std::invalid_argument("perplexity_over: bad range");
  }
  double sum = 0.0;
  for (std::size_t t = from; t < to; ++t) sum += losses[t];
  return std::exp(sum / double(to - from));
}

namespace {

double method_generation_ppl(const ToyModel& model, const std::vector<std::size_t>& tokens,
                             const SimulationPartition& partition, const MethodConfig& cfg,
                             const std::vector<FFBlock>& gen_blocks) {
  const std::size_t p = partition.prompt_len;
  Matrix logits;
  if (cfg.reselect_each_step && !gen_blocks.empty()) {
    // Re-derive the expert set at every generation position from all tokens
    // seen so far. Off by default; kept for ablation.
    logits = Matrix(tokens.size(), model.vocab);
    const Matrix base = forward_logits(model, tokens);
    for (std::size_t i = 0; i < p; ++i) {
      std::copy(base.row(i).begin(), base.row(i).end(), logits.row(i).begin());
    }
    for (std::size_t t = p; t < tokens.size(); ++t) {
      const std::vector<std::size_t> seen(tokens.begin(),
                                          tokens.begin() + std::ptrdiff_t(t));
      MethodConfig step_cfg = cfg;
      step_cfg.reselect_each_step = false;
      const std::vector<FFBlock> step_blocks = generation_blocks(model, seen, step_cfg);
      const SimulationPartition step(t, 1);
      const std::vector<std::size_t> upto(tokens.begin(),
                                          tokens.begin() + std::ptrdiff_t(t) + 1);
      const Matrix step_logits = forward_logits(model, upto, step_blocks, step);
      std::copy(step_logits.row(t).begin(), step_logits.row(t).end(),
                logits.row(t).begin());
    }
  } else {
    logits = forward_logits(model, tokens, gen_blocks, partition);
  }
  const std::vector<double> losses = next_token_losses(logits, tokens);
  return perplexity_over(losses, p, tokens.size());
}

}  // namespace

EvalResult generation_perplexity(const ToyModel& model, const std::vector<std::size_t>& tokens,
                                 const SimulationPartition& partition, const MethodConfig& cfg) {
  if (partition.total() != tokens.size()) {
    throw std::invalid_argument("generation_perplexity: partition P+G != length");
  }
  const std::vector<std::size_t> prompt(tokens.begin(),
                                        tokens.begin() + std::ptrdiff_t(partition.prompt_len));
  const Matrix full_logits = forward_logits(model, tokens);
  const std::vector<double> full_losses = next_token_losses(full_logits, tokens);
  EvalResult out;
  out.ppl_full = perplexity_over(full_losses, partition.prompt_len, tokens.size());
  if (cfg.method == Method::Full) {
    out.ppl_method = out.ppl_full;
    return out;
  }
  const std::vector<FFBlock> blocks = generation_blocks(model, prompt, cfg);
  out.ppl_method = method_generation_ppl(model, tokens, partition, cfg, blocks);
  return out;
}

std::vector<float> classification_as_generation(const ToyModel& model,
                                                const std::vector<std::size_t>& tokens,
                                                const MethodConfig& cfg) {
  if (tokens.size() < 2) {
    throw std::invalid_argument("classification_as_generation: need >= 2 tokens");
  }
  const SimulationPartition partition(tokens.size() - 1, 1);
  const std::vector<std::size_t> prompt(tokens.begin(), tokens.end() - 1);
  const std::vector<FFBlock> blocks = generation_blocks(model, prompt, cfg);
  const Matrix logits = forward_logits(model, tokens, blocks, partition);
  const auto last = logits.row(logits.rows() - 1);
  return std::vector<float>(last.begin(), last.end());
}

BatchEvalResult batched_generation_perplexity(const ToyModel& model,
                                              const std::vector<std::vector<std::size_t>>& sequences,
                                              const SimulationPartition& partition,
                                              const MethodConfig& cfg, std::size_t batch_size) {
  if (sequences.empty()) {
    throw std::invalid_argument("batched_generation_perplexity: no sequences");
  }
  if (cfg.method != Method::Griffin && cfg.method != Method::Sample &&
      cfg.method != Method::TopkSample) {
    throw std::invalid_argument("batched_generation_perplexity: statistic methods only");
  }
  const std::size_t n = sequences.size();
  const std::size_t group = (batch_size == 0) ? n : batch_size;
  const SparsityConfig sparsity(cfg.sparsity);

  BatchEvalResult out;
  out.ppl_full.resize(n);
  out.ppl_method.resize(n);

  for (std::size_t start = 0; start < n; start += group) {
    const std::size_t end = std::min(n, start + group);
    // Aggregate per-layer statistics across the batch (Eq. 7 style).
    std::vector<std::vector<NeuronStatistic>> per_layer(model.layers.size());
    for (std::size_t i = start; i < end; ++i) {
      const auto& seq = sequences[i];
      if (seq.size() != partition.total()) {
        throw std::invalid_argument("batched_generation_perplexity: length mismatch");
      }
      const std::vector<std::size_t> prompt(seq.begin(),
                                            seq.begin() + std::ptrdiff_t(partition.prompt_len));
      std::vector<NeuronStatistic> stats = prompt_statistics(model, prompt);
      for (std::size_t li = 0; li < stats.size(); ++li) {
        per_layer[li].push_back(std::move(stats[li]));
      }
    }
    std::vector<FFBlock> blocks;
    blocks.reserve(model.layers.size());
    for (std::size_t li = 0; li < model.layers.size(); ++li) {
      const NeuronStatistic agg = aggregate_statistics(per_layer[li]);
      ExpertSet experts;
      switch (cfg.method) {
        case Method::Griffin:
          experts = select_experts(agg, sparsity);
          break;
        case Method::Sample:
          experts = sampled_experts(agg, sparsity, SelectionMode::WeightedSampling,
                                    cfg.seed + li);
          break;
        default:
          experts = sampled_experts(agg, sparsity, SelectionMode::HalfTopKHalfSampling,
                                    cfg.seed + li);
          break;
      }
      blocks.push_back(prune_block(model.layers[li].ff, experts).block);
    }
    for (std::size_t i = start; i < end; ++i) {
      const Matrix full_logits = forward_logits(model, sequences[i]);
      const Matrix method_logits = forward_logits(model, sequences[i], blocks, partition);
      const std::vector<double> full_losses = next_token_losses(full_logits, sequences[i]);
      const std::vector<double> method_losses = next_token_losses(method_logits, sequences[i]);
      out.ppl_full[i] =
          perplexity_over(full_losses, partition.prompt_len, sequences[i].size());
      out.ppl_method[i] =
          perplexity_over(method_losses, partition.prompt_len, sequences[i].size());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Planted models
// ---------------------------------------------------------------------------

namespace {

// Orthonormal rows via modified Gram-Schmidt on seeded Gaussians.
std::vector<std::vector<double>> orthonormal_rows(std::size_t count, std::size_t dim,
                                                  Rng& rng) {
  if (count > dim) throw std::invalid_argument("orthonormal_rows: count > dim");
  std::vector<std::vector<double>> rows(count, std::vector<double>(dim));
  for (auto& row : rows) {
    for (double& v : row) v = rng.next_normal();
  }
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      double proj = 0.0;
      for (std::size_t kx = 0; kx < dim; ++kx) proj += rows[i][kx] * rows[j][kx];
      for (std::size_t kx = 0; kx < dim; ++kx) rows[i][kx] -= proj * rows[j][kx];
    }
    double sq = 0.0;
    for (double v : rows[i]) sq += v * v;
    const double inv = 1.0 / std::sqrt(sq);
    for (double& v : rows[i]) v *= inv;
  }
  return rows;
}

}  // namespace

PlantedModel generate_planted_model(const PlantedSpec& spec, const PlantedDims& dims) {
  if (spec.clusters == 0 || spec.experts_per_cluster == 0) {
    throw std::invalid_argument("planted: clusters and experts must be positive");
  }
  if (!(spec.dominance > 1.0)) {
    throw std::invalid_argument("planted: dominance must exceed 1");
  }
  if (dims.cycle_len == 0 || dims.tokens_per_cluster % dims.cycle_len != 0) {
    throw std::invalid_argument("planted: tokens_per_cluster must be a multiple of cycle_len");
  }
  const std::size_t vocab = spec.clusters * dims.tokens_per_cluster;
  const std::size_t planted_total = spec.clusters * spec.experts_per_cluster;
  const std::size_t personal_total = vocab * dims.neurons_per_token;
  if (planted_total + personal_total > dims.d_ff) {
    throw std::invalid_argument("planted: d_ff too small for planted + personal neurons");
  }
  const std::size_t dim = dims.d_ff + vocab;

  Rng root(spec.rng_seed);
  Rng basis_rng = root.child(1);
  Rng layout_rng = root.child(2);
  Rng noise_rng = root.child(3);

  // One orthonormal direction per FF neuron and per vocabulary entry.
  const auto basis = orthonormal_rows(dims.d_ff + vocab, dim, basis_rng);
  const auto neuron_dir = [&](std::size_t j) -> const std::vector<double>& {
    return basis[j];
  };
  const auto token_dir = [&](std::size_t t) -> const std::vector<double>& {
    return basis[dims.d_ff + t];
  };

  // Neuron roles behind a seeded permutation so static index order carries no
  // information about the planted structure.
  std::vector<std::size_t> neuron_perm(dims.d_ff);
  std::iota(neuron_perm.begin(), neuron_perm.end(), std::size_t(0));
  layout_rng.shuffle(neuron_perm);
  std::size_t cursor = 0;

  PlantedModel pm;
  pm.spec = spec;
  pm.dims = dims;
  pm.token_cluster.resize(vocab);
  pm.next_token.resize(vocab);
  pm.token_neurons.assign(vocab, {});

  std::vector<std::vector<std::size_t>> cluster_planted(spec.clusters);
  for (std::size_t c = 0; c < spec.clusters; ++c) {
    for (std::size_t e = 0; e < spec.experts_per_cluster; ++e) {
      cluster_planted[c].push_back(neuron_perm[cursor++]);
    }
    std::sort(cluster_planted[c].begin(), cluster_planted[c].end());
    pm.supports.emplace_back(cluster_planted[c], dims.d_ff);
  }
  for (std::size_t t = 0; t < vocab; ++t) {
    pm.token_cluster[t] = t / dims.tokens_per_cluster;
    for (std::size_t a = 0; a < dims.neurons_per_token; ++a) {
      pm.token_neurons[t].push_back(neuron_perm[cursor++]);
    }
  }

  // Cycles: shuffle each cluster's tokens, chunk into cycles of cycle_len.
  pm.cycles.assign(spec.clusters, {});
  for (std::size_t c = 0; c < spec.clusters; ++c) {
    std::vector<std::size_t> toks(dims.tokens_per_cluster);
    std::iota(toks.begin(), toks.end(), c * dims.tokens_per_cluster);
    layout_rng.shuffle(toks);
    for (std::size_t at = 0; at < toks.size(); at += dims.cycle_len) {
      std::vector<std::size_t> cycle(toks.begin() + std::ptrdiff_t(at),
                                     toks.begin() + std::ptrdiff_t(at + dims.cycle_len));
      for (std::size_t i = 0; i < cycle.size(); ++i) {
        pm.next_token[cycle[i]] = cycle[(i + 1) % cycle.size()];
      }
      pm.cycles[c].push_back(std::move(cycle));
    }
  }

  // W1 rows: per-neuron direction with a small norm jitter so the static
  // magnitude ranking carries no cluster information.
  Matrix w1(dims.d_ff, dim);
  std::vector<double> row_gain(dims.d_ff);
  for (std::size_t j = 0; j < dims.d_ff; ++j) {
    row_gain[j] = 1.0 + 0.05 * (2.0 * layout_rng.next_real() - 1.0);
    const auto& dir = neuron_dir(j);
    for (std::size_t kx = 0; kx < dim; ++kx) {
      w1(j, kx) = float(row_gain[j] * dir[kx]);
    }
  }

  // Embeddings: cluster planted stack + personal directions + noise.
  const double personal_gain = 1.0;
  Matrix embed(vocab, dim);
  double norm_sq_nominal = double(spec.experts_per_cluster) * spec.dominance * spec.dominance +
                           double(dims.neurons_per_token) * personal_gain * personal_gain +
                           dims.embed_noise * dims.embed_noise * double(dim);
  for (std::size_t t = 0; t < vocab; ++t) {
    std::vector<double> x(dim, 0.0);
    for (std::size_t e : cluster_planted[pm.token_cluster[t]]) {
      const auto& dir = neuron_dir(e);
      for (std::size_t kx = 0; kx < dim; ++kx) x[kx] += spec.dominance * dir[kx];
    }
    for (std::size_t n : pm.token_neurons[t]) {
      const auto& dir = neuron_dir(n);
      for (std::size_t kx = 0; kx < dim; ++kx) x[kx] += personal_gain * dir[kx];
    }
    for (std::size_t kx = 0; kx < dim; ++kx) {
      x[kx] += dims.embed_noise * noise_rng.next_normal();
      embed(t, kx) = float(x[kx]);
    }
  }

  // Output gain: the personal-neuron logit spike should give the bigram
  // successor probability follow_prob against a flat background.
  const double rms_scale = std::sqrt(double(dim) / norm_sq_nominal);
  const double spike_target =
      std::log(dims.follow_prob / (1.0 - dims.follow_prob) * double(vocab - 1));
  const double beta =
      spike_target / (double(dims.neurons_per_token) * personal_gain * rms_scale);

  Matrix w2(dim, dims.d_ff);
  for (std::size_t t = 0; t < vocab; ++t) {
    const auto& dir = token_dir(pm.next_token[t]);
    for (std::size_t n : pm.token_neurons[t]) {
      for (std::size_t kx = 0; kx < dim; ++kx) {
        w2(kx, n) = float(beta * dir[kx]);
      }
    }
  }

  Matrix unembed(vocab, dim);
  for (std::size_t t = 0; t < vocab; ++t) {
    const auto& dir = token_dir(t);
    for (std::size_t kx = 0; kx < dim; ++kx) unembed(t, kx) = float(dir[kx]);
  }

  ToyModel model;
  model.vocab = vocab;
  model.dim = dim;
  model.embed = std::move(embed);
  model.unembed = std::move(unembed);
  ToyLayer layer;
  layer.norm_scale = Vector(std::vector<float>(dim, 1.0f));
  layer.ff = FFBlock(std::move(w1), Vector(), std::nullopt, std::nullopt,
                     std::move(w2), Vector(), ActivationKind::ReLU, false);
  model.layers.push_back(std::move(layer));
  model.validate();
  pm.model = std::move(model);
  return pm;
}

std::vector<std::size_t> sample_planted_sequence(const PlantedModel& pm, std::size_t cluster,
                                                 std::size_t length, std::size_t cycles_per_seq,
                                                 double skew, Rng& rng) {
  if (cluster >= pm.spec.clusters) {
    throw std::invalid_argument("sample_planted_sequence: bad cluster");
  }
  if (length == 0) throw std::invalid_argument("sample_planted_sequence: empty length");
  const auto& all_cycles = pm.cycles[cluster];
  std::vector<std::size_t> cycle_ids(all_cycles.size());
  std::iota(cycle_ids.begin(), cycle_ids.end(), std::size_t(0));
  if (cycles_per_seq != 0 && cycles_per_seq < all_cycles.size()) {
    rng.shuffle(cycle_ids);
    cycle_ids.resize(cycles_per_seq);
  }
  std::vector<std::size_t> active;
  for (std::size_t id : cycle_ids) {
    active.insert(active.end(), all_cycles[id].begin(), all_cycles[id].end());
  }

  // Per-sequence jump weights: geometric with ratio `skew` over a random
  // ordering of the active tokens.
  std::vector<std::size_t> order = active;
  rng.shuffle(order);
  std::vector<double> weight(pm.vocab(), 0.0);
  double w = 1.0, total = 0.0;
  for (std::size_t t : order) {
    weight[t] = w;
    total += w;
    w *= skew;
  }

  const auto jump = [&]() {
    const double target = rng.next_real() * total;
    double cum = 0.0;
    for (std::size_t t : order) {
      cum += weight[t];
      if (target < cum) return t;
    }
    return order.back();
  };

  std::vector<std::size_t> seq;
  seq.reserve(length);
  seq.push_back(jump());
  while (seq.size() < length) {
    if (rng.next_real() < pm.dims.follow_prob) {
      seq.push_back(pm.next_token[seq.back()]);
    } else {
      seq.push_back(jump());
    }
  }
  return seq;
}

}  // namespace griffin
