// Command-line frontend: analysis exports, generation simulation, latency
// benchmarks and pruning export over GRFN weight containers and token files.
//
// Exit codes: 0 success, 2 usage error, 3 data-format error, 4 runtime
// numeric error.

#include <filesystem>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "griffin/bench.hpp"
#include "griffin/flocking.hpp"
#include "griffin/io.hpp"
#include "griffin/sim.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint64_t kDefaultSeed = 20240403;

struct RunConfig {
  std::string model_path;
  std::string tokens_path;
  std::string out_dir;
  std::string sparsity_list = "0.5";
  std::string method_list = "full,griffin,magnitude,wanda";
  std::string partition;            // "P,G"
  std::string k_grid;               // comma list
  std::string control = "none";
  std::string dims = "4096,11008";  // bench synthetic block
  std::string act = "silu";
  std::string window;               // "tokens,features" heatmap override
  bool glu = true;
  std::size_t batch = 1;
  std::size_t repeats = 3;
  std::size_t warmup = 1;
  std::uint64_t seed = kDefaultSeed;
};

std::vector<double> parse_double_list(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      out.push_back(std::stod(cell));
    } catch (const std::exception&) {
      throw std::invalid_argument(std::string(what) + ": bad number \"" + cell + "\"");
    }
  }
  if (out.empty()) throw std::invalid_argument(std::string(what) + ": empty list");
  return out;
}

std::vector<std::size_t> parse_size_list(const std::string& text, const char* what) {
  std::vector<std::size_t> out;
  for (double v : parse_double_list(text, what)) {
    if (v < 0 || v != std::floor(v)) {
      throw std::invalid_argument(std::string(what) + ": expected non-negative integers");
    }
    out.push_back(std::size_t(v));
  }
  return out;
}

std::vector<std::string> parse_string_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    if (!cell.empty()) out.push_back(cell);
  }
  return out;
}

griffin::SimulationPartition parse_partition(const std::string& text) {
  const auto parts = parse_size_list(text, "--partition");
  if (parts.size() != 2) {
    throw std::invalid_argument("--partition: expected P,G");
  }
  return griffin::SimulationPartition(parts[0], parts[1]);
}

void ensure_out_dir(const std::string& dir) {
  if (dir.empty()) throw std::invalid_argument("--out is required");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw griffin::IoError("cannot create output dir " + dir + ": " + ec.message());
  }
}

// ---------------------------------------------------------------------------
// analyze: heatmap CSVs, Jaccard JSON, sorted profiles, control variants
// ---------------------------------------------------------------------------

int cmd_analyze(const RunConfig& cfg) {
  ensure_out_dir(cfg.out_dir);
  const griffin::ToyModel model = griffin::load_model(cfg.model_path);
  auto sequences = griffin::read_token_sequences(cfg.tokens_path);

  const griffin::ControlKind control = griffin::control_from_name(cfg.control);
  if (control != griffin::ControlKind::Original) {
    griffin::Rng rng(cfg.seed);
    for (std::size_t i = 0; i < sequences.size(); ++i) {
      sequences[i] = griffin::control_inputs(sequences[i], control, model.vocab,
                                             rng.child(i).next_u64());
    }
    griffin::write_token_sequences(fs::path(cfg.out_dir) / "tokens_control.txt",
                                   sequences);
  }

  // Heatmaps and profiles come from the first sequence.
  const auto acts = griffin::trace_activations(model, sequences.front());
  std::size_t win_t = std::min<std::size_t>(512, sequences.front().size());
  std::size_t win_f = std::min<std::size_t>(512, model.layers.front().ff.d_ff());
  if (!cfg.window.empty()) {
    const auto w = parse_size_list(cfg.window, "--window");
    if (w.size() != 2) throw std::invalid_argument("--window: expected tokens,features");
    win_t = w[0];
    win_f = w[1];
  }

  std::string profiles_csv;
  for (std::size_t li = 0; li < acts.size(); ++li) {
    const auto heat = griffin::heatmap_export(acts[li], win_t, win_f, li);
    griffin::write_file_atomic(
        fs::path(cfg.out_dir) / ("heatmap_layer" + std::to_string(li) + ".csv"),
        griffin::matrix_csv(heat.values));

    const auto stat = griffin::compute_statistic(acts[li]);
    const griffin::VectorD profile = griffin::sorted_statistic_profile(stat);
    for (std::size_t j = 0; j < profile.len(); ++j) {
      if (j > 0) profiles_csv += ",";
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.6g", profile[j]);
      profiles_csv += buf;
    }
    profiles_csv += "\n";
  }
  griffin::write_file_atomic(fs::path(cfg.out_dir) / "profiles.csv", profiles_csv);

  // Jaccard report over samples, per layer.
  if (sequences.size() >= 2) {
    const std::size_t dff = model.layers.front().ff.d_ff();
    std::vector<std::size_t> k_grid;
    if (!cfg.k_grid.empty()) {
      k_grid = parse_size_list(cfg.k_grid, "--k-grid");
    } else {
      for (std::size_t k = std::max<std::size_t>(1, dff / 16); k <= dff; k *= 2) {
        k_grid.push_back(k);
      }
      if (k_grid.empty() || k_grid.back() != dff) k_grid.push_back(dff);
    }
    std::vector<std::vector<griffin::NeuronStatistic>> per_layer(model.layers.size());
    for (const auto& seq : sequences) {
      auto stats = griffin::prompt_statistics(model, seq);
      for (std::size_t li = 0; li < stats.size(); ++li) {
        per_layer[li].push_back(std::move(stats[li]));
      }
    }
    griffin::JaccardReport report;
    report.k_grid = k_grid;
    for (auto& samples : per_layer) {
      report.mean_similarity.push_back(griffin::intersample_similarity(samples, k_grid));
    }
    griffin::write_file_atomic(fs::path(cfg.out_dir) / "jaccard.json",
                               griffin::jaccard_report_json(report));
  } else {
    std::cerr << "analyze: single sequence; skipping jaccard.json\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------
// simulate: perplexity records over the method x sparsity grid
// ---------------------------------------------------------------------------

int cmd_simulate(const RunConfig& cfg) {
  ensure_out_dir(cfg.out_dir);
  const griffin::ToyModel model = griffin::load_model(cfg.model_path);
  const auto raw_sequences = griffin::read_token_sequences(cfg.tokens_path);
  if (cfg.partition.empty()) throw std::invalid_argument("--partition is required");
  const griffin::SimulationPartition partition = parse_partition(cfg.partition);

  std::vector<std::vector<std::size_t>> sequences;
  for (const auto& seq : raw_sequences) {
    if (seq.size() < partition.total()) {
      throw std::invalid_argument("simulate: sequence shorter than P+G");
    }
    sequences.emplace_back(seq.begin(), seq.begin() + std::ptrdiff_t(partition.total()));
  }

  const auto sparsities = parse_double_list(cfg.sparsity_list, "--sparsity");
  const auto methods = parse_string_list(cfg.method_list);
  if (methods.empty()) throw std::invalid_argument("--method: empty list");

  std::vector<griffin::SimRecord> records;
  for (double sparsity : sparsities) {
    for (const auto& name : methods) {
      griffin::MethodConfig mc;
      mc.method = griffin::method_from_name(name);
      mc.sparsity = sparsity;
      mc.seed = cfg.seed;

      double sum = 0.0;
      const bool statistic_method = mc.method == griffin::Method::Griffin ||
                                    mc.method == griffin::Method::Sample ||
                                    mc.method == griffin::Method::TopkSample;
      if (cfg.batch != 1 && statistic_method) {
        const auto batch_res = griffin::batched_generation_perplexity(
            model, sequences, partition, mc, cfg.batch);
        for (double p : batch_res.ppl_method) sum += p;
      } else {
        for (const auto& seq : sequences) {
          sum += griffin::generation_perplexity(model, seq, partition, mc).ppl_method;
        }
      }
      griffin::SimRecord rec;
      rec.method = name;
      rec.sparsity = sparsity;
      rec.prompt_len = partition.prompt_len;
      rec.gen_len = partition.gen_len;
      rec.ppl = sum / double(sequences.size());
      rec.batch = statistic_method ? cfg.batch : 1;
      records.push_back(rec);
    }
  }
  griffin::write_file_atomic(fs::path(cfg.out_dir) / "results.json",
                             griffin::sim_records_json(records));
  return 0;
}

// ---------------------------------------------------------------------------
// bench: latency CSV over a synthetic block
// ---------------------------------------------------------------------------

int cmd_bench(const RunConfig& cfg) {
  ensure_out_dir(cfg.out_dir);
  const auto dims = parse_size_list(cfg.dims, "--dims");
  if (dims.size() != 2 || dims[0] == 0 || dims[1] == 0) {
    throw std::invalid_argument("--dims: expected D,D_FF");
  }
  griffin::BenchScenario scenario;
  scenario.d = dims[0];
  scenario.d_ff = dims[1];
  if (!cfg.partition.empty()) {
    const auto p = parse_partition(cfg.partition);
    scenario.prompt_len = p.prompt_len;
    scenario.gen_len = p.gen_len;
  }
  scenario.sparsities = parse_double_list(cfg.sparsity_list, "--sparsity");
  scenario.repeats = cfg.repeats;
  scenario.warmup = cfg.warmup;
  scenario.validate();

  griffin::Rng rng(cfg.seed);
  const double scale = 1.0 / std::sqrt(double(scenario.d));
  auto gaussian = [&](std::size_t rows, std::size_t cols) {
    griffin::Matrix m(rows, cols);
    for (float& v : m.data()) v = float(scale * rng.next_normal());
    return m;
  };
  std::optional<griffin::Matrix> wg;
  std::optional<griffin::Vector> bg;
  if (cfg.glu) {
    wg = gaussian(scenario.d_ff, scenario.d);
    bg = griffin::Vector(scenario.d_ff);
  }
  const griffin::FFBlock block(gaussian(scenario.d_ff, scenario.d),
                               griffin::Vector(scenario.d_ff), std::move(wg),
                               std::move(bg), gaussian(scenario.d, scenario.d_ff),
                               griffin::Vector(scenario.d),
                               griffin::activation_from_name(cfg.act), cfg.glu);

  const auto records = griffin::bench_generation(scenario, block, cfg.seed);
  griffin::write_file_atomic(fs::path(cfg.out_dir) / "bench.csv",
                             griffin::bench_csv(records));
  return 0;
}

// ---------------------------------------------------------------------------
// prune: pruned weight container + expert-set JSON
// ---------------------------------------------------------------------------

int cmd_prune(const RunConfig& cfg) {
  ensure_out_dir(cfg.out_dir);
  const griffin::ToyModel model = griffin::load_model(cfg.model_path);
  const auto sequences = griffin::read_token_sequences(cfg.tokens_path);
  const auto& prompt = sequences.front();

  const auto methods = parse_string_list(cfg.method_list);
  const auto sparsities = parse_double_list(cfg.sparsity_list, "--sparsity");
  if (methods.size() != 1) {
    throw std::invalid_argument("prune: exactly one --method required");
  }
  griffin::MethodConfig mc;
  mc.method = griffin::method_from_name(methods.front());
  mc.sparsity = sparsities.front();
  mc.seed = cfg.seed;
  if (mc.method == griffin::Method::Full) {
    throw std::invalid_argument("prune: method must not be full");
  }

  std::vector<griffin::ExpertSet> expert_sets;
  const auto blocks = griffin::generation_blocks(model, prompt, mc, &expert_sets);

  griffin::ToyModel pruned = model;
  for (std::size_t li = 0; li < blocks.size(); ++li) {
    pruned.layers[li].ff = blocks[li];
  }
  griffin::save_model(fs::path(cfg.out_dir) / "pruned.grfn", pruned);

  if (mc.method == griffin::Method::Wanda) {
    // Unstructured masks: kept column indices per row, per matrix.
    json doc;
    doc["method"] = methods.front();
    doc["sparsity"] = mc.sparsity;
    doc["layers"] = json::array();
    for (std::size_t li = 0; li < blocks.size(); ++li) {
      json lj;
      lj["layer"] = li;
      auto kept_rows = [](const griffin::Matrix& masked_w) {
        json rows = json::array();
        for (std::size_t i = 0; i < masked_w.rows(); ++i) {
          std::vector<std::size_t> kept;
          for (std::size_t j = 0; j < masked_w.cols(); ++j) {
            if (masked_w(i, j) != 0.0f) kept.push_back(j);
          }
          rows.push_back(kept);
        }
        return rows;
      };
      lj["w1"] = kept_rows(blocks[li].w1);
      if (blocks[li].glu) lj["wg"] = kept_rows(*blocks[li].wg);
      lj["w2"] = kept_rows(blocks[li].w2);
      doc["layers"].push_back(lj);
    }
    griffin::write_file_atomic(fs::path(cfg.out_dir) / "masks.json", doc.dump(2) + "\n");
  } else {
    griffin::write_file_atomic(
        fs::path(cfg.out_dir) / "experts.json",
        griffin::expert_sets_json(expert_sets, methods.front(), mc.sparsity, cfg.seed));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig cfg;
  CLI::App app{"prompt-adaptive structured FF pruning toolkit"};
  app.require_subcommand(1);

  auto add_common = [&](CLI::App* sub, bool needs_model) {
    sub->add_option("--out", cfg.out_dir, "output directory")->required();
    sub->add_option("--seed", cfg.seed, "root RNG seed");
    if (needs_model) {
      sub->add_option("--model", cfg.model_path, "GRFN weight container")->required();
      sub->add_option("--tokens", cfg.tokens_path, "token sequence file")->required();
    }
  };

  CLI::App* analyze = app.add_subcommand("analyze", "flocking analysis exports");
  add_common(analyze, true);
  analyze->add_option("--k-grid", cfg.k_grid, "comma list of k values for Jaccard");
  analyze->add_option("--control", cfg.control, "none|permute|random");
  analyze->add_option("--window", cfg.window, "heatmap window tokens,features");

  CLI::App* simulate = app.add_subcommand("simulate", "generation-partition perplexity");
  add_common(simulate, true);
  simulate->add_option("--partition", cfg.partition, "P,G split")->required();
  simulate->add_option("--sparsity", cfg.sparsity_list, "comma list of FF sparsities");
  simulate->add_option("--method", cfg.method_list, "comma list of methods");
  simulate->add_option("--batch", cfg.batch, "share experts across batches of B (0 = all)");

  CLI::App* bench = app.add_subcommand("bench", "FF latency microbenchmark");
  add_common(bench, false);
  bench->add_option("--dims", cfg.dims, "D,D_FF of the synthetic block");
  bench->add_option("--partition", cfg.partition, "P,G split (default 2048,128)");
  bench->add_option("--sparsity", cfg.sparsity_list, "comma list of FF sparsities");
  bench->add_option("--repeats", cfg.repeats, "timed repeats (>= 3)");
  bench->add_option("--warmup", cfg.warmup, "warmup rounds (>= 1)");
  bench->add_option("--act", cfg.act, "activation kind");
  bench->add_flag("--glu,!--no-glu", cfg.glu, "gated block (default on)");

  CLI::App* prune = app.add_subcommand("prune", "export pruned weights + expert sets");
  add_common(prune, true);
  prune->add_option("--method", cfg.method_list, "selection method")->required();
  prune->add_option("--sparsity", cfg.sparsity_list, "FF sparsity");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (analyze->parsed()) return cmd_analyze(cfg);
    if (simulate->parsed()) return cmd_simulate(cfg);
    if (bench->parsed()) return cmd_bench(cfg);
    if (prune->parsed()) return cmd_prune(cfg);
    std::cerr << "no subcommand selected\n";
    return 2;
  } catch (const griffin::FormatError& e) {
    std::cerr << "data format error: " << e.what() << "\n";
    return 3;
  } catch (const griffin::TokenParseError& e) {
    std::cerr << "token file error: " << e.what() << "\n";
    return 3;
  } catch (const griffin::IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return 3;
  } catch (const griffin::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 4;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 4;
  }
}
