#include "griffin/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "griffin/rng.hpp"

namespace griffin {

void BenchScenario::validate() const {
  if (prompt_len == 0 || gen_len == 0) {
    throw std::invalid_argument("bench: prompt_len and gen_len must be positive");
  }
  if (repeats < 3) throw std::invalid_argument("bench: repeats must be >= 3");
  if (warmup < 1) throw std::invalid_argument("bench: warmup must be >= 1");
  if (sparsities.empty()) throw std::invalid_argument("bench: empty sparsity grid");
  for (double s : sparsities) {
    if (!(s >= 0.0 && s < 1.0)) {
      throw std::invalid_argument("bench: sparsity must be in [0, 1)");
    }
  }
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return (n % 2 == 1) ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / double(v.size());
}

double stddev(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / double(v.size() - 1));
}

Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng, double scale) {
  Matrix m(rows, cols);
  for (float& v : m.data()) v = float(scale * rng.next_normal());
  return m;
}

// One generation phase: gen_len sequential single-token forward calls.
double time_generation(const FFBlock& block, const Matrix& gen_inputs) {
  volatile float sink = 0.0f;
  const auto t0 = Clock::now();
  for (std::size_t t = 0; t < gen_inputs.rows(); ++t) {
    Matrix x(1, gen_inputs.cols());
    std::copy(gen_inputs.row(t).begin(), gen_inputs.row(t).end(), x.row(0).begin());
    const Matrix y = ff_forward(block, x);
    sink = sink + y(0, 0);
  }
  (void)sink;
  return seconds_since(t0);
}

}  // namespace

std::vector<BenchRecord> bench_generation(const BenchScenario& scenario,
                                          const FFBlock& block, std::uint64_t seed) {
  scenario.validate();
  if (block.d() != scenario.d || block.d_ff() != scenario.d_ff) {
    throw std::invalid_argument("bench: block dims do not match scenario");
  }
  Rng rng(seed);
  Rng input_rng = rng.child(1);
  const double scale = 1.0 / std::sqrt(double(scenario.d));
  const Matrix prompt = random_matrix(scenario.prompt_len, scenario.d, input_rng, scale);
  const Matrix gen_inputs = random_matrix(scenario.gen_len, scenario.d, input_rng, scale);

  std::vector<BenchRecord> records;
  for (double sparsity : scenario.sparsities) {
    const SparsityConfig cfg(sparsity);
    std::vector<double> prompt_times, full_times, pruned_times, select_times;
    const std::size_t rounds = scenario.warmup + scenario.repeats;
    for (std::size_t r = 0; r < rounds; ++r) {
      auto t0 = Clock::now();
      const ActivationMatrix acts = ff1_forward(block, prompt);
      const Matrix prompt_out = ff2_forward(block, acts.z);
      const double t_prompt = seconds_since(t0);
      (void)prompt_out;

      t0 = Clock::now();
      const NeuronStatistic stat = compute_statistic(acts);
      const ExpertSet experts = select_experts(stat, cfg);
      const PrunedFFBlock pruned = prune_block(block, experts);
      const double t_select = seconds_since(t0);

      const double t_full = time_generation(block, gen_inputs);
      const double t_pruned = time_generation(pruned.block, gen_inputs);

      if (r >= scenario.warmup) {
        prompt_times.push_back(t_prompt);
        select_times.push_back(t_select);
        full_times.push_back(t_full);
        pruned_times.push_back(t_pruned);
      }
    }

    const double full_median = median(full_times);
    BenchRecord full_rec;
    full_rec.method = "full";
    full_rec.prompt_len = scenario.prompt_len;
    full_rec.gen_len = scenario.gen_len;
    full_rec.d = scenario.d;
    full_rec.d_ff = scenario.d_ff;
    full_rec.sparsity = sparsity;
    full_rec.prompt_s = median(prompt_times);
    full_rec.gen_s = full_median;
    full_rec.gen_mean_s = mean(full_times);
    full_rec.gen_stddev_s = stddev(full_times);
    full_rec.speedup = 1.0;
    records.push_back(full_rec);

    BenchRecord rec = full_rec;
    rec.method = "griffin";
    rec.gen_s = median(pruned_times);
    rec.gen_mean_s = mean(pruned_times);
    rec.gen_stddev_s = stddev(pruned_times);
    rec.select_s = median(select_times);
    rec.speedup = full_median / rec.gen_s;
    records.push_back(rec);
  }
  return records;
}

namespace {

std::string format6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace

void emit_csv(const std::vector<BenchRecord>& records, std::ostream& out) {
  out << "method,P,G,D,D_FF,sparsity,prompt_s,gen_s,speedup\n";
  for (const auto& r : records) {
    out << r.method << ',' << r.prompt_len << ',' << r.gen_len << ',' << r.d << ','
        << r.d_ff << ',' << format6(r.sparsity) << ',' << format6(r.prompt_s) << ','
        << format6(r.gen_s) << ',' << format6(r.speedup) << '\n';
  }
}

std::string bench_csv(const std::vector<BenchRecord>& records) {
  std::ostringstream oss;
  emit_csv(records, oss);
  return oss.str();
}

std::vector<BenchRecord> parse_bench_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "method,P,G,D,D_FF,sparsity,prompt_s,gen_s,speedup") {
    throw std::invalid_argument("bench csv: bad header");
  }
  std::vector<BenchRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string cell;
    BenchRecord r;
    auto next = [&]() {
      if (!std::getline(fields, cell, ',')) {
        throw std::invalid_argument("bench csv: short row");
      }
      return cell;
    };
    r.method = next();
    r.prompt_len = std::stoull(next());
    r.gen_len = std::stoull(next());
    r.d = std::stoull(next());
    r.d_ff = std::stoull(next());
    r.sparsity = std::stod(next());
    r.prompt_s = std::stod(next());
    r.gen_s = std::stod(next());
    r.speedup = std::stod(next());
    out.push_back(std::move(r));
  }
  return out;
}

std::uint64_t ff_neuron_flops_per_token(std::size_t d, std::size_t d_ff, bool glu) {
  // Per neuron: 2d (W1 matvec) [+2d gate matvec], bias add, activation,
  // [gating multiply], 2d down-projection contribution.
  const std::uint64_t per_neuron =
      std::uint64_t(2 * d) + (glu ? std::uint64_t(2 * d) : 0) + 1 + 1 +
      (glu ? 1 : 0) + std::uint64_t(2 * d);
  return per_neuron * d_ff;
}

}  // namespace griffin
