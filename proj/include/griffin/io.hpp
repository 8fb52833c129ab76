#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "griffin/bench.hpp"
#include "griffin/flocking.hpp"
#include "griffin/sim.hpp"

namespace griffin {

// Malformed binary container; byte_offset points at the failing field.
struct FormatError : std::runtime_error {
  std::size_t byte_offset;
  FormatError(const std::string& msg, std::size_t offset)
      : std::runtime_error(msg + " (byte offset " + std::to_string(offset) + ")"),
        byte_offset(offset) {}
};

// Malformed token file; line is 1-based.
struct TokenParseError : std::runtime_error {
  std::size_t line;
  TokenParseError(const std::string& msg, std::size_t line_no)
      : std::runtime_error(msg + " (line " + std::to_string(line_no) + ")"),
        line(line_no) {}
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NamedTensor {
  std::string name;
  Matrix values;
};

// Binary weight container: magic "GRFN", version u32 = 1, then per-tensor
// records (name length u32, name bytes, rows u32, cols u32, f32 row-major
// payload). All integers little-endian.
void save_container(const std::filesystem::path& path,
                    const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> load_container(const std::filesystem::path& path);

// Model = container + JSON sidecar (same path with ".json" extension) holding
// vocab, dim, tie flag and per-layer {d_ff, act, glu} metadata.
void save_model(const std::filesystem::path& grfn_path, const ToyModel& model);
ToyModel load_model(const std::filesystem::path& grfn_path);

// Token files: one integer per line; a blank line starts a new sequence.
std::vector<std::vector<std::size_t>> read_token_sequences(const std::filesystem::path& path);
void write_token_sequences(const std::filesystem::path& path,
                           const std::vector<std::vector<std::size_t>>& sequences);

// Writes content to a temp name in the target directory, then renames.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

// CSV matrix at 6 significant digits, row per token.
std::string matrix_csv(const Matrix& m);

// Expert sets as {"layer": i, "k": n, "indices": [...]} records.
std::string expert_sets_json(const std::vector<ExpertSet>& per_layer,
                             const std::string& method, double sparsity,
                             std::uint64_t seed);

// Jaccard report keyed by layer and k.
std::string jaccard_report_json(const JaccardReport& report);

struct SimRecord {
  std::string method;
  double sparsity = 0.0;
  std::size_t prompt_len = 0;
  std::size_t gen_len = 0;
  double ppl = 0.0;
  std::size_t batch = 1;
};

std::string sim_records_json(const std::vector<SimRecord>& records);

}  // namespace griffin
