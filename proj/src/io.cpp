#include "griffin/io.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace griffin {

namespace {

using nlohmann::json;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(char((v >> (8 * i)) & 0xff));
}

void put_f32(std::string& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}

class Reader {
 public:
  explicit Reader(const std::filesystem::path& path) : path_(path.string()) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path_);
    std::ostringstream oss;
    oss << in.rdbuf();
    buf_ = oss.str();
  }

  bool at_end() const { return pos_ >= buf_.size(); }
  std::size_t pos() const { return pos_; }

  std::uint32_t u32(const char* what) {
    if (pos_ + 4 > buf_.size()) {
      throw FormatError(path_ + ": truncated " + what, pos_);
    }
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= std::uint32_t(std::uint8_t(buf_[pos_ + std::size_t(i)])) << (8 * i);
    }
    pos_ += 4;
    return v;
  }

  std::string bytes(std::size_t n, const char* what) {
    if (pos_ + n > buf_.size()) {
      throw FormatError(path_ + ": truncated " + what, pos_);
    }
    std::string out = buf_.substr(pos_, n);
    pos_ += n;
    return out;
  }

  std::vector<float> f32s(std::size_t n, const char* what) {
    if (pos_ + 4 * n > buf_.size()) {
      throw FormatError(path_ + ": truncated " + what, pos_);
    }
    std::vector<float> out(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::uint32_t bits = 0;
      for (int b = 0; b < 4; ++b) {
        bits |= std::uint32_t(std::uint8_t(buf_[pos_ + 4 * i + std::size_t(b)])) << (8 * b);
      }
      std::memcpy(&out[i], &bits, 4);
    }
    pos_ += 4 * n;
    return out;
  }

 private:
  std::string path_;
  std::string buf_;
  std::size_t pos_ = 0;
};

std::string format6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), std::streamsize(content.size()));
    if (!out) throw IoError("short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("rename failed: " + path.string() + ": " + ec.message());
}

void save_container(const std::filesystem::path& path,
                    const std::vector<NamedTensor>& tensors) {
  std::string out;
  out += "GRFN";
  put_u32(out, 1);  // version
  for (const auto& t : tensors) {
    put_u32(out, std::uint32_t(t.name.size()));
    out += t.name;
    put_u32(out, std::uint32_t(t.values.rows()));
    put_u32(out, std::uint32_t(t.values.cols()));
    for (float v : t.values.data()) put_f32(out, v);
  }
  write_file_atomic(path, out);
}

std::vector<NamedTensor> load_container(const std::filesystem::path& path) {
  Reader r(path);
  const std::string magic = r.bytes(4, "magic");
  if (magic != "GRFN") {
    throw FormatError(path.string() + ": bad magic", 0);
  }
  const std::uint32_t version = r.u32("version");
  if (version != 1) {
    throw FormatError(path.string() + ": unsupported version " + std::to_string(version), 4);
  }
  std::vector<NamedTensor> tensors;
  while (!r.at_end()) {
    const std::uint32_t name_len = r.u32("tensor name length");
    const std::string name = r.bytes(name_len, "tensor name");
    const std::size_t dims_at = r.pos();
    const std::uint32_t rows = r.u32("tensor rows");
    const std::uint32_t cols = r.u32("tensor cols");
    if (rows == 0 || cols == 0) {
      throw FormatError(path.string() + ": empty tensor " + name, dims_at);
    }
    const std::size_t payload_at = r.pos();
    std::vector<float> data = r.f32s(std::size_t(rows) * cols, "tensor payload");
    try {
      tensors.push_back(NamedTensor{name, Matrix(rows, cols, std::move(data))});
    } catch (const NumericError&) {
      throw FormatError(path.string() + ": non-finite values in " + name, payload_at);
    }
  }
  return tensors;
}

namespace {

Vector row_vector(const Matrix& m, const std::string& name) {
  if (m.rows() != 1) {
    throw std::invalid_argument("tensor " + name + " is not a row vector");
  }
  return Vector(std::vector<float>(m.data()));
}

Matrix vector_tensor(const Vector& v) {
  return Matrix(1, v.len(), std::vector<float>(v.data()));
}

}  // namespace

void save_model(const std::filesystem::path& grfn_path, const ToyModel& model) {
  model.validate();
  std::vector<NamedTensor> tensors;
  tensors.push_back({"embed", model.embed});
  if (!model.tied_unembed) tensors.push_back({"unembed", model.unembed});
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const auto& layer = model.layers[i];
    const std::string prefix = "layer" + std::to_string(i) + ".";
    tensors.push_back({prefix + "norm", vector_tensor(layer.norm_scale)});
    tensors.push_back({prefix + "w1", layer.ff.w1});
    tensors.push_back({prefix + "b1", vector_tensor(layer.ff.b1)});
    if (layer.ff.glu) {
      tensors.push_back({prefix + "wg", *layer.ff.wg});
      tensors.push_back({prefix + "bg", vector_tensor(*layer.ff.bg)});
    }
    tensors.push_back({prefix + "w2", layer.ff.w2});
    tensors.push_back({prefix + "b2", vector_tensor(layer.ff.b2)});
  }
  save_container(grfn_path, tensors);

  json meta;
  meta["vocab"] = model.vocab;
  meta["dim"] = model.dim;
  meta["tied_unembed"] = model.tied_unembed;
  meta["layers"] = json::array();
  for (const auto& layer : model.layers) {
    json lj;
    lj["d_ff"] = layer.ff.d_ff();
    lj["act"] = activation_name(layer.ff.act);
    lj["glu"] = layer.ff.glu;
    lj["gelu_tanh"] = layer.ff.use_gelu_tanh;
    meta["layers"].push_back(lj);
  }
  std::filesystem::path sidecar = grfn_path;
  sidecar.replace_extension(".json");
  write_file_atomic(sidecar, meta.dump(2) + "\n");
}

ToyModel load_model(const std::filesystem::path& grfn_path) {
  std::filesystem::path sidecar = grfn_path;
  sidecar.replace_extension(".json");
  std::ifstream meta_in(sidecar);
  if (!meta_in) throw IoError("cannot open sidecar " + sidecar.string());
  json meta;
  try {
    meta_in >> meta;
  } catch (const json::exception& e) {
    throw FormatError(sidecar.string() + ": invalid JSON: " + e.what(), 0);
  }

  const std::vector<NamedTensor> tensors = load_container(grfn_path);
  const auto find = [&](const std::string& name) -> const Matrix& {
    for (const auto& t : tensors) {
      if (t.name == name) return t.values;
    }
    throw FormatError(grfn_path.string() + ": missing tensor " + name, 0);
  };

  ToyModel model;
  model.vocab = meta.at("vocab").get<std::size_t>();
  model.dim = meta.at("dim").get<std::size_t>();
  model.tied_unembed = meta.value("tied_unembed", false);
  model.embed = find("embed");
  model.unembed = model.tied_unembed ? model.embed : find("unembed");
  for (std::size_t i = 0; i < meta.at("layers").size(); ++i) {
    const json& lj = meta.at("layers").at(i);
    const std::string prefix = "layer" + std::to_string(i) + ".";
    const bool glu = lj.at("glu").get<bool>();
    ToyLayer layer;
    layer.norm_scale = row_vector(find(prefix + "norm"), prefix + "norm");
    std::optional<Matrix> wg;
    std::optional<Vector> bg;
    if (glu) {
      wg = find(prefix + "wg");
      bg = row_vector(find(prefix + "bg"), prefix + "bg");
    }
    layer.ff = FFBlock(find(prefix + "w1"), row_vector(find(prefix + "b1"), prefix + "b1"),
                       std::move(wg), std::move(bg), find(prefix + "w2"),
                       row_vector(find(prefix + "b2"), prefix + "b2"),
                       activation_from_name(lj.at("act").get<std::string>()), glu);
    layer.ff.use_gelu_tanh = lj.value("gelu_tanh", false);
    model.layers.push_back(std::move(layer));
  }
  model.validate();
  return model;
}

std::vector<std::vector<std::size_t>> read_token_sequences(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::vector<std::size_t>> sequences;
  std::vector<std::size_t> current;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    // strip trailing CR and surrounding spaces
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) {
      line.pop_back();
    }
    std::size_t at = 0;
    while (at < line.size() && (line[at] == ' ' || line[at] == '\t')) ++at;
    line = line.substr(at);
    if (line.empty()) {
      if (!current.empty()) {
        sequences.push_back(std::move(current));
        current.clear();
      }
      continue;
    }
    try {
      std::size_t used = 0;
      const unsigned long long v = std::stoull(line, &used);
      if (used != line.size()) throw std::invalid_argument("trailing characters");
      current.push_back(std::size_t(v));
    } catch (const std::exception&) {
      throw TokenParseError(path.string() + ": expected a non-negative integer, got \"" +
                                line + "\"",
                            line_no);
    }
  }
  if (!current.empty()) sequences.push_back(std::move(current));
  if (sequences.empty()) {
    throw TokenParseError(path.string() + ": no token sequences", line_no);
  }
  return sequences;
}

void write_token_sequences(const std::filesystem::path& path,
                           const std::vector<std::vector<std::size_t>>& sequences) {
  std::string out;
  for (std::size_t i = 0; i < sequences.size(); ++i) {
    if (i > 0) out += "\n";
    for (std::size_t t : sequences[i]) {
      out += std::to_string(t);
      out += "\n";
    }
  }
  write_file_atomic(path, out);
}

std::string matrix_csv(const Matrix& m) {
  std::string out;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j > 0) out += ",";
      out += format6(double(m(i, j)));
    }
    out += "\n";
  }
  return out;
}

std::string expert_sets_json(const std::vector<ExpertSet>& per_layer,
                             const std::string& method, double sparsity,
                             std::uint64_t seed) {
  json doc;
  doc["method"] = method;
  doc["sparsity"] = sparsity;
  doc["seed"] = seed;
  doc["layers"] = json::array();
  for (std::size_t i = 0; i < per_layer.size(); ++i) {
    json lj;
    lj["layer"] = i;
    lj["k"] = per_layer[i].k();
    lj["indices"] = per_layer[i].experts.indices();
    doc["layers"].push_back(lj);
  }
  return doc.dump(2) + "\n";
}

std::string jaccard_report_json(const JaccardReport& report) {
  json doc;
  doc["k_grid"] = report.k_grid;
  doc["layers"] = json::object();
  for (std::size_t i = 0; i < report.mean_similarity.size(); ++i) {
    doc["layers"][std::to_string(i)] = report.mean_similarity[i];
  }
  return doc.dump(2) + "\n";
}

std::string sim_records_json(const std::vector<SimRecord>& records) {
  json doc = json::array();
  for (const auto& r : records) {
    json rj;
    rj["method"] = r.method;
    rj["sparsity"] = r.sparsity;
    rj["P"] = r.prompt_len;
    rj["G"] = r.gen_len;
    rj["ppl"] = r.ppl;
    rj["batch"] = r.batch;
    doc.push_back(rj);
  }
  return doc.dump(2) + "\n";
}

}  // namespace griffin
