#include "emblens/io.hpp"

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "emblens/errors.hpp"

namespace emblens::io {

namespace {

constexpr char kEmbMagic[4] = {'E', 'M', 'B', 'D'};
constexpr char kModelMagic[4] = {'M', 'D', 'L', 'A'};
constexpr uint32_t kEmbVersion = 1;
constexpr uint32_t kModelVersion = 1;

// --- little-endian primitives -----------------------------------------------

void put_u16(std::string& out, uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f32(std::string& out, float v) { put_u32(out, std::bit_cast<uint32_t>(v)); }

void put_f64(std::string& out, double v) { put_u64(out, std::bit_cast<uint64_t>(v)); }

class Reader {
 public:
  Reader(std::string data, std::string path) : data_(std::move(data)), path_(std::move(path)) {}

  uint16_t u16() { return static_cast<uint16_t>(byte() | (byte() << 8)); }

  uint32_t u32() {
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(byte()) << (8 * i);
    return v;
  }

  uint64_t u64() {
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(byte()) << (8 * i);
    return v;
  }

  float f32() { return std::bit_cast<float>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }

  std::string bytes(size_t n) {
    need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  void need(size_t n) const {
    if (pos_ + n > data_.size()) throw DataError("truncated file: " + path_);
  }

  bool at_end() const { return pos_ == data_.size(); }
  const std::string& path() const { return path_; }

 private:
  uint32_t byte() {
    need(1);
    return static_cast<uint8_t>(data_[pos_++]);
  }

  std::string data_;
  std::string path_;
  size_t pos_ = 0;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

void spill(const std::string& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open file for writing: " + path);
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw DataError("write failed: " + path);
}

// --- text formatting ---------------------------------------------------------

std::string fmt_float(float v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string fmt_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  size_t start = 0;
  while (true) {
    size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      cells.push_back(line.substr(start));
      break;
    }
    cells.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return cells;
}

// CSV cells are written unquoted, so ids must stay free of separators.
void check_id_writable(const std::string& id) {
  if (id.find(',') != std::string::npos || id.find('\n') != std::string::npos ||
      id.find('\r') != std::string::npos)
    throw DataError("sample id contains a separator character: " + id);
}

std::vector<std::string> read_lines(const std::string& path) {
  std::string data = slurp(path);
  std::vector<std::string> lines;
  size_t start = 0;
  while (start < data.size()) {
    size_t nl = data.find('\n', start);
    if (nl == std::string::npos) nl = data.size();
    size_t end = nl;
    if (end > start && data[end - 1] == '\r') --end;
    lines.push_back(data.substr(start, end - start));
    start = nl + 1;
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

float parse_f32(const std::string& cell, const std::string& where) {
  float v = 0.0f;
  auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (res.ec != std::errc() || res.ptr != cell.data() + cell.size())
    throw DataError("non-numeric cell " + where + ": '" + cell + "'");
  return v;
}

double parse_f64(const std::string& cell, const std::string& where) {
  double v = 0.0;
  auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (res.ec != std::errc() || res.ptr != cell.data() + cell.size())
    throw DataError("non-numeric cell " + where + ": '" + cell + "'");
  return v;
}

// --- embeddings --------------------------------------------------------------

EmbeddingMatrix read_embeddings_bin(const std::string& path) {
  Reader r(slurp(path), path);
  const std::string magic = r.bytes(4);
  if (std::memcmp(magic.data(), kEmbMagic, 4) != 0)
    throw DataError("bad magic in embedding file: " + path);
  const uint32_t version = r.u32();
  if (version != kEmbVersion)
    throw DataError("unsupported embedding file version " + std::to_string(version) +
                    ": " + path);
  const uint64_t n_rows = r.u64();
  const uint32_t n_dims = r.u32();

  std::vector<std::string> ids;
  ids.reserve(n_rows);
  for (uint64_t i = 0; i < n_rows; ++i) {
    const uint16_t len = r.u16();
    ids.push_back(r.bytes(len));
  }
  std::vector<float> values;
  values.reserve(n_rows * n_dims);
  r.need(n_rows * n_dims * 4);
  for (uint64_t i = 0; i < n_rows * n_dims; ++i) values.push_back(r.f32());
  if (!r.at_end()) throw DataError("trailing bytes in embedding file: " + path);

  return validate_embedding_matrix(std::move(ids), std::move(values), n_dims);
}

void write_embeddings_bin(const EmbeddingMatrix& m, const std::string& path) {
  std::string out;
  out.reserve(20 + m.values.size() * 4 + m.n_rows * 8);
  out.append(kEmbMagic, 4);
  put_u32(out, kEmbVersion);
  put_u64(out, m.n_rows);
  put_u32(out, static_cast<uint32_t>(m.n_dims));
  for (const auto& id : m.ids) {
    if (id.size() > 0xffff) throw DataError("sample id longer than 65535 bytes");
    put_u16(out, static_cast<uint16_t>(id.size()));
    out.append(id);
  }
  for (float v : m.values) put_f32(out, v);
  spill(path, out);
}

EmbeddingMatrix read_embeddings_csv(const std::string& path) {
  const std::vector<std::string> lines = read_lines(path);
  if (lines.empty()) throw DataError("empty csv file: " + path);
  const std::vector<std::string> header = split_line(lines[0]);
  if (header.empty() || header[0] != "id")
    throw DataError("embedding csv header must start with 'id': " + path);
  if (header.size() < 2) throw DataError("embedding csv has no value columns: " + path);
  const size_t n_dims = header.size() - 1;
  std::vector<std::string> dim_labels(header.begin() + 1, header.end());

  std::vector<std::string> ids;
  std::vector<float> values;
  ids.reserve(lines.size() - 1);
  values.reserve((lines.size() - 1) * n_dims);
  for (size_t li = 1; li < lines.size(); ++li) {
    const std::vector<std::string> cells = split_line(lines[li]);
    if (cells.size() != n_dims + 1)
      throw DataError("ragged row at line " + std::to_string(li + 1) + " in " + path);
    ids.push_back(cells[0]);
    for (size_t j = 1; j < cells.size(); ++j) {
      values.push_back(parse_f32(
          cells[j], "at line " + std::to_string(li + 1) + ", col " + std::to_string(j)));
    }
  }
  return validate_embedding_matrix(std::move(ids), std::move(values), n_dims,
                                   std::move(dim_labels));
}

void write_embeddings_csv(const EmbeddingMatrix& m, const std::string& path) {
  std::string out;
  out += "id";
  for (size_t j = 0; j < m.n_dims; ++j) {
    out += ',';
    out += m.dim_labels.empty() ? "e" + std::to_string(j) : m.dim_labels[j];
  }
  out += '\n';
  for (size_t i = 0; i < m.n_rows; ++i) {
    check_id_writable(m.ids[i]);
    out += m.ids[i];
    const float* r = m.row(i);
    for (size_t j = 0; j < m.n_dims; ++j) {
      out += ',';
      out += fmt_float(r[j]);
    }
    out += '\n';
  }
  spill(path, out);
}

}  // namespace

EmbeddingFormat format_from_path(const std::string& path) {
  const size_t dot = path.rfind('.');
  const std::string ext = dot == std::string::npos ? "" : path.substr(dot);
  if (ext == ".csv") return EmbeddingFormat::csv;
  if (ext == ".embd") return EmbeddingFormat::bin;
  throw UsageError("cannot infer embedding format from extension: " + path);
}

EmbeddingMatrix read_embeddings(const std::string& path, EmbeddingFormat format) {
  return format == EmbeddingFormat::bin ? read_embeddings_bin(path)
                                        : read_embeddings_csv(path);
}

void write_embeddings(const EmbeddingMatrix& m, const std::string& path,
                      EmbeddingFormat format) {
  if (m.n_rows < 1 || m.n_dims < 1 || m.values.size() != m.n_rows * m.n_dims)
    throw DataError("refusing to write malformed embedding matrix");
  if (format == EmbeddingFormat::bin)
    write_embeddings_bin(m, path);
  else
    write_embeddings_csv(m, path);
}

TargetTable read_targets(const std::string& path) {
  const std::vector<std::string> lines = read_lines(path);
  if (lines.empty()) throw DataError("empty targets file: " + path);
  const std::vector<std::string> header = split_line(lines[0]);
  if (header.empty() || header[0] != "id")
    throw DataError("targets csv must have 'id' as its first column: " + path);
  if (header.size() < 2) throw DataError("targets csv has no target columns: " + path);

  const size_t n_cols = header.size() - 1;
  TargetTable t;
  std::vector<TargetColumn> cols(n_cols);

  for (size_t li = 1; li < lines.size(); ++li) {
    const std::vector<std::string> cells = split_line(lines[li]);
    if (cells.size() != header.size())
      throw DataError("ragged row at line " + std::to_string(li + 1) + " in " + path);
    t.ids.push_back(cells[0]);
    for (size_t c = 0; c < n_cols; ++c) {
      const std::string& cell = cells[c + 1];
      if (cell.empty()) {
        cols[c].values.push_back(0.0);
        cols[c].present.push_back(0);
      } else {
        cols[c].values.push_back(parse_f64(
            cell, "at line " + std::to_string(li + 1) + ", col '" + header[c + 1] + "'"));
        cols[c].present.push_back(1);
      }
    }
  }

  std::unordered_map<std::string, size_t> seen;
  for (const auto& id : t.ids) {
    if (!seen.emplace(id, 1).second) throw DataError("duplicate id in targets: " + id);
  }
  for (size_t c = 0; c < n_cols; ++c) t.add_column(header[c + 1], std::move(cols[c]));
  return t;
}

void write_targets(const TargetTable& t, const std::string& path) {
  std::string out = "id";
  for (const auto& name : t.names) {
    check_id_writable(name);
    out += ',';
    out += name;
  }
  out += '\n';
  for (size_t i = 0; i < t.ids.size(); ++i) {
    check_id_writable(t.ids[i]);
    out += t.ids[i];
    for (const auto& name : t.names) {
      const TargetColumn& col = t.columns.at(name);
      out += ',';
      if (col.present[i]) out += fmt_double(col.values[i]);
    }
    out += '\n';
  }
  spill(path, out);
}

// --- model artifacts ----------------------------------------------------------

const std::vector<double>& ModelArtifact::block(const std::string& name) const {
  for (const auto& [bn, data] : blocks) {
    if (bn == name) return data;
  }
  throw DataError("model artifact is missing block: " + name);
}

void save_model(const ModelArtifact& artifact, const std::string& path) {
  std::string out;
  out.append(kModelMagic, 4);
  put_u32(out, artifact.format_version);
  put_u32(out, static_cast<uint32_t>(artifact.kind));
  const std::string meta = artifact.meta.dump();
  put_u64(out, meta.size());
  out.append(meta);
  put_u32(out, static_cast<uint32_t>(artifact.blocks.size()));
  for (const auto& [name, data] : artifact.blocks) {
    if (name.size() > 0xffff) throw DataError("block name too long: " + name);
    put_u16(out, static_cast<uint16_t>(name.size()));
    out.append(name);
    put_u64(out, data.size());
    for (double v : data) put_f64(out, v);
  }
  spill(path, out);
}

ModelArtifact load_model(const std::string& path) {
  Reader r(slurp(path), path);
  const std::string magic = r.bytes(4);
  if (std::memcmp(magic.data(), kModelMagic, 4) != 0)
    throw DataError("bad magic in model file: " + path);
  ModelArtifact art;
  art.format_version = r.u32();
  if (art.format_version != kModelVersion)
    throw DataError("unsupported model file version " +
                    std::to_string(art.format_version) + ": " + path);
  const uint32_t kind = r.u32();
  if (kind != static_cast<uint32_t>(ModelArtifact::Kind::probe) &&
      kind != static_cast<uint32_t>(ModelArtifact::Kind::sae))
    throw DataError("unknown model kind " + std::to_string(kind) + ": " + path);
  art.kind = static_cast<ModelArtifact::Kind>(kind);

  const uint64_t meta_len = r.u64();
  const std::string meta = r.bytes(meta_len);
  try {
    art.meta = nlohmann::ordered_json::parse(meta);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError("bad metadata JSON in model file " + path + ": " + e.what());
  }

  const uint32_t n_blocks = r.u32();
  art.blocks.reserve(n_blocks);
  for (uint32_t b = 0; b < n_blocks; ++b) {
    const uint16_t name_len = r.u16();
    std::string name = r.bytes(name_len);
    const uint64_t count = r.u64();
    r.need(count * 8);
    std::vector<double> data;
    data.reserve(count);
    for (uint64_t i = 0; i < count; ++i) data.push_back(r.f64());
    art.blocks.emplace_back(std::move(name), std::move(data));
  }
  if (!r.at_end()) throw DataError("trailing bytes in model file: " + path);
  return art;
}

ModelArtifact load_model(const std::string& path, ModelArtifact::Kind expected) {
  ModelArtifact art = load_model(path);
  if (art.kind != expected) {
    const auto describe = [](ModelArtifact::Kind k) {
      return k == ModelArtifact::Kind::probe ? "probe" : "sae";
    };
    throw DataError("model kind mismatch: " + path + " holds a " + describe(art.kind) +
                    " model, expected " + describe(expected));
  }
  return art;
}

std::string file_digest(const std::string& path) {
  const std::string data = slurp(path);
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf, 16);
}

}  // namespace emblens::io
