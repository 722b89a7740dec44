#pragma once

#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "emblens/core.hpp"

namespace emblens::io {

enum class EmbeddingFormat { bin, csv };

// Infers bin/csv from the file extension (.embd -> bin, .csv -> csv).
EmbeddingFormat format_from_path(const std::string& path);

// Binary layout (all little-endian):
//   bytes 0-3   magic "EMBD"
//   u32         version (= 1)
//   u64         n_rows
//   u32         n_dims
//   per row     u16 id length + UTF-8 id bytes
//   payload     n_rows * n_dims float32, row-major
EmbeddingMatrix read_embeddings(const std::string& path, EmbeddingFormat format);
void write_embeddings(const EmbeddingMatrix& m, const std::string& path,
                      EmbeddingFormat format);

// CSV with a header row whose first column is literally `id`; empty cells
// mark missing values.
TargetTable read_targets(const std::string& path);
void write_targets(const TargetTable& t, const std::string& path);

// Container for fitted models: a JSON metadata section plus named blocks of
// float64 payload. Round-trips bit-exactly.
struct ModelArtifact {
  enum class Kind : uint32_t { probe = 1, sae = 2 };

  Kind kind = Kind::probe;
  uint32_t format_version = 1;
  nlohmann::ordered_json meta;
  std::vector<std::pair<std::string, std::vector<double>>> blocks;

  const std::vector<double>& block(const std::string& name) const;  // DataError if absent
};

void save_model(const ModelArtifact& artifact, const std::string& path);
ModelArtifact load_model(const std::string& path);
// Typed load: DataError when the file holds a different kind.
ModelArtifact load_model(const std::string& path, ModelArtifact::Kind expected);

// FNV-1a 64-bit digest of a file, as 16 hex chars. Used in run manifests.
std::string file_digest(const std::string& path);

}  // namespace emblens::io
