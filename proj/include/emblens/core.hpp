#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace emblens {

// N x D matrix of embedding activations with per-row sample ids. Values are
// stored as float32 (the on-disk payload type); numeric code promotes to
// double. Immutable after validation.
struct EmbeddingMatrix {
  std::vector<std::string> ids;     // unique, |ids| = n_rows
  std::vector<float> values;        // row-major, n_rows * n_dims, all finite
  size_t n_rows = 0;
  size_t n_dims = 0;
  std::vector<std::string> dim_labels;  // empty or n_dims entries

  const float* row(size_t i) const { return values.data() + i * n_dims; }
  float at(size_t i, size_t j) const { return values[i * n_dims + j]; }

  // id -> row index; built on first call.
  const std::unordered_map<std::string, size_t>& id_index() const;

 private:
  mutable std::unordered_map<std::string, size_t> id_index_;
};

// Per-sample named scalar targets with explicit missing-value mask.
struct TargetColumn {
  std::vector<double> values;
  std::vector<uint8_t> present;  // 1 = value held, 0 = missing
};

struct TargetTable {
  std::vector<std::string> ids;
  std::vector<std::string> names;  // column order as ingested
  std::unordered_map<std::string, TargetColumn> columns;

  bool has_column(const std::string& name) const { return columns.count(name) > 0; }
  const TargetColumn& column(const std::string& name) const;  // DataError if absent
  // Appends a fully-present column; DataError on length/name collision.
  void add_column(const std::string& name, std::vector<double> vals);
  void add_column(const std::string& name, TargetColumn col);
};

struct SplitSpec {
  double test_fraction = 0.2;
  uint64_t seed = 0;
};

// Validates raw data into an EmbeddingMatrix. Errors: duplicate ids,
// non-finite entry (named by row and column), size mismatch, empty dims.
EmbeddingMatrix validate_embedding_matrix(std::vector<std::string> ids,
                                          std::vector<float> values_row_major,
                                          size_t n_dims,
                                          std::vector<std::string> dim_labels = {});

// Seeded uniform shuffle, then prefix split: |test| = round(test_fraction*N).
// Deterministic in (ids, spec) across process restarts. DataError when either
// side would be empty.
std::pair<std::vector<std::string>, std::vector<std::string>> split_train_test(
    const std::vector<std::string>& ids, const SplitSpec& spec);

// Appends cos(theta*pi/180) and sin(theta*pi/180) columns. Angles are degrees
// against the horizontal axis; one angle per table row.
void encode_orientation(TargetTable& table, const std::vector<double>& theta_degrees,
                        const std::string& cos_name = "cos_orientation",
                        const std::string& sin_name = "sin_orientation");

}  // namespace emblens
