#include "emblens/core.hpp"

#include <cmath>
#include <unordered_set>

#include "emblens/errors.hpp"
#include "emblens/rng.hpp"

namespace emblens {

const std::unordered_map<std::string, size_t>& EmbeddingMatrix::id_index() const {
  if (id_index_.empty() && n_rows > 0) {
    id_index_.reserve(n_rows);
    for (size_t i = 0; i < n_rows; ++i) id_index_.emplace(ids[i], i);
  }
  return id_index_;
}

const TargetColumn& TargetTable::column(const std::string& name) const {
  auto it = columns.find(name);
  if (it == columns.end()) throw DataError("target column not found: " + name);
  return it->second;
}

void TargetTable::add_column(const std::string& name, std::vector<double> vals) {
  TargetColumn col;
  col.present.assign(vals.size(), 1);
  col.values = std::move(vals);
  add_column(name, std::move(col));
}

void TargetTable::add_column(const std::string& name, TargetColumn col) {
  if (columns.count(name) > 0) throw DataError("duplicate target column: " + name);
  if (col.values.size() != ids.size() || col.present.size() != ids.size())
    throw DataError("target column length mismatch for: " + name);
  names.push_back(name);
  columns.emplace(name, std::move(col));
}

EmbeddingMatrix validate_embedding_matrix(std::vector<std::string> ids,
                                          std::vector<float> values_row_major,
                                          size_t n_dims,
                                          std::vector<std::string> dim_labels) {
  const size_t n = ids.size();
  if (n < 1) throw DataError("embedding matrix needs at least one row");
  if (n_dims < 1) throw DataError("embedding matrix needs at least one dimension");
  if (values_row_major.size() != n * n_dims)
    throw DataError("embedding matrix has " + std::to_string(values_row_major.size()) +
                    " values, expected " + std::to_string(n * n_dims));
  if (!dim_labels.empty() && dim_labels.size() != n_dims)
    throw DataError("dim_labels length does not match n_dims");

  std::unordered_set<std::string> seen;
  seen.reserve(n);
  for (const auto& id : ids) {
    if (!seen.insert(id).second) throw DataError("duplicate sample id: " + id);
  }
  for (size_t i = 0; i < n; ++i) {
    const float* r = values_row_major.data() + i * n_dims;
    for (size_t j = 0; j < n_dims; ++j) {
      if (!std::isfinite(r[j]))
        throw DataError("non-finite embedding value at row " + std::to_string(i) +
                        ", col " + std::to_string(j));
    }
  }

  EmbeddingMatrix m;
  m.ids = std::move(ids);
  m.values = std::move(values_row_major);
  m.n_rows = n;
  m.n_dims = n_dims;
  m.dim_labels = std::move(dim_labels);
  return m;
}

std::pair<std::vector<std::string>, std::vector<std::string>> split_train_test(
    const std::vector<std::string>& ids, const SplitSpec& spec) {
  const size_t n = ids.size();
  if (n < 2) throw DataError("need at least 2 ids to split");
  if (!(spec.test_fraction > 0.0 && spec.test_fraction < 1.0))
    throw UsageError("test_fraction must be in (0, 1)");

  const size_t n_test =
      static_cast<size_t>(std::llround(spec.test_fraction * static_cast<double>(n)));
  if (n_test == 0) throw DataError("split yields an empty test set");
  if (n_test >= n) throw DataError("split yields an empty train set");

  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(spec.seed);
  rng.shuffle(order);

  std::vector<std::string> test, train;
  test.reserve(n_test);
  train.reserve(n - n_test);
  for (size_t i = 0; i < n; ++i) {
    (i < n_test ? test : train).push_back(ids[order[i]]);
  }
  return {std::move(train), std::move(test)};
}

void encode_orientation(TargetTable& table, const std::vector<double>& theta_degrees,
                        const std::string& cos_name, const std::string& sin_name) {
  if (theta_degrees.size() != table.ids.size())
    throw DataError("orientation angle count does not match table rows");
  constexpr double kDegToRad = 0.017453292519943295769236907684886;
  std::vector<double> cos_col(theta_degrees.size()), sin_col(theta_degrees.size());
  for (size_t i = 0; i < theta_degrees.size(); ++i) {
    if (!std::isfinite(theta_degrees[i]))
      throw DataError("non-finite orientation angle at row " + std::to_string(i));
    cos_col[i] = std::cos(theta_degrees[i] * kDegToRad);
    sin_col[i] = std::sin(theta_degrees[i] * kDegToRad);
  }
  table.add_column(cos_name, std::move(cos_col));
  table.add_column(sin_name, std::move(sin_col));
}

}  // namespace emblens
