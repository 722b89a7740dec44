#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "emblens/core.hpp"

namespace emblens::mining {

struct RankedSample {
  std::string id;
  double value = 0.0;

  friend bool operator==(const RankedSample&, const RankedSample&) = default;
};

// Ranked extreme samples for one dimension of an activation matrix. high is
// sorted by activation descending, low ascending; ties break by ascending id.
struct ActivationReport {
  size_t dim = 0;
  std::string source;  // "embedding" or "sae_feature"
  std::vector<RankedSample> low;
  std::vector<RankedSample> high;
  std::optional<double> low_threshold;   // largest value inside the low tail
  std::optional<double> high_threshold;  // smallest value inside the high tail
  size_t sample_count = 0;

  friend bool operator==(const ActivationReport&, const ActivationReport&) = default;
};

// Seeded sample of sample_k ids from each percentile tail of one dimension.
// Tail size is floor(pct/100 * N), at least 1. When the tail is exactly
// sample_k the whole tail is returned regardless of seed.
ActivationReport percentile_extremes(const EmbeddingMatrix& activations, size_t dim,
                                     double low_pct, double high_pct, size_t sample_k,
                                     uint64_t seed, const std::string& source = "embedding");

// Exact top-k by activation, deterministic tie-break by id.
ActivationReport top_k_activations(const EmbeddingMatrix& activations, size_t dim,
                                   size_t k, const std::string& source = "embedding");

// JSON-lines manifest, one report per line, stable field order.
void emit_report(const std::vector<ActivationReport>& reports, const std::string& path);
std::string format_report_line(const ActivationReport& report);
ActivationReport parse_report_line(const std::string& line);
std::vector<ActivationReport> read_report(const std::string& path);

}  // namespace emblens::mining
