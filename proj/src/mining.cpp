#include "emblens/mining.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "json.hpp"

#include "emblens/errors.hpp"
#include "emblens/rng.hpp"

namespace emblens::mining {

namespace {

using ordered_json = nlohmann::ordered_json;

std::vector<RankedSample> column_samples(const EmbeddingMatrix& m, size_t dim) {
  if (dim >= m.n_dims)
    throw UsageError("dimension " + std::to_string(dim) + " out of range (D = " +
                     std::to_string(m.n_dims) + ")");
  std::vector<RankedSample> out(m.n_rows);
  for (size_t i = 0; i < m.n_rows; ++i)
    out[i] = {m.ids[i], static_cast<double>(m.at(i, dim))};
  return out;
}

bool less_asc(const RankedSample& a, const RankedSample& b) {
  if (a.value != b.value) return a.value < b.value;
  return a.id < b.id;
}

bool less_desc(const RankedSample& a, const RankedSample& b) {
  if (a.value != b.value) return a.value > b.value;
  return a.id < b.id;
}

// Seeded draw of k entries without replacement, then restored to rank order.
std::vector<RankedSample> sample_tail(std::vector<RankedSample> tail, size_t k, Rng& rng,
                                      bool ascending) {
  for (size_t i = 0; i < k; ++i) {
    const size_t j = i + static_cast<size_t>(rng.bounded(tail.size() - i));
    std::swap(tail[i], tail[j]);
  }
  tail.resize(k);
  std::sort(tail.begin(), tail.end(), ascending ? less_asc : less_desc);
  return tail;
}

ordered_json samples_to_json(const std::vector<RankedSample>& samples) {
  ordered_json arr = ordered_json::array();
  for (const auto& s : samples) {
    ordered_json o;
    o["id"] = s.id;
    o["value"] = s.value;
    arr.push_back(std::move(o));
  }
  return arr;
}

std::vector<RankedSample> samples_from_json(const ordered_json& arr) {
  std::vector<RankedSample> out;
  out.reserve(arr.size());
  for (const auto& o : arr)
    out.push_back({o.at("id").get<std::string>(), o.at("value").get<double>()});
  return out;
}

}  // namespace

ActivationReport percentile_extremes(const EmbeddingMatrix& activations, size_t dim,
                                     double low_pct, double high_pct, size_t sample_k,
                                     uint64_t seed, const std::string& source) {
  if (!(low_pct > 0.0 && low_pct < 50.0) || !(high_pct > 0.0 && high_pct < 50.0))
    throw UsageError("percentiles must lie in (0, 50)");
  if (sample_k < 1) throw UsageError("sample_k must be >= 1");

  std::vector<RankedSample> samples = column_samples(activations, dim);
  const size_t n = samples.size();

  double lo = samples[0].value, hi = samples[0].value;
  for (const auto& s : samples) {
    lo = std::min(lo, s.value);
    hi = std::max(hi, s.value);
  }
  if (lo == hi)
    throw DataError("constant activation column " + std::to_string(dim) +
                    ": degenerate tails");

  const auto tail_size = [n](double pct) {
    return std::max<size_t>(1, static_cast<size_t>(std::floor(pct / 100.0 * n)));
  };
  const size_t t_low = tail_size(low_pct);
  const size_t t_high = tail_size(high_pct);
  if (t_low < sample_k || t_high < sample_k)
    throw DataError("tail smaller than sample_k: tails are " + std::to_string(t_low) +
                    "/" + std::to_string(t_high) + ", k = " + std::to_string(sample_k));

  std::vector<RankedSample> asc = samples;
  std::sort(asc.begin(), asc.end(), less_asc);
  std::sort(samples.begin(), samples.end(), less_desc);

  std::vector<RankedSample> low_tail(asc.begin(), asc.begin() + t_low);
  std::vector<RankedSample> high_tail(samples.begin(), samples.begin() + t_high);

  ActivationReport report;
  report.dim = dim;
  report.source = source;
  report.sample_count = n;
  report.low_threshold = low_tail.back().value;
  report.high_threshold = high_tail.back().value;
  Rng rng(seed);
  report.low = sample_tail(std::move(low_tail), sample_k, rng, true);
  report.high = sample_tail(std::move(high_tail), sample_k, rng, false);
  return report;
}

ActivationReport top_k_activations(const EmbeddingMatrix& activations, size_t dim,
                                   size_t k, const std::string& source) {
  if (k < 1) throw UsageError("k must be >= 1");
  std::vector<RankedSample> samples = column_samples(activations, dim);
  if (k > samples.size())
    throw DataError("k = " + std::to_string(k) + " exceeds sample count " +
                    std::to_string(samples.size()));
  std::sort(samples.begin(), samples.end(), less_desc);
  samples.resize(k);

  ActivationReport report;
  report.dim = dim;
  report.source = source;
  report.sample_count = activations.n_rows;
  report.high = std::move(samples);
  return report;
}

std::string format_report_line(const ActivationReport& report) {
  ordered_json o;
  o["dim"] = report.dim;
  o["source"] = report.source;
  o["sample_count"] = report.sample_count;
  o["low_threshold"] =
      report.low_threshold ? ordered_json(*report.low_threshold) : ordered_json(nullptr);
  o["high_threshold"] =
      report.high_threshold ? ordered_json(*report.high_threshold) : ordered_json(nullptr);
  o["low"] = samples_to_json(report.low);
  o["high"] = samples_to_json(report.high);
  return o.dump();
}

ActivationReport parse_report_line(const std::string& line) {
  ordered_json o;
  try {
    o = ordered_json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(std::string("bad report line: ") + e.what());
  }
  ActivationReport report;
  report.dim = o.at("dim").get<size_t>();
  report.source = o.at("source").get<std::string>();
  report.sample_count = o.at("sample_count").get<size_t>();
  if (!o.at("low_threshold").is_null())
    report.low_threshold = o.at("low_threshold").get<double>();
  if (!o.at("high_threshold").is_null())
    report.high_threshold = o.at("high_threshold").get<double>();
  report.low = samples_from_json(o.at("low"));
  report.high = samples_from_json(o.at("high"));
  return report;
}

void emit_report(const std::vector<ActivationReport>& reports, const std::string& path) {
  if (reports.empty()) throw UsageError("emit_report needs at least one report");
  std::string out;
  for (const auto& r : reports) {
    out += format_report_line(r);
    out += '\n';
  }
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw DataError("cannot open file for writing: " + path);
  f << out;
  if (!f) throw DataError("write failed: " + path);
}

std::vector<ActivationReport> read_report(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open file: " + path);
  std::vector<ActivationReport> out;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    out.push_back(parse_report_line(line));
  }
  return out;
}

}  // namespace emblens::mining
