#include "emblens/synth.hpp"

#include <cmath>
#include <unordered_set>

#include "emblens/errors.hpp"
#include "emblens/kernels.hpp"
#include "emblens/rng.hpp"

namespace emblens::synth {

namespace {

std::vector<std::string> make_ids(size_t n, const char* prefix) {
  std::vector<std::string> ids(n);
  for (size_t i = 0; i < n; ++i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s%06zu", prefix, i);
    ids[i] = buf;
  }
  return ids;
}

}  // namespace

PlantedLinearData gen_planted_linear(const PlantedLinearSpec& spec) {
  if (spec.n < 2 || spec.d < 1) throw UsageError("planted-linear spec needs n >= 2, d >= 1");
  if (spec.support.size() != spec.true_weights.size())
    throw UsageError("support and true_weights lengths differ");
  if (spec.support.size() > spec.d) throw UsageError("support larger than d");
  if (spec.noise_sigma < 0.0) throw UsageError("noise_sigma must be nonnegative");
  std::unordered_set<size_t> seen;
  for (size_t j : spec.support) {
    if (j >= spec.d) throw UsageError("support index out of range");
    if (!seen.insert(j).second) throw UsageError("duplicate support index");
  }

  Rng rng(spec.seed);
  std::vector<float> values(spec.n * spec.d);
  for (float& v : values) v = static_cast<float>(rng.normal());

  // y is computed from the float-rounded values actually stored, so the
  // defining equation holds exactly on the emitted dataset.
  std::vector<double> y(spec.n, 0.0);
  for (size_t i = 0; i < spec.n; ++i) {
    const float* row = values.data() + i * spec.d;
    double s = 0.0;
    for (size_t k = 0; k < spec.support.size(); ++k)
      s += spec.true_weights[k] * static_cast<double>(row[spec.support[k]]);
    y[i] = s;
  }
  if (spec.noise_sigma > 0.0) {
    for (size_t i = 0; i < spec.n; ++i) y[i] += spec.noise_sigma * rng.normal();
  }

  PlantedLinearData out;
  out.embeddings =
      validate_embedding_matrix(make_ids(spec.n, "s"), std::move(values), spec.d);
  out.targets.ids = out.embeddings.ids;
  out.targets.add_column(spec.target_name, std::move(y));
  return out;
}

double noise_sigma_for_snr(const std::vector<double>& true_weights, double snr) {
  if (!(snr > 0.0)) throw UsageError("snr must be positive");
  double sq = 0.0;
  for (double w : true_weights) sq += w * w;
  return std::sqrt(sq / snr);
}

SuperpositionData gen_superposition(const SuperpositionSpec& spec) {
  if (spec.n < 1 || spec.d < 1 || spec.n_features < 1)
    throw UsageError("superposition spec needs n, d, n_features >= 1");
  if (!(spec.activation_prob > 0.0 && spec.activation_prob <= 1.0))
    throw UsageError("activation_prob must be in (0, 1]");
  if (!(spec.scale_min >= 0.0 && spec.scale_max >= spec.scale_min))
    throw UsageError("invalid activation scale range");
  if (spec.noise_sigma < 0.0) throw UsageError("noise_sigma must be nonnegative");

  Rng rng(spec.seed);
  const size_t k = spec.n_features, d = spec.d;

  // Directions uniform on the sphere, rounded to float precision so the
  // emitted embeddings and the returned dictionary share one representation.
  Matrix dirs(k, d);
  for (size_t f = 0; f < k; ++f) {
    double* row = dirs.row(f);
    double sq = 0.0;
    for (size_t j = 0; j < d; ++j) {
      row[j] = rng.normal();
      sq += row[j] * row[j];
    }
    const double inv = 1.0 / std::sqrt(sq);
    for (size_t j = 0; j < d; ++j)
      row[j] = static_cast<double>(static_cast<float>(row[j] * inv));
  }

  std::vector<float> values(spec.n * d);
  std::vector<double> sample(d);
  for (size_t i = 0; i < spec.n; ++i) {
    for (size_t j = 0; j < d; ++j) sample[j] = 0.0;
    for (size_t f = 0; f < k; ++f) {
      if (rng.uniform01() < spec.activation_prob) {
        const double a = rng.uniform(spec.scale_min, spec.scale_max);
        const double* row = dirs.row(f);
        for (size_t j = 0; j < d; ++j) sample[j] += a * row[j];
      }
    }
    if (spec.noise_sigma > 0.0) {
      for (size_t j = 0; j < d; ++j) sample[j] += spec.noise_sigma * rng.normal();
    }
    float* dst = values.data() + i * d;
    for (size_t j = 0; j < d; ++j) dst[j] = static_cast<float>(sample[j]);
  }

  SuperpositionData out;
  out.embeddings = validate_embedding_matrix(make_ids(spec.n, "s"), std::move(values), d);
  out.directions = std::move(dirs);
  return out;
}

RecoveryScore dictionary_recovery_score(const Matrix& learned, const Matrix& truth,
                                        double threshold) {
  if (learned.cols != truth.cols)
    throw DataError("learned and truth directions differ in dimension");
  if (learned.rows < 1 || truth.rows < 1)
    throw DataError("empty direction set");

  Matrix ln = learned;
  for (size_t h = 0; h < ln.rows; ++h) {
    double* row = ln.row(h);
    double sq = 0.0;
    for (size_t j = 0; j < ln.cols; ++j) sq += row[j] * row[j];
    if (!(sq > 1e-24))
      throw NumericError("zero-norm learned direction at row " + std::to_string(h));
    const double inv = 1.0 / std::sqrt(sq);
    for (size_t j = 0; j < ln.cols; ++j) row[j] *= inv;
  }
  Matrix tn = truth;
  for (size_t t = 0; t < tn.rows; ++t) {
    double* row = tn.row(t);
    double sq = 0.0;
    for (size_t j = 0; j < tn.cols; ++j) sq += row[j] * row[j];
    if (!(sq > 1e-24))
      throw NumericError("zero-norm truth direction at row " + std::to_string(t));
    const double inv = 1.0 / std::sqrt(sq);
    for (size_t j = 0; j < tn.cols; ++j) row[j] *= inv;
  }

  Matrix cos(tn.rows, ln.rows);
  kernels::gemm_nt(tn, ln, cos);

  RecoveryScore score;
  score.best_cosine.resize(tn.rows);
  size_t recovered = 0;
  double sum = 0.0;
  for (size_t t = 0; t < tn.rows; ++t) {
    const double* row = cos.row(t);
    double best = 0.0;
    for (size_t h = 0; h < ln.rows; ++h) best = std::max(best, std::fabs(row[h]));
    score.best_cosine[t] = best;
    sum += best;
    if (best >= threshold) ++recovered;
  }
  score.mean_max_cosine = sum / static_cast<double>(tn.rows);
  score.fraction_recovered = static_cast<double>(recovered) / static_cast<double>(tn.rows);
  return score;
}

}  // namespace emblens::synth
