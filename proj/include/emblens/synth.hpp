#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "emblens/core.hpp"
#include "emblens/matrix.hpp"

namespace emblens::synth {

// y = X[:, support] * true_weights + N(0, noise_sigma^2), X iid standard
// normal. Deterministic in seed.
struct PlantedLinearSpec {
  size_t n = 0;
  size_t d = 0;
  std::vector<size_t> support;
  std::vector<double> true_weights;
  double noise_sigma = 0.0;
  uint64_t seed = 0;
  std::string target_name = "target";
};

struct PlantedLinearData {
  EmbeddingMatrix embeddings;
  TargetTable targets;
};

PlantedLinearData gen_planted_linear(const PlantedLinearSpec& spec);

// Sigma giving Var(signal)/Var(noise) = snr for unit-variance features.
double noise_sigma_for_snr(const std::vector<double>& true_weights, double snr);

// Each sample is a nonnegative combination of K fixed unit directions:
// every direction is active independently with probability activation_prob,
// with scale uniform in [scale_min, scale_max]. K > D is allowed.
struct SuperpositionSpec {
  size_t n = 0;
  size_t d = 0;
  size_t n_features = 0;  // K
  double activation_prob = 0.02;
  double scale_min = 0.5;
  double scale_max = 1.5;
  double noise_sigma = 0.0;
  uint64_t seed = 0;
};

struct SuperpositionData {
  EmbeddingMatrix embeddings;
  Matrix directions;  // K x D, unit rows (stored at float precision)
};

SuperpositionData gen_superposition(const SuperpositionSpec& spec);

// For each truth direction, the max |cosine| against all learned directions.
struct RecoveryScore {
  double mean_max_cosine = 0.0;
  double fraction_recovered = 0.0;  // fraction of truth rows with best >= threshold
  std::vector<double> best_cosine;  // one per truth row
};

RecoveryScore dictionary_recovery_score(const Matrix& learned, const Matrix& truth,
                                        double threshold = 0.9);

}  // namespace emblens::synth
