#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "emblens/core.hpp"
#include "emblens/io.hpp"
#include "emblens/matrix.hpp"

namespace emblens::sae {

// One-hidden-layer sparse autoencoder. Forward map for a row x:
//   f    = relu(W_enc^T (x - b_dec) + b_enc)
//   xhat = W_dec^T f + b_dec
// Rows of w_dec are the feature directions in input space; unit L2 norm when
// decoder normalization is on.
struct SaeModel {
  size_t input_dim = 0;
  size_t hidden_dim = 0;   // expansion * input_dim
  size_t expansion = 0;
  double lambda = 0.0;     // penalty the model was trained with
  Matrix w_enc;            // input_dim x hidden_dim
  std::vector<double> b_enc;
  Matrix w_dec;            // hidden_dim x input_dim
  std::vector<double> b_dec;
};

// Seeded init: weights uniform(-1/sqrt(D), 1/sqrt(D)), biases zero, decoder
// rows normalized to unit norm.
SaeModel sae_init(size_t input_dim, size_t expansion, uint64_t seed);

struct SaeForward {
  Matrix xc;    // x - b_dec
  Matrix z;     // pre-activation
  Matrix f;     // relu(z)
  Matrix xhat;
};

SaeForward sae_forward(const SaeModel& m, const Matrix& x);

struct SaeLoss {
  double total = 0.0;
  double recon = 0.0;  // batch-mean squared L2 reconstruction error
  double l1 = 0.0;     // lambda * batch-mean of ||f||_1
};

SaeLoss sae_loss(const SaeModel& m, const Matrix& x, double lambda);
SaeLoss sae_loss_from_forward(const Matrix& x, const SaeForward& fwd, double lambda);

// Exact analytic gradient of sae_loss. Relu and L1 subgradients at 0 are 0.
struct SaeGrads {
  Matrix w_enc;
  std::vector<double> b_enc;
  Matrix w_dec;
  std::vector<double> b_dec;
  SaeLoss loss;
};

SaeGrads sae_grad(const SaeModel& m, const Matrix& x, double lambda);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  uint64_t t = 0;

  explicit AdamState(size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

// Standard Adam update with bias correction; NumericError on a non-finite
// gradient entry.
void adam_step(std::vector<double>& params, const std::vector<double>& grads,
               AdamState& state, const AdamConfig& cfg);

struct SaeTrainConfig {
  size_t expansion = 8;
  double lambda = 0.5;
  size_t epochs = 20;
  size_t batch_size = 256;
  double lr = 1e-3;
  uint64_t seed = 0;
  bool normalize_decoder = true;
  bool center_inputs = false;  // subtract the global data mean before training
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct SaeEpochStats {
  double recon_loss = 0.0;
  double l1_penalty = 0.0;
  double explained_variance = 0.0;
  double avg_l0 = 0.0;        // mean count of f > 0 per sample
  double dead_fraction = 0.0; // units never strictly positive over the data
};

struct SaeTrainStats {
  SaeTrainConfig config;
  std::vector<SaeEpochStats> epochs;

  const SaeEpochStats& final_epoch() const { return epochs.back(); }
};

// Seeded shuffled minibatch training; per-epoch stats are evaluated over the
// full dataset after each epoch. Deterministic for any thread count.
std::pair<SaeModel, SaeTrainStats> sae_train(const EmbeddingMatrix& x,
                                             const SaeTrainConfig& config);

// 1 - ||x - xhat||_F^2 / ||x - colmean(x)||_F^2
double explained_variance(const Matrix& x, const Matrix& xhat);

// Fraction of hidden units with activation <= 0 on every row of x.
double dead_neuron_fraction(const SaeModel& m, const EmbeddingMatrix& x);

// One full training per lambda with a shared seed. Needs >= 2 values.
std::vector<SaeTrainStats> lambda_sweep(const EmbeddingMatrix& x,
                                        const SaeTrainConfig& config,
                                        const std::vector<double>& lambdas);

// CSV columns: lambda,explained_variance,avg_l0,dead_fraction
void write_sweep_csv(const std::vector<SaeTrainStats>& sweep, const std::string& path);

// Per-epoch CSV: epoch,recon_loss,l1_penalty,explained_variance,avg_l0,dead_fraction
void write_train_stats_csv(const SaeTrainStats& stats, const std::string& path);

// Hidden-unit activations for every row of x, as a float matrix sharing ids.
EmbeddingMatrix feature_activations(const SaeModel& m, const EmbeddingMatrix& x);

io::ModelArtifact sae_to_artifact(const SaeModel& m);
SaeModel sae_from_artifact(const io::ModelArtifact& artifact);

}  // namespace emblens::sae
