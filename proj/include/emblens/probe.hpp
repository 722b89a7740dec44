#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "emblens/core.hpp"
#include "emblens/io.hpp"
#include "emblens/matrix.hpp"

namespace emblens::probe {

enum class RegKind { l1, l2 };

// Fitted linear probe. Prediction for a raw embedding row x is
//   target_mean + bias + sum_j weights[j] * (x[j] - feature_means[j]) / feature_stds[j].
// Constant embedding columns keep std = 1 and weight = 0.
struct LinearProbe {
  std::vector<double> weights;
  double bias = 0.0;
  std::vector<double> feature_means;
  std::vector<double> feature_stds;
  double target_mean = 0.0;
  RegKind reg_kind = RegKind::l1;
  double reg_alpha = 0.0;
  std::string target_name;

  size_t dim() const { return weights.size(); }
  size_t n_nonzero() const;
};

struct ProbeReport {
  std::string target_name;
  double pearson_r_test = 0.0;
  size_t n_nonzero = 0;
  size_t n_train = 0;
  size_t n_test = 0;
  uint64_t seed = 0;
  RegKind reg_kind = RegKind::l1;
  double reg_alpha = 0.0;
};

std::string format_probe_report(const ProbeReport& r);  // key=value lines
void write_probe_report(const ProbeReport& r, const std::string& path);

struct LassoConfig {
  double tol = 1e-6;        // max coordinate change per sweep
  size_t max_sweeps = 1000;
};

struct LassoInfo {
  size_t sweeps = 0;
  bool converged = false;
};

// sign(z) * max(|z| - gamma, 0)
double soft_threshold(double z, double gamma);

// Minimizes (1/2N)||y - Xw - b||^2 + alpha*||w||_1 over standardized features
// by cyclic coordinate descent with cached Gram products. Soft-threshold
// clamps produce exact zeros.
LinearProbe fit_lasso(const Matrix& x, const std::vector<double>& y, double alpha,
                      const LassoConfig& config = {}, LassoInfo* info = nullptr);

// Closed form: solves (X^T X + 2*N*alpha*I) w = X^T y on standardized features.
LinearProbe fit_ridge(const Matrix& x, const std::vector<double>& y, double alpha);

// Applies the stored standardization and affine map; no refitting.
std::vector<double> predict(const LinearProbe& probe, const EmbeddingMatrix& x);
std::vector<double> predict(const LinearProbe& probe, const Matrix& x);

// Sample Pearson correlation; NumericError on zero variance.
double pearson_r(const std::vector<double>& a, const std::vector<double>& b);

// Max KKT violation of the lasso stationarity conditions at w, given the
// standardized Gram matrix g = X^T X / N and c = X^T y / N.
double lasso_kkt_violation(const Matrix& g, const std::vector<double>& c,
                           const std::vector<double>& w, double alpha);

struct RegSpec {
  RegKind kind = RegKind::l1;
  double alpha = 0.1;
};

// End-to-end: split, fit on train rows with a non-missing target, evaluate
// Pearson r on the test split. A degenerate (constant) prediction reports
// r = 0 rather than erroring; a constant actual target is still an error.
ProbeReport probe_experiment(const EmbeddingMatrix& embeddings, const TargetTable& targets,
                             const std::string& target_name, const RegSpec& reg,
                             const SplitSpec& split, const LassoConfig& config = {},
                             LinearProbe* fitted = nullptr);

// Evaluates a frozen probe (standardization stats from its own training
// domain) on all usable rows of another domain.
ProbeReport cross_domain_eval(const LinearProbe& probe, const EmbeddingMatrix& embeddings_b,
                              const TargetTable& targets_b, const std::string& target_name);

// k (index, weight) pairs by |weight| descending, ties by ascending index.
std::vector<std::pair<size_t, double>> top_coefficients(const LinearProbe& probe, size_t k);

io::ModelArtifact probe_to_artifact(const LinearProbe& probe);
LinearProbe probe_from_artifact(const io::ModelArtifact& artifact);

}  // namespace emblens::probe
