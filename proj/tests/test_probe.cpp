#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "emblens/errors.hpp"
#include "emblens/probe.hpp"
#include "emblens/rng.hpp"
#include "emblens/synth.hpp"

using namespace emblens;

namespace {

// Test-side standardization with population stats, independent of the
// implementation's path.
Matrix standardize_ref(const Matrix& x) {
  Matrix out = x;
  for (size_t j = 0; j < x.cols; ++j) {
    double mean = 0.0;
    for (size_t i = 0; i < x.rows; ++i) mean += x(i, j);
    mean /= static_cast<double>(x.rows);
    double var = 0.0;
    for (size_t i = 0; i < x.rows; ++i) var += (x(i, j) - mean) * (x(i, j) - mean);
    var /= static_cast<double>(x.rows);
    const double sd = var > 0.0 ? std::sqrt(var) : 1.0;
    for (size_t i = 0; i < x.rows; ++i) out(i, j) = (x(i, j) - mean) / sd;
  }
  return out;
}

// Random 64x16 design with centered, orthogonal, unit-population-variance
// columns: modified Gram-Schmidt on centered columns, then scaled by sqrt(N).
Matrix orthonormal_standardized_design(size_t n, size_t d, uint64_t seed) {
  Rng rng(seed);
  Matrix x(n, d);
  for (double& v : x.data) v = rng.normal();
  for (size_t j = 0; j < d; ++j) {
    double mean = 0.0;
    for (size_t i = 0; i < n; ++i) mean += x(i, j);
    mean /= static_cast<double>(n);
    for (size_t i = 0; i < n; ++i) x(i, j) -= mean;
    for (size_t k = 0; k < j; ++k) {
      double dot = 0.0;
      for (size_t i = 0; i < n; ++i) dot += x(i, j) * x(i, k);
      for (size_t i = 0; i < n; ++i) x(i, j) -= dot * x(i, k);
    }
    double norm = 0.0;
    for (size_t i = 0; i < n; ++i) norm += x(i, j) * x(i, j);
    norm = std::sqrt(norm);
    for (size_t i = 0; i < n; ++i) x(i, j) /= norm;
  }
  const double scale = std::sqrt(static_cast<double>(n));
  for (double& v : x.data) v *= scale;
  return x;
}

// Gaussian elimination with partial pivoting; the ridge/OLS oracle.
std::vector<double> solve_dense_ref(Matrix a, std::vector<double> b) {
  const size_t n = a.rows;
  for (size_t col = 0; col < n; ++col) {
    size_t piv = col;
    for (size_t r = col + 1; r < n; ++r) {
      if (std::fabs(a(r, col)) > std::fabs(a(piv, col))) piv = r;
    }
    if (piv != col) {
      for (size_t c = 0; c < n; ++c) std::swap(a(col, c), a(piv, c));
      std::swap(b[col], b[piv]);
    }
    REQUIRE(a(col, col) != 0.0);
    for (size_t r = col + 1; r < n; ++r) {
      const double f = a(r, col) / a(col, col);
      for (size_t c = col; c < n; ++c) a(r, c) -= f * a(col, c);
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n);
  for (size_t ii = n; ii > 0; --ii) {
    const size_t i = ii - 1;
    double s = b[i];
    for (size_t c = i + 1; c < n; ++c) s -= a(i, c) * x[c];
    x[i] = s / a(i, i);
  }
  return x;
}

void gram_ref(const Matrix& xs, Matrix& g, const std::vector<double>& y,
              std::vector<double>& c) {
  const double n = static_cast<double>(xs.rows);
  g = Matrix(xs.cols, xs.cols);
  c.assign(xs.cols, 0.0);
  for (size_t a = 0; a < xs.cols; ++a) {
    for (size_t b = 0; b < xs.cols; ++b) {
      double s = 0.0;
      for (size_t i = 0; i < xs.rows; ++i) s += xs(i, a) * xs(i, b);
      g(a, b) = s / n;
    }
    double s = 0.0;
    for (size_t i = 0; i < xs.rows; ++i) s += xs(i, a) * y[i];
    c[a] = s / n;
  }
}

std::vector<double> centered(const std::vector<double>& y) {
  double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  std::vector<double> out(y.size());
  for (size_t i = 0; i < y.size(); ++i) out[i] = y[i] - mean;
  return out;
}

Matrix to_double(const EmbeddingMatrix& e) {
  Matrix m(e.n_rows, e.n_dims);
  for (size_t i = 0; i < e.n_rows; ++i)
    for (size_t j = 0; j < e.n_dims; ++j) m(i, j) = e.at(i, j);
  return m;
}

}  // namespace

TEST_CASE("soft_threshold analytic cases") {
  CHECK(probe::soft_threshold(3.0, 1.0) == 2.0);
  CHECK(probe::soft_threshold(-0.5, 1.0) == 0.0);
  CHECK(probe::soft_threshold(-3.0, 1.0) == -2.0);
  Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    const double z = rng.normal() * 5.0;
    CHECK(probe::soft_threshold(z, 0.0) == z);
  }
}

// Lasso oracle: on an orthonormalized standardized design the minimizer is
// the coordinatewise soft-thresholded least-squares solution.
TEST_CASE("fit_lasso matches soft-thresholded OLS on an orthonormal design") {
  const size_t n = 64, d = 16;
  const Matrix x = orthonormal_standardized_design(n, d, 21);
  Rng rng(22);
  std::vector<double> y(n);
  for (size_t i = 0; i < n; ++i) {
    y[i] = 0.4 * x(i, 0) - 0.35 * x(i, 3) + 0.05 * x(i, 7) + 2.0 + 0.1 * rng.normal();
  }
  const double alpha = 0.1;
  probe::LassoInfo info;
  const probe::LinearProbe fitted = probe::fit_lasso(x, y, alpha, {}, &info);
  CHECK(info.converged);

  const std::vector<double> yc = centered(y);
  for (size_t j = 0; j < d; ++j) {
    double ols = 0.0;
    for (size_t i = 0; i < n; ++i) ols += x(i, j) * yc[i];
    ols /= static_cast<double>(n);
    const double expected = probe::soft_threshold(ols, alpha);
    CHECK(std::fabs(fitted.weights[j] - expected) < 1e-6);
  }

  Matrix g;
  std::vector<double> c;
  gram_ref(standardize_ref(x), g, y, c);
  const std::vector<double> cc = [&] {
    std::vector<double> out;
    gram_ref(standardize_ref(x), g, centered(y), out);
    return out;
  }();
  CHECK(probe::lasso_kkt_violation(g, cc, fitted.weights, alpha) < 1e-6);
}

TEST_CASE("fit_lasso null solution when alpha dominates") {
  Rng rng(5);
  Matrix x(40, 6);
  for (double& v : x.data) v = rng.normal();
  std::vector<double> y(40);
  for (double& v : y) v = rng.normal();
  // alpha >= max_j |x_j^T y| / N on standardized data; |c_j| <= sd(y) always
  double sd = 0.0;
  const std::vector<double> yc = centered(y);
  for (double v : yc) sd += v * v;
  sd = std::sqrt(sd / 40.0);
  const probe::LinearProbe fitted = probe::fit_lasso(x, y, sd * 1.01);
  CHECK(fitted.n_nonzero() == 0);
  for (double w : fitted.weights) CHECK(w == 0.0);
}

TEST_CASE("fit_lasso recovers a planted 8-sparse support") {
  synth::PlantedLinearSpec spec;
  spec.n = 2000;
  spec.d = 32;
  spec.support = {1, 4, 7, 11, 17, 22, 28, 31};
  spec.true_weights = {1.5, -1.2, 2.0, -1.8, 1.1, -1.4, 1.9, -1.0};
  spec.seed = 17;
  spec.noise_sigma = synth::noise_sigma_for_snr(spec.true_weights, 10.0);
  const synth::PlantedLinearData data = synth::gen_planted_linear(spec);

  const probe::LinearProbe fitted =
      probe::fit_lasso(to_double(data.embeddings), data.targets.column("target").values, 0.1);
  size_t tp = 0, fp = 0;
  for (size_t j = 0; j < spec.d; ++j) {
    const bool in_support =
        std::find(spec.support.begin(), spec.support.end(), j) != spec.support.end();
    if (fitted.weights[j] != 0.0) {
      (in_support ? tp : fp) += 1;
    }
  }
  const size_t fn = spec.support.size() - tp;
  const double f1 = 2.0 * tp / static_cast<double>(2 * tp + fp + fn);
  CHECK(f1 >= 0.9);
}

TEST_CASE("fit_lasso rejects constant targets and degenerate input") {
  Matrix x(10, 2, 1.0);
  std::vector<double> y(10, 3.0);
  CHECK_THROWS_WITH_AS(probe::fit_lasso(x, y, 0.1), doctest::Contains("no variation"),
                       DataError);
  Matrix one_row(1, 2, 1.0);
  CHECK_THROWS_AS(probe::fit_lasso(one_row, {1.0}, 0.1), DataError);
  CHECK_THROWS_AS(probe::fit_lasso(x, {1.0, 2.0}, 0.1), DataError);
  std::vector<double> y2(10);
  for (size_t i = 0; i < 10; ++i) y2[i] = static_cast<double>(i);
  CHECK_THROWS_AS(probe::fit_lasso(x, y2, -0.5), UsageError);
}

TEST_CASE("constant embedding columns get std 1 and weight 0") {
  Rng rng(9);
  Matrix x(30, 4);
  for (size_t i = 0; i < 30; ++i) {
    x(i, 0) = rng.normal();
    x(i, 1) = 7.25;  // constant
    x(i, 2) = rng.normal();
    x(i, 3) = rng.normal();
  }
  std::vector<double> y(30);
  for (size_t i = 0; i < 30; ++i) y[i] = x(i, 0) + 0.1 * rng.normal();
  for (const auto& fitted :
       {probe::fit_lasso(x, y, 0.01), probe::fit_ridge(x, y, 0.01)}) {
    CHECK(fitted.weights[1] == 0.0);
    CHECK(fitted.feature_stds[1] == 1.0);
    CHECK(fitted.weights[0] != 0.0);
  }
}

TEST_CASE("fit_ridge with alpha 0 matches least squares on a full-rank design") {
  Rng rng(31);
  const size_t n = 80, d = 10;
  Matrix x(n, d);
  for (double& v : x.data) v = rng.normal();
  std::vector<double> y(n);
  for (size_t i = 0; i < n; ++i)
    y[i] = 0.7 * x(i, 2) - 1.3 * x(i, 5) + 0.25 * x(i, 9) + 0.5 * rng.normal();

  const probe::LinearProbe fitted = probe::fit_ridge(x, y, 0.0);

  Matrix g;
  std::vector<double> c;
  gram_ref(standardize_ref(x), g, centered(y), c);
  const std::vector<double> expected = solve_dense_ref(g, c);
  for (size_t j = 0; j < d; ++j) CHECK(std::fabs(fitted.weights[j] - expected[j]) < 1e-8);
}

TEST_CASE("fit_ridge shrinks to the target mean as alpha grows") {
  Rng rng(32);
  Matrix x(50, 5);
  for (double& v : x.data) v = rng.normal();
  std::vector<double> y(50);
  for (size_t i = 0; i < 50; ++i) y[i] = 2.0 * x(i, 1) + 10.0 + rng.normal();
  const probe::LinearProbe fitted = probe::fit_ridge(x, y, 1e7);
  double norm = 0.0;
  for (double w : fitted.weights) norm += w * w;
  CHECK(std::sqrt(norm) < 1e-5);
  const std::vector<double> pred = probe::predict(fitted, x);
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / 50.0;
  for (double p : pred) CHECK(std::fabs(p - mean) < 1e-3);
}

TEST_CASE("fit_ridge agrees with a direct solve of the regularized system") {
  Rng rng(33);
  const size_t n = 60, d = 8;
  Matrix x(n, d);
  for (double& v : x.data) v = rng.normal();
  std::vector<double> y(n);
  for (size_t i = 0; i < n; ++i) y[i] = x(i, 0) + 0.2 * rng.normal();
  const double alpha = 0.35;
  const probe::LinearProbe fitted = probe::fit_ridge(x, y, alpha);

  Matrix g;
  std::vector<double> c;
  gram_ref(standardize_ref(x), g, centered(y), c);
  for (size_t j = 0; j < d; ++j) g(j, j) += 2.0 * alpha;
  const std::vector<double> expected = solve_dense_ref(g, c);
  for (size_t j = 0; j < d; ++j) CHECK(std::fabs(fitted.weights[j] - expected[j]) < 1e-8);
  // the first feature dominates; the rest are shrunk noise
  for (size_t j = 1; j < d; ++j) CHECK(std::fabs(fitted.weights[j]) < std::fabs(fitted.weights[0]) * 0.2);
}

TEST_CASE("predict: zero-weight probe emits a constant") {
  probe::LinearProbe p;
  p.weights = {0.0, 0.0};
  p.feature_means = {1.0, -2.0};
  p.feature_stds = {2.0, 3.0};
  p.bias = 0.25;
  p.target_mean = 5.0;
  Matrix x(3, 2);
  for (double& v : x.data) v = 42.0;
  for (double pred : probe::predict(p, x)) CHECK(pred == 5.25);
}

TEST_CASE("predict: near-zero alpha lasso nails a noiseless planted target") {
  synth::PlantedLinearSpec spec;
  spec.n = 400;
  spec.d = 16;
  spec.support = {2, 9};
  spec.true_weights = {1.0, -2.0};
  spec.noise_sigma = 0.0;
  spec.seed = 8;
  const synth::PlantedLinearData data = synth::gen_planted_linear(spec);
  const std::vector<double>& y = data.targets.column("target").values;
  const probe::LinearProbe fitted = probe::fit_lasso(to_double(data.embeddings), y, 1e-8);
  const std::vector<double> pred = probe::predict(fitted, data.embeddings);
  CHECK(probe::pearson_r(pred, y) > 0.9999);
}

TEST_CASE("predict rejects dimension mismatch") {
  probe::LinearProbe p;
  p.weights.assign(384, 0.0);
  p.feature_means.assign(384, 0.0);
  p.feature_stds.assign(384, 1.0);
  Matrix x(2, 383, 0.0);
  CHECK_THROWS_WITH_AS(probe::predict(p, x), doctest::Contains("dimension"), DataError);
}

TEST_CASE("pearson_r analytic and error cases") {
  std::vector<double> a = {1.0, 2.0, 3.0, 4.5};
  std::vector<double> b(a.size());
  for (size_t i = 0; i < a.size(); ++i) b[i] = 2.0 * a[i] + 3.0;
  CHECK(probe::pearson_r(a, b) == doctest::Approx(1.0).epsilon(1e-12));
  for (size_t i = 0; i < a.size(); ++i) b[i] = -a[i];
  CHECK(probe::pearson_r(a, b) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK_THROWS_AS(probe::pearson_r({1.0, 1.0, 1.0, 1.0}, a), NumericError);
  CHECK_THROWS_AS(probe::pearson_r({1.0}, {2.0}), DataError);
  CHECK_THROWS_AS(probe::pearson_r({1.0, 2.0}, {2.0}), UsageError);
}

TEST_CASE("pearson_r is invariant to positive-affine transforms") {
  Rng rng(12);
  std::vector<double> a(50), b(50);
  for (size_t i = 0; i < 50; ++i) {
    a[i] = rng.normal();
    b[i] = 0.5 * a[i] + rng.normal();
  }
  const double base = probe::pearson_r(a, b);
  std::vector<double> a2(50), b2(50);
  for (size_t i = 0; i < 50; ++i) {
    a2[i] = 3.7 * a[i] - 11.0;
    b2[i] = 0.004 * b[i] + 2.5;
  }
  CHECK(std::fabs(probe::pearson_r(a2, b) - base) < 1e-12);
  CHECK(std::fabs(probe::pearson_r(a, b2) - base) < 1e-12);
}

TEST_CASE("probe_experiment on a planted target clears r >= 0.95 at SNR 10") {
  synth::PlantedLinearSpec spec;
  spec.n = 4000;
  spec.d = 32;
  spec.support = {0, 5, 10, 15, 20, 25, 30, 31};
  spec.true_weights = {1.4, -1.1, 1.8, -2.0, 1.2, -1.6, 1.9, -1.3};
  spec.seed = 2024;
  spec.noise_sigma = synth::noise_sigma_for_snr(spec.true_weights, 10.0);
  const synth::PlantedLinearData data = synth::gen_planted_linear(spec);

  const probe::ProbeReport report = probe::probe_experiment(
      data.embeddings, data.targets, "target", {probe::RegKind::l1, 0.1}, {0.2, 2});
  CHECK(report.pearson_r_test >= 0.95);
  CHECK(report.n_train == 3200);
  CHECK(report.n_test == 800);
}

TEST_CASE("probe_experiment is bit-deterministic in the seed") {
  synth::PlantedLinearSpec spec;
  spec.n = 500;
  spec.d = 12;
  spec.support = {3};
  spec.true_weights = {2.0};
  spec.noise_sigma = 0.5;
  spec.seed = 4;
  const synth::PlantedLinearData data = synth::gen_planted_linear(spec);
  const probe::ProbeReport a = probe::probe_experiment(
      data.embeddings, data.targets, "target", {probe::RegKind::l1, 0.1}, {0.25, 11});
  const probe::ProbeReport b = probe::probe_experiment(
      data.embeddings, data.targets, "target", {probe::RegKind::l1, 0.1}, {0.25, 11});
  CHECK(a.pearson_r_test == b.pearson_r_test);
  CHECK(a.n_nonzero == b.n_nonzero);
  CHECK(probe::format_probe_report(a) == probe::format_probe_report(b));
}

TEST_CASE("probe_experiment null target scores near zero") {
  synth::PlantedLinearSpec spec;
  spec.n = 5000;
  spec.d = 24;
  spec.support = {};
  spec.true_weights = {};
  spec.noise_sigma = 1.0;
  spec.seed = 50;
  const synth::PlantedLinearData data = synth::gen_planted_linear(spec);
  for (uint64_t seed : {1ull, 2ull, 3ull}) {
    const probe::ProbeReport report = probe::probe_experiment(
        data.embeddings, data.targets, "target", {probe::RegKind::l1, 0.1}, {0.2, seed});
    CHECK(std::fabs(report.pearson_r_test) < 0.1);
  }
}

TEST_CASE("probe_experiment drops rows with missing targets") {
  synth::PlantedLinearSpec spec;
  spec.n = 200;
  spec.d = 8;
  spec.support = {0};
  spec.true_weights = {1.0};
  spec.noise_sigma = 0.1;
  spec.seed = 3;
  synth::PlantedLinearData data = synth::gen_planted_linear(spec);
  TargetColumn& col = data.targets.columns.at("target");
  for (size_t i = 0; i < 50; ++i) col.present[i] = 0;
  const probe::ProbeReport report = probe::probe_experiment(
      data.embeddings, data.targets, "target", {probe::RegKind::l1, 0.01}, {0.2, 9});
  CHECK(report.n_train + report.n_test == 150);
  CHECK(report.pearson_r_test > 0.9);
  CHECK_THROWS_AS(probe::probe_experiment(data.embeddings, data.targets, "absent",
                                          {probe::RegKind::l1, 0.1}, {0.2, 9}),
                  DataError);
}

TEST_CASE("cross_domain_eval transfers between domains sharing planted axes") {
  synth::PlantedLinearSpec spec_a;
  spec_a.n = 4000;
  spec_a.d = 24;
  spec_a.support = {2, 7, 12, 17};
  spec_a.true_weights = {1.5, -2.0, 1.0, 1.8};
  spec_a.seed = 100;
  spec_a.noise_sigma = synth::noise_sigma_for_snr(spec_a.true_weights, 10.0);
  synth::PlantedLinearSpec spec_b = spec_a;
  spec_b.seed = 200;                          // fresh domain, same axes
  spec_b.noise_sigma = spec_a.noise_sigma * 1.15;  // domain-specific noise

  const synth::PlantedLinearData a = synth::gen_planted_linear(spec_a);
  const synth::PlantedLinearData b = synth::gen_planted_linear(spec_b);

  probe::LinearProbe fitted;
  const probe::ProbeReport in_domain = probe::probe_experiment(
      a.embeddings, a.targets, "target", {probe::RegKind::l1, 0.1}, {0.2, 7}, {}, &fitted);
  const probe::ProbeReport transfer =
      probe::cross_domain_eval(fitted, b.embeddings, b.targets, "target");
  CHECK(std::fabs(transfer.pearson_r_test - in_domain.pearson_r_test) <= 0.05);
  CHECK(transfer.n_test == 4000);

  // permuting embedding dimensions destroys the transfer
  std::vector<float> permuted(b.embeddings.values.size());
  const size_t d = spec_b.d;
  std::vector<size_t> perm(d);
  for (size_t j = 0; j < d; ++j) perm[j] = (j + 1) % d;
  for (size_t i = 0; i < b.embeddings.n_rows; ++i)
    for (size_t j = 0; j < d; ++j)
      permuted[i * d + j] = b.embeddings.at(i, perm[j]);
  const EmbeddingMatrix b_perm =
      validate_embedding_matrix(b.embeddings.ids, permuted, d);
  const probe::ProbeReport collapsed =
      probe::cross_domain_eval(fitted, b_perm, b.targets, "target");
  CHECK(std::fabs(collapsed.pearson_r_test) < 0.2);
}

TEST_CASE("cross_domain_eval rejects dimension and column mismatches") {
  probe::LinearProbe p;
  p.weights.assign(4, 0.1);
  p.feature_means.assign(4, 0.0);
  p.feature_stds.assign(4, 1.0);
  Rng rng(1);
  std::vector<float> vals(10 * 3);
  for (float& v : vals) v = static_cast<float>(rng.normal());
  std::vector<std::string> ids;
  for (int i = 0; i < 10; ++i) ids.push_back("i" + std::to_string(i));
  const EmbeddingMatrix e = validate_embedding_matrix(ids, vals, 3);
  TargetTable t;
  t.ids = ids;
  t.add_column("y", std::vector<double>(10, 1.0));
  CHECK_THROWS_AS(probe::cross_domain_eval(p, e, t, "y"), DataError);
}

TEST_CASE("top_coefficients ordering and tie-breaks") {
  probe::LinearProbe p;
  p.weights = {0.0, 3.0, -5.0};
  p.feature_means.assign(3, 0.0);
  p.feature_stds.assign(3, 1.0);
  const auto top2 = probe::top_coefficients(p, 2);
  REQUIRE(top2.size() == 2);
  CHECK(top2[0] == std::pair<size_t, double>{2, -5.0});
  CHECK(top2[1] == std::pair<size_t, double>{1, 3.0});

  probe::LinearProbe zeros;
  zeros.weights = {0.0, 0.0, 0.0};
  zeros.feature_means.assign(3, 0.0);
  zeros.feature_stds.assign(3, 1.0);
  const auto top1 = probe::top_coefficients(zeros, 1);
  REQUIRE(top1.size() == 1);
  CHECK(top1[0] == std::pair<size_t, double>{0, 0.0});

  CHECK_THROWS_AS(probe::top_coefficients(p, 0), UsageError);
}

TEST_CASE("top_coefficients covers a planted support") {
  synth::PlantedLinearSpec spec;
  spec.n = 3000;
  spec.d = 40;
  spec.support = {4, 14, 24, 34};
  spec.true_weights = {2.0, -1.5, 1.2, -2.2};
  spec.seed = 88;
  spec.noise_sigma = synth::noise_sigma_for_snr(spec.true_weights, 10.0);
  const synth::PlantedLinearData data = synth::gen_planted_linear(spec);
  const probe::LinearProbe fitted =
      probe::fit_lasso(to_double(data.embeddings), data.targets.column("target").values, 0.1);
  const auto top = probe::top_coefficients(fitted, 4);
  std::vector<size_t> idx;
  for (const auto& [j, w] : top) idx.push_back(j);
  std::sort(idx.begin(), idx.end());
  CHECK(idx == std::vector<size_t>{4, 14, 24, 34});
}

TEST_CASE("lasso KKT conditions hold at convergence on a correlated design") {
  Rng rng(55);
  const size_t n = 300, d = 20;
  Matrix x(n, d);
  for (size_t i = 0; i < n; ++i) {
    const double shared = rng.normal();
    for (size_t j = 0; j < d; ++j) x(i, j) = 0.6 * shared + rng.normal();
  }
  std::vector<double> y(n);
  for (size_t i = 0; i < n; ++i)
    y[i] = 1.5 * x(i, 1) - 0.8 * x(i, 6) + 0.5 * rng.normal();
  const double alpha = 0.05;
  const probe::LinearProbe fitted = probe::fit_lasso(x, y, alpha);

  Matrix g;
  std::vector<double> c;
  gram_ref(standardize_ref(x), g, centered(y), c);
  CHECK(probe::lasso_kkt_violation(g, c, fitted.weights, alpha) < 1e-5);
}

TEST_CASE("n_nonzero is non-increasing along an alpha grid") {
  synth::PlantedLinearSpec spec;
  spec.n = 1500;
  spec.d = 48;
  spec.support = {0, 6, 12, 18, 24, 30};
  spec.true_weights = {1.0, -0.8, 1.2, -1.5, 0.9, -1.1};
  spec.seed = 77;
  spec.noise_sigma = synth::noise_sigma_for_snr(spec.true_weights, 5.0);
  const synth::PlantedLinearData data = synth::gen_planted_linear(spec);
  const Matrix x = to_double(data.embeddings);
  const std::vector<double>& y = data.targets.column("target").values;

  size_t prev = SIZE_MAX;
  for (double alpha : {0.01, 0.05, 0.1, 0.5, 1.0}) {
    const size_t nz = probe::fit_lasso(x, y, alpha).n_nonzero();
    CHECK(nz <= prev);
    prev = nz;
  }
}

TEST_CASE("probe report serializes as key=value lines") {
  probe::ProbeReport r;
  r.target_name = "area";
  r.pearson_r_test = 0.875;
  r.n_nonzero = 42;
  r.n_train = 800;
  r.n_test = 200;
  r.seed = 7;
  r.reg_kind = probe::RegKind::l1;
  r.reg_alpha = 0.1;
  const std::string text = probe::format_probe_report(r);
  CHECK(text.find("target=area\n") != std::string::npos);
  CHECK(text.find("reg=l1\n") != std::string::npos);
  CHECK(text.find("alpha=0.1\n") != std::string::npos);
  CHECK(text.find("pearson_r_test=0.875\n") != std::string::npos);
  CHECK(text.find("n_nonzero=42\n") != std::string::npos);
}
