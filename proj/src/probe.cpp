#include "emblens/probe.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <unordered_map>

#include "emblens/errors.hpp"
#include "emblens/kernels.hpp"

namespace emblens::probe {

namespace {

std::string fmt(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

struct Standardized {
  Matrix x;                         // standardized in place
  std::vector<double> means;
  std::vector<double> stds;         // constant columns recorded as 1.0
  std::vector<uint8_t> constant;
};

Standardized standardize(Matrix x) {
  Standardized s;
  kernels::col_mean_std(x, s.means, s.stds);
  s.constant.assign(x.cols, 0);
  for (size_t j = 0; j < x.cols; ++j) {
    if (s.stds[j] == 0.0) {
      s.constant[j] = 1;
      s.stds[j] = 1.0;
    }
  }
  const int64_t n = static_cast<int64_t>(x.rows);
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) {
    double* r = x.row(static_cast<size_t>(i));
    for (size_t j = 0; j < x.cols; ++j) r[j] = (r[j] - s.means[j]) / s.stds[j];
  }
  s.x = std::move(x);
  return s;
}

struct CenteredTarget {
  std::vector<double> y;
  double mean = 0.0;
};

CenteredTarget center_target(const std::vector<double>& y) {
  double sum = 0.0;
  bool varies = false;
  for (double v : y) {
    if (!std::isfinite(v)) throw DataError("non-finite target value");
    sum += v;
  }
  CenteredTarget c;
  c.mean = sum / static_cast<double>(y.size());
  c.y.resize(y.size());
  for (size_t i = 0; i < y.size(); ++i) {
    c.y[i] = y[i] - c.mean;
    if (y[i] != y[0]) varies = true;
  }
  if (!varies) throw DataError("no variation in target");
  return c;
}

void check_fit_inputs(const Matrix& x, const std::vector<double>& y, double alpha) {
  if (x.rows < 2) throw DataError("need at least 2 training rows");
  if (x.cols < 1) throw DataError("empty design matrix");
  if (y.size() != x.rows) throw DataError("target length does not match design rows");
  if (alpha < 0.0) throw UsageError("regularization alpha must be nonnegative");
}

// Solves a*x = b for symmetric positive definite a (in place Cholesky).
std::vector<double> cholesky_solve(Matrix a, std::vector<double> b) {
  const size_t n = a.rows;
  for (size_t j = 0; j < n; ++j) {
    double d = a(j, j);
    for (size_t k = 0; k < j; ++k) d -= a(j, k) * a(j, k);
    if (!(d > 0.0)) throw NumericError("linear system is not positive definite");
    const double l = std::sqrt(d);
    a(j, j) = l;
    for (size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (size_t k = 0; k < j; ++k) s -= a(i, k) * a(j, k);
      a(i, j) = s / l;
    }
  }
  // forward: L z = b
  for (size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (size_t k = 0; k < i; ++k) s -= a(i, k) * b[k];
    b[i] = s / a(i, i);
  }
  // backward: L^T x = z
  for (size_t ii = n; ii > 0; --ii) {
    const size_t i = ii - 1;
    double s = b[i];
    for (size_t k = i + 1; k < n; ++k) s -= a(k, i) * b[k];
    b[i] = s / a(i, i);
  }
  return b;
}

Matrix rows_to_matrix(const EmbeddingMatrix& e, const std::vector<size_t>& rows) {
  Matrix m(rows.size(), e.n_dims);
  for (size_t i = 0; i < rows.size(); ++i) {
    const float* src = e.row(rows[i]);
    double* dst = m.row(i);
    for (size_t j = 0; j < e.n_dims; ++j) dst[j] = static_cast<double>(src[j]);
  }
  return m;
}

double variance(const std::vector<double>& v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return s;
}

// Pearson r with the experiment-level convention: a constant prediction
// carries no linear signal and scores 0.
double eval_r(const std::vector<double>& pred, const std::vector<double>& actual) {
  if (variance(pred) == 0.0) return 0.0;
  return pearson_r(pred, actual);
}

struct UsableRows {
  std::vector<size_t> emb_rows;
  std::vector<double> y;
};

// Inner join of embedding rows (restricted to `ids`, or all rows when null)
// against non-missing entries of one target column.
UsableRows usable_rows(const EmbeddingMatrix& e, const TargetTable& t,
                       const std::string& target_name,
                       const std::vector<std::string>* ids) {
  const TargetColumn& col = t.column(target_name);
  std::unordered_map<std::string, size_t> target_row;
  target_row.reserve(t.ids.size());
  for (size_t i = 0; i < t.ids.size(); ++i) target_row.emplace(t.ids[i], i);

  const auto& emb_index = e.id_index();
  UsableRows out;
  const auto consider = [&](const std::string& id) {
    auto eit = emb_index.find(id);
    if (eit == emb_index.end()) return;
    auto tit = target_row.find(id);
    if (tit == target_row.end() || !col.present[tit->second]) return;
    out.emb_rows.push_back(eit->second);
    out.y.push_back(col.values[tit->second]);
  };
  if (ids) {
    for (const auto& id : *ids) consider(id);
  } else {
    for (const auto& id : e.ids) consider(id);
  }
  return out;
}

}  // namespace

size_t LinearProbe::n_nonzero() const {
  size_t n = 0;
  for (double w : weights) {
    if (w != 0.0) ++n;
  }
  return n;
}

double soft_threshold(double z, double gamma) {
  if (z > gamma) return z - gamma;
  if (z < -gamma) return z + gamma;
  return 0.0;
}

LinearProbe fit_lasso(const Matrix& x, const std::vector<double>& y, double alpha,
                      const LassoConfig& config, LassoInfo* info) {
  check_fit_inputs(x, y, alpha);
  Standardized s = standardize(x);
  CenteredTarget t = center_target(y);
  const size_t d = x.cols;
  const double n = static_cast<double>(x.rows);

  Matrix g(d, d);
  kernels::gram(s.x, g);
  std::vector<double> c = kernels::gemv_t(s.x, t.y);
  for (double& v : c) v /= n;

  std::vector<double> w(d, 0.0);
  std::vector<double> q(d, 0.0);  // q = G w, maintained incrementally
  size_t sweep = 0;
  bool converged = false;
  for (; sweep < config.max_sweeps; ++sweep) {
    double max_delta = 0.0;
    for (size_t j = 0; j < d; ++j) {
      const double gjj = g(j, j);
      if (gjj <= 0.0) continue;  // constant column, weight pinned to 0
      const double z = c[j] - q[j] + gjj * w[j];
      const double w_new = soft_threshold(z, alpha) / gjj;
      const double delta = w_new - w[j];
      if (delta != 0.0) {
        const double* gj = g.row(j);
        for (size_t k = 0; k < d; ++k) q[k] += delta * gj[k];
        w[j] = w_new;
        max_delta = std::max(max_delta, std::fabs(delta));
      }
    }
    if (max_delta < config.tol) {
      converged = true;
      ++sweep;
      break;
    }
  }
  if (info) {
    info->sweeps = sweep;
    info->converged = converged;
  }

  LinearProbe probe;
  probe.weights = std::move(w);
  probe.bias = 0.0;
  probe.feature_means = std::move(s.means);
  probe.feature_stds = std::move(s.stds);
  probe.target_mean = t.mean;
  probe.reg_kind = RegKind::l1;
  probe.reg_alpha = alpha;
  return probe;
}

LinearProbe fit_ridge(const Matrix& x, const std::vector<double>& y, double alpha) {
  check_fit_inputs(x, y, alpha);
  Standardized s = standardize(x);
  CenteredTarget t = center_target(y);
  const size_t d = x.cols;
  const double n = static_cast<double>(x.rows);

  Matrix g(d, d);
  kernels::gram(s.x, g);
  std::vector<double> c = kernels::gemv_t(s.x, t.y);
  for (double& v : c) v /= n;

  std::vector<size_t> active;  // non-constant columns enter the solve
  for (size_t j = 0; j < d; ++j) {
    if (!s.constant[j]) active.push_back(j);
  }
  std::vector<double> w(d, 0.0);
  if (!active.empty()) {
    Matrix a(active.size(), active.size());
    std::vector<double> b(active.size());
    for (size_t i = 0; i < active.size(); ++i) {
      for (size_t j = 0; j < active.size(); ++j) a(i, j) = g(active[i], active[j]);
      a(i, i) += 2.0 * alpha;
      b[i] = c[active[i]];
    }
    const std::vector<double> sol = cholesky_solve(std::move(a), std::move(b));
    for (size_t i = 0; i < active.size(); ++i) w[active[i]] = sol[i];
  }

  LinearProbe probe;
  probe.weights = std::move(w);
  probe.bias = 0.0;
  probe.feature_means = std::move(s.means);
  probe.feature_stds = std::move(s.stds);
  probe.target_mean = t.mean;
  probe.reg_kind = RegKind::l2;
  probe.reg_alpha = alpha;
  return probe;
}

namespace {

template <typename Getter>
std::vector<double> predict_rows(const LinearProbe& probe, size_t n_rows, size_t n_dims,
                                 Getter get_row) {
  if (n_dims != probe.dim())
    throw DataError("probe dimension " + std::to_string(probe.dim()) +
                    " does not match data dimension " + std::to_string(n_dims));
  const size_t d = probe.dim();
  std::vector<double> scaled(d);
  double offset = probe.target_mean + probe.bias;
  for (size_t j = 0; j < d; ++j) {
    scaled[j] = probe.weights[j] / probe.feature_stds[j];
    offset -= scaled[j] * probe.feature_means[j];
  }
  std::vector<double> out(n_rows);
  const int64_t n = static_cast<int64_t>(n_rows);
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) {
    const auto* r = get_row(static_cast<size_t>(i));
    double sum = 0.0;
    for (size_t j = 0; j < d; ++j) sum += scaled[j] * static_cast<double>(r[j]);
    out[static_cast<size_t>(i)] = offset + sum;
  }
  return out;
}

}  // namespace

std::vector<double> predict(const LinearProbe& probe, const EmbeddingMatrix& x) {
  return predict_rows(probe, x.n_rows, x.n_dims, [&](size_t i) { return x.row(i); });
}

std::vector<double> predict(const LinearProbe& probe, const Matrix& x) {
  return predict_rows(probe, x.rows, x.cols, [&](size_t i) { return x.row(i); });
}

double pearson_r(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw UsageError("pearson_r inputs differ in length");
  if (a.size() < 2) throw DataError("pearson_r needs at least 2 samples");
  double ma = 0.0, mb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    if (!std::isfinite(a[i]) || !std::isfinite(b[i]))
      throw DataError("non-finite value in pearson_r input");
    ma += a[i];
    mb += b[i];
  }
  ma /= static_cast<double>(a.size());
  mb /= static_cast<double>(b.size());
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) throw NumericError("zero variance in pearson_r input");
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

double lasso_kkt_violation(const Matrix& g, const std::vector<double>& c,
                           const std::vector<double>& w, double alpha) {
  const size_t d = w.size();
  std::vector<double> gw(d, 0.0);
  for (size_t j = 0; j < d; ++j) {
    if (w[j] == 0.0) continue;
    const double* gj = g.row(j);
    for (size_t k = 0; k < d; ++k) gw[k] += w[j] * gj[k];
  }
  double worst = 0.0;
  for (size_t j = 0; j < d; ++j) {
    if (g(j, j) <= 0.0) continue;
    const double rho = c[j] - gw[j];  // (1/N) x_j^T residual
    if (w[j] == 0.0) {
      worst = std::max(worst, std::fabs(rho) - alpha);
    } else {
      worst = std::max(worst, std::fabs(rho - alpha * (w[j] > 0.0 ? 1.0 : -1.0)));
    }
  }
  return worst;
}

ProbeReport probe_experiment(const EmbeddingMatrix& embeddings, const TargetTable& targets,
                             const std::string& target_name, const RegSpec& reg,
                             const SplitSpec& split, const LassoConfig& config,
                             LinearProbe* fitted) {
  const auto [train_ids, test_ids] = split_train_test(embeddings.ids, split);
  UsableRows train = usable_rows(embeddings, targets, target_name, &train_ids);
  UsableRows test = usable_rows(embeddings, targets, target_name, &test_ids);
  if (train.emb_rows.size() < 2)
    throw DataError("fewer than 2 usable training rows for target: " + target_name);
  if (test.emb_rows.size() < 2)
    throw DataError("fewer than 2 usable test rows for target: " + target_name);

  const Matrix x_train = rows_to_matrix(embeddings, train.emb_rows);
  LinearProbe probe = reg.kind == RegKind::l1
                          ? fit_lasso(x_train, train.y, reg.alpha, config)
                          : fit_ridge(x_train, train.y, reg.alpha);
  probe.target_name = target_name;

  const Matrix x_test = rows_to_matrix(embeddings, test.emb_rows);
  const std::vector<double> pred = predict(probe, x_test);

  ProbeReport report;
  report.target_name = target_name;
  report.pearson_r_test = eval_r(pred, test.y);
  report.n_nonzero = probe.n_nonzero();
  report.n_train = train.emb_rows.size();
  report.n_test = test.emb_rows.size();
  report.seed = split.seed;
  report.reg_kind = reg.kind;
  report.reg_alpha = reg.alpha;
  if (fitted) *fitted = std::move(probe);
  return report;
}

ProbeReport cross_domain_eval(const LinearProbe& probe, const EmbeddingMatrix& embeddings_b,
                              const TargetTable& targets_b, const std::string& target_name) {
  if (embeddings_b.n_dims != probe.dim())
    throw DataError("probe dimension " + std::to_string(probe.dim()) +
                    " does not match domain dimension " +
                    std::to_string(embeddings_b.n_dims));
  UsableRows rows = usable_rows(embeddings_b, targets_b, target_name, nullptr);
  if (rows.emb_rows.size() < 2)
    throw DataError("fewer than 2 usable rows for target: " + target_name);

  const Matrix x = rows_to_matrix(embeddings_b, rows.emb_rows);
  const std::vector<double> pred = predict(probe, x);

  ProbeReport report;
  report.target_name = target_name;
  report.pearson_r_test = eval_r(pred, rows.y);
  report.n_nonzero = probe.n_nonzero();
  report.n_train = 0;
  report.n_test = rows.emb_rows.size();
  report.seed = 0;
  report.reg_kind = probe.reg_kind;
  report.reg_alpha = probe.reg_alpha;
  return report;
}

std::vector<std::pair<size_t, double>> top_coefficients(const LinearProbe& probe, size_t k) {
  if (k < 1) throw UsageError("top_coefficients needs k >= 1");
  std::vector<size_t> idx(probe.dim());
  for (size_t j = 0; j < idx.size(); ++j) idx[j] = j;
  std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) {
    const double fa = std::fabs(probe.weights[a]);
    const double fb = std::fabs(probe.weights[b]);
    if (fa != fb) return fa > fb;
    return a < b;
  });
  const size_t take = std::min(k, idx.size());
  std::vector<std::pair<size_t, double>> out;
  out.reserve(take);
  for (size_t i = 0; i < take; ++i) out.emplace_back(idx[i], probe.weights[idx[i]]);
  return out;
}

std::string format_probe_report(const ProbeReport& r) {
  std::string out;
  out += "target=" + r.target_name + "\n";
  out += std::string("reg=") + (r.reg_kind == RegKind::l1 ? "l1" : "l2") + "\n";
  out += "alpha=" + fmt(r.reg_alpha) + "\n";
  out += "pearson_r_test=" + fmt(r.pearson_r_test) + "\n";
  out += "n_nonzero=" + std::to_string(r.n_nonzero) + "\n";
  out += "n_train=" + std::to_string(r.n_train) + "\n";
  out += "n_test=" + std::to_string(r.n_test) + "\n";
  out += "seed=" + std::to_string(r.seed) + "\n";
  return out;
}

void write_probe_report(const ProbeReport& r, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open file for writing: " + path);
  out << format_probe_report(r);
  if (!out) throw DataError("write failed: " + path);
}

io::ModelArtifact probe_to_artifact(const LinearProbe& probe) {
  io::ModelArtifact art;
  art.kind = io::ModelArtifact::Kind::probe;
  art.meta["model"] = "probe";
  art.meta["target"] = probe.target_name;
  art.meta["reg"] = probe.reg_kind == RegKind::l1 ? "l1" : "l2";
  art.meta["dim"] = probe.dim();
  art.blocks.emplace_back("weights", probe.weights);
  art.blocks.emplace_back("feature_means", probe.feature_means);
  art.blocks.emplace_back("feature_stds", probe.feature_stds);
  art.blocks.emplace_back("bias", std::vector<double>{probe.bias});
  art.blocks.emplace_back("target_mean", std::vector<double>{probe.target_mean});
  art.blocks.emplace_back("reg_alpha", std::vector<double>{probe.reg_alpha});
  return art;
}

LinearProbe probe_from_artifact(const io::ModelArtifact& artifact) {
  if (artifact.kind != io::ModelArtifact::Kind::probe)
    throw DataError("artifact does not hold a probe model");
  LinearProbe probe;
  probe.target_name = artifact.meta.at("target").get<std::string>();
  const std::string reg = artifact.meta.at("reg").get<std::string>();
  if (reg != "l1" && reg != "l2") throw DataError("probe artifact has unknown reg kind");
  probe.reg_kind = reg == "l1" ? RegKind::l1 : RegKind::l2;
  probe.weights = artifact.block("weights");
  probe.feature_means = artifact.block("feature_means");
  probe.feature_stds = artifact.block("feature_stds");
  const size_t d = artifact.meta.at("dim").get<size_t>();
  if (probe.weights.size() != d || probe.feature_means.size() != d ||
      probe.feature_stds.size() != d)
    throw DataError("probe artifact block sizes disagree with dim");
  const auto scalar = [&](const std::string& name) {
    const std::vector<double>& b = artifact.block(name);
    if (b.size() != 1) throw DataError("probe artifact block " + name + " must be scalar");
    return b[0];
  };
  probe.bias = scalar("bias");
  probe.target_mean = scalar("target_mean");
  probe.reg_alpha = scalar("reg_alpha");
  return probe;
}

}  // namespace emblens::probe
