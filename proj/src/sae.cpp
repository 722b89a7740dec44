#include "emblens/sae.hpp"

#include <charconv>
#include <cmath>
#include <fstream>

#include "emblens/errors.hpp"
#include "emblens/kernels.hpp"
#include "emblens/rng.hpp"

namespace emblens::sae {

namespace {

std::string fmt(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void add_row_bias(Matrix& m, const std::vector<double>& bias) {
  const int64_t n = static_cast<int64_t>(m.rows);
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) {
    double* r = m.row(static_cast<size_t>(i));
    for (size_t j = 0; j < m.cols; ++j) r[j] += bias[j];
  }
}

void normalize_decoder_rows(Matrix& w_dec) {
  const int64_t h = static_cast<int64_t>(w_dec.rows);
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < h; ++i) {
    double* r = w_dec.row(static_cast<size_t>(i));
    double sq = 0.0;
    for (size_t j = 0; j < w_dec.cols; ++j) sq += r[j] * r[j];
    if (sq > 0.0) {
      const double inv = 1.0 / std::sqrt(sq);
      for (size_t j = 0; j < w_dec.cols; ++j) r[j] *= inv;
    }
  }
}

void check_batch(const SaeModel& m, const Matrix& x) {
  if (x.cols != m.input_dim)
    throw DataError("batch dimension " + std::to_string(x.cols) +
                    " does not match model input dimension " +
                    std::to_string(m.input_dim));
  if (x.rows < 1) throw DataError("empty batch");
}

// Copies selected embedding rows (float storage) into a double batch.
Matrix gather_batch(const EmbeddingMatrix& e, const std::vector<size_t>& order,
                    size_t start, size_t count, const std::vector<double>* center) {
  Matrix out(count, e.n_dims);
  for (size_t i = 0; i < count; ++i) {
    const float* src = e.row(order[start + i]);
    double* dst = out.row(i);
    if (center) {
      for (size_t j = 0; j < e.n_dims; ++j)
        dst[j] = static_cast<double>(src[j]) - (*center)[j];
    } else {
      for (size_t j = 0; j < e.n_dims; ++j) dst[j] = static_cast<double>(src[j]);
    }
  }
  return out;
}

void check_finite(const std::vector<double>& g, const char* group) {
  for (size_t i = 0; i < g.size(); ++i) {
    if (!std::isfinite(g[i]))
      throw NumericError(std::string("non-finite gradient in ") + group +
                         " at index " + std::to_string(i));
  }
}

struct EvalAccum {
  double recon_sq = 0.0;
  double l1_sum = 0.0;
  double l0_sum = 0.0;
  std::vector<uint8_t> alive;
};

// One deterministic pass over the data in fixed batch order.
void eval_pass(const SaeModel& m, const EmbeddingMatrix& data, size_t batch_size,
               const std::vector<double>* center, EvalAccum& acc) {
  acc.alive.assign(m.hidden_dim, 0);
  std::vector<size_t> order(data.n_rows);
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (size_t start = 0; start < data.n_rows; start += batch_size) {
    const size_t count = std::min(batch_size, data.n_rows - start);
    const Matrix x = gather_batch(data, order, start, count, center);
    const SaeForward fwd = sae_forward(m, x);
    acc.recon_sq += kernels::frob_sq_diff(x, fwd.xhat);
    for (size_t i = 0; i < fwd.f.rows; ++i) {
      const double* fi = fwd.f.row(i);
      for (size_t h = 0; h < m.hidden_dim; ++h) {
        if (fi[h] > 0.0) {
          acc.l1_sum += fi[h];
          acc.l0_sum += 1.0;
          acc.alive[h] = 1;
        }
      }
    }
  }
}

double dead_fraction_from(const EvalAccum& acc, size_t hidden_dim) {
  size_t alive = 0;
  for (uint8_t a : acc.alive) alive += a;
  return 1.0 - static_cast<double>(alive) / static_cast<double>(hidden_dim);
}

// Sum of squared deviations from the column means, over the whole dataset.
double total_variance_about_mean(const EmbeddingMatrix& data,
                                 const std::vector<double>* center) {
  const size_t n = data.n_rows, d = data.n_dims;
  std::vector<double> mean(d, 0.0);
  for (size_t i = 0; i < n; ++i) {
    const float* r = data.row(i);
    for (size_t j = 0; j < d; ++j) mean[j] += static_cast<double>(r[j]);
  }
  for (size_t j = 0; j < d; ++j) {
    mean[j] /= static_cast<double>(n);
    if (center) mean[j] -= (*center)[j];
  }
  double total = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const float* r = data.row(i);
    double s = 0.0;
    for (size_t j = 0; j < d; ++j) {
      double v = static_cast<double>(r[j]);
      if (center) v -= (*center)[j];
      const double dlt = v - mean[j];
      s += dlt * dlt;
    }
    total += s;
  }
  return total;
}

}  // namespace

SaeModel sae_init(size_t input_dim, size_t expansion, uint64_t seed) {
  if (input_dim < 1) throw UsageError("sae input_dim must be >= 1");
  if (expansion < 1) throw UsageError("sae expansion must be >= 1");
  SaeModel m;
  m.input_dim = input_dim;
  m.hidden_dim = input_dim * expansion;
  m.expansion = expansion;
  m.w_enc = Matrix(input_dim, m.hidden_dim);
  m.b_enc.assign(m.hidden_dim, 0.0);
  m.w_dec = Matrix(m.hidden_dim, input_dim);
  m.b_dec.assign(input_dim, 0.0);

  Rng rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(input_dim));
  for (double& v : m.w_enc.data) v = rng.uniform(-bound, bound);
  for (double& v : m.w_dec.data) v = rng.uniform(-bound, bound);
  normalize_decoder_rows(m.w_dec);
  return m;
}

SaeForward sae_forward(const SaeModel& m, const Matrix& x) {
  check_batch(m, x);
  const size_t batch = x.rows;
  SaeForward fwd;

  fwd.xc = x;
  const int64_t n = static_cast<int64_t>(batch);
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) {
    double* r = fwd.xc.row(static_cast<size_t>(i));
    for (size_t j = 0; j < m.input_dim; ++j) r[j] -= m.b_dec[j];
  }

  fwd.z = Matrix(batch, m.hidden_dim);
  kernels::gemm_nn(fwd.xc, m.w_enc, fwd.z);
  add_row_bias(fwd.z, m.b_enc);

  fwd.f = fwd.z;
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) {
    double* r = fwd.f.row(static_cast<size_t>(i));
    for (size_t h = 0; h < m.hidden_dim; ++h) {
      if (r[h] < 0.0) r[h] = 0.0;
    }
  }

  fwd.xhat = Matrix(batch, m.input_dim);
  kernels::gemm_nn(fwd.f, m.w_dec, fwd.xhat);
  add_row_bias(fwd.xhat, m.b_dec);
  return fwd;
}

SaeLoss sae_loss_from_forward(const Matrix& x, const SaeForward& fwd, double lambda) {
  if (lambda < 0.0) throw UsageError("lambda must be nonnegative");
  const double batch = static_cast<double>(x.rows);
  SaeLoss loss;
  loss.recon = kernels::frob_sq_diff(x, fwd.xhat) / batch;
  double l1 = 0.0;
  std::vector<double> partial(fwd.f.rows, 0.0);
  for (size_t i = 0; i < fwd.f.rows; ++i) {
    const double* fi = fwd.f.row(i);
    double s = 0.0;
    for (size_t h = 0; h < fwd.f.cols; ++h) s += fi[h];  // f >= 0
    partial[i] = s;
  }
  for (double p : partial) l1 += p;
  loss.l1 = lambda * l1 / batch;
  loss.total = loss.recon + loss.l1;
  return loss;
}

SaeLoss sae_loss(const SaeModel& m, const Matrix& x, double lambda) {
  return sae_loss_from_forward(x, sae_forward(m, x), lambda);
}

SaeGrads sae_grad(const SaeModel& m, const Matrix& x, double lambda) {
  if (lambda < 0.0) throw UsageError("lambda must be nonnegative");
  const SaeForward fwd = sae_forward(m, x);
  const size_t batch = x.rows;
  const double inv_b = 1.0 / static_cast<double>(batch);
  const int64_t n = static_cast<int64_t>(batch);

  SaeGrads g;
  g.loss = sae_loss_from_forward(x, fwd, lambda);

  // d loss / d xhat
  Matrix gxhat(batch, m.input_dim);
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) {
    const size_t ii = static_cast<size_t>(i);
    const double* xi = x.row(ii);
    const double* xh = fwd.xhat.row(ii);
    double* gi = gxhat.row(ii);
    for (size_t j = 0; j < m.input_dim; ++j) gi[j] = 2.0 * inv_b * (xh[j] - xi[j]);
  }

  g.w_dec = Matrix(m.hidden_dim, m.input_dim);
  kernels::gemm_tn(fwd.f, gxhat, g.w_dec);

  // d loss / d z: decoder backprop plus the L1 term, gated by active units
  Matrix gz(batch, m.hidden_dim);
  kernels::gemm_nt(gxhat, m.w_dec, gz);
  const double l1_grad = lambda * inv_b;
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) {
    const size_t ii = static_cast<size_t>(i);
    const double* zi = fwd.z.row(ii);
    double* gi = gz.row(ii);
    for (size_t h = 0; h < m.hidden_dim; ++h) {
      gi[h] = zi[h] > 0.0 ? gi[h] + l1_grad : 0.0;
    }
  }

  g.w_enc = Matrix(m.input_dim, m.hidden_dim);
  kernels::gemm_tn(fwd.xc, gz, g.w_enc);
  g.b_enc = kernels::col_sums(gz);

  Matrix gxc(batch, m.input_dim);
  kernels::gemm_nt(gz, m.w_enc, gxc);
  const std::vector<double> sum_gxhat = kernels::col_sums(gxhat);
  const std::vector<double> sum_gxc = kernels::col_sums(gxc);
  g.b_dec.resize(m.input_dim);
  for (size_t j = 0; j < m.input_dim; ++j) g.b_dec[j] = sum_gxhat[j] - sum_gxc[j];
  return g;
}

void adam_step(std::vector<double>& params, const std::vector<double>& grads,
               AdamState& state, const AdamConfig& cfg) {
  if (params.size() != grads.size() || params.size() != state.m.size() ||
      params.size() != state.v.size())
    throw UsageError("adam_step shape mismatch");
  check_finite(grads, "adam gradient");
  state.t += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  const int64_t n = static_cast<int64_t>(params.size());
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) {
    const size_t k = static_cast<size_t>(i);
    const double gk = grads[k];
    state.m[k] = cfg.beta1 * state.m[k] + (1.0 - cfg.beta1) * gk;
    state.v[k] = cfg.beta2 * state.v[k] + (1.0 - cfg.beta2) * gk * gk;
    const double mhat = state.m[k] / bc1;
    const double vhat = state.v[k] / bc2;
    params[k] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
  }
}

std::pair<SaeModel, SaeTrainStats> sae_train(const EmbeddingMatrix& data,
                                             const SaeTrainConfig& config) {
  if (config.batch_size < 1) throw UsageError("batch_size must be >= 1");
  if (data.n_rows < config.batch_size)
    throw DataError("dataset smaller than one batch");
  if (config.epochs < 1) throw UsageError("epochs must be >= 1");
  if (config.lambda < 0.0) throw UsageError("lambda must be nonnegative");

  SaeModel model = sae_init(data.n_dims, config.expansion, config.seed);
  model.lambda = config.lambda;

  std::vector<double> center;
  const std::vector<double>* center_ptr = nullptr;
  if (config.center_inputs) {
    center.assign(data.n_dims, 0.0);
    for (size_t i = 0; i < data.n_rows; ++i) {
      const float* r = data.row(i);
      for (size_t j = 0; j < data.n_dims; ++j) center[j] += static_cast<double>(r[j]);
    }
    for (double& v : center) v /= static_cast<double>(data.n_rows);
    center_ptr = &center;
  }

  const double variance_denom = total_variance_about_mean(data, center_ptr);
  if (variance_denom == 0.0)
    throw NumericError("zero-variance dataset: explained variance undefined");

  const AdamConfig adam{config.lr, config.beta1, config.beta2, config.eps};
  AdamState st_w_enc(model.w_enc.size());
  AdamState st_b_enc(model.b_enc.size());
  AdamState st_w_dec(model.w_dec.size());
  AdamState st_b_dec(model.b_dec.size());

  // Mixed so the shuffle stream is independent of the init stream.
  Rng shuffle_rng(config.seed + 0x9e3779b97f4a7c15ull);
  std::vector<size_t> order(data.n_rows);
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  SaeTrainStats stats;
  stats.config = config;
  stats.epochs.reserve(config.epochs);

  for (size_t epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    for (size_t start = 0, batch_idx = 0; start < data.n_rows;
         start += config.batch_size, ++batch_idx) {
      const size_t count = std::min(config.batch_size, data.n_rows - start);
      const Matrix x = gather_batch(data, order, start, count, center_ptr);
      SaeGrads g = sae_grad(model, x, config.lambda);
      if (!std::isfinite(g.loss.total))
        throw NumericError("non-finite loss at epoch " + std::to_string(epoch) +
                           ", batch " + std::to_string(batch_idx));
      adam_step(model.w_enc.data, g.w_enc.data, st_w_enc, adam);
      adam_step(model.b_enc, g.b_enc, st_b_enc, adam);
      adam_step(model.w_dec.data, g.w_dec.data, st_w_dec, adam);
      adam_step(model.b_dec, g.b_dec, st_b_dec, adam);
      if (config.normalize_decoder) normalize_decoder_rows(model.w_dec);
    }

    EvalAccum acc;
    eval_pass(model, data, config.batch_size, center_ptr, acc);
    const double n = static_cast<double>(data.n_rows);
    SaeEpochStats es;
    es.recon_loss = acc.recon_sq / n;
    es.l1_penalty = config.lambda * acc.l1_sum / n;
    es.explained_variance = 1.0 - acc.recon_sq / variance_denom;
    es.avg_l0 = acc.l0_sum / n;
    es.dead_fraction = dead_fraction_from(acc, model.hidden_dim);
    stats.epochs.push_back(es);
  }
  return {std::move(model), std::move(stats)};
}

double explained_variance(const Matrix& x, const Matrix& xhat) {
  if (!x.same_shape(xhat)) throw DataError("explained_variance shape mismatch");
  if (x.rows < 1) throw DataError("explained_variance on empty data");
  std::vector<double> mean(x.cols, 0.0);
  for (size_t i = 0; i < x.rows; ++i) {
    const double* r = x.row(i);
    for (size_t j = 0; j < x.cols; ++j) mean[j] += r[j];
  }
  for (double& v : mean) v /= static_cast<double>(x.rows);
  double denom = 0.0;
  for (size_t i = 0; i < x.rows; ++i) {
    const double* r = x.row(i);
    for (size_t j = 0; j < x.cols; ++j) {
      const double d = r[j] - mean[j];
      denom += d * d;
    }
  }
  if (denom == 0.0) throw NumericError("zero-variance input: explained variance undefined");
  return 1.0 - kernels::frob_sq_diff(x, xhat) / denom;
}

double dead_neuron_fraction(const SaeModel& m, const EmbeddingMatrix& x) {
  if (x.n_rows < 1) throw DataError("empty evaluation set");
  EvalAccum acc;
  eval_pass(m, x, 1024, nullptr, acc);
  return dead_fraction_from(acc, m.hidden_dim);
}

std::vector<SaeTrainStats> lambda_sweep(const EmbeddingMatrix& x,
                                        const SaeTrainConfig& config,
                                        const std::vector<double>& lambdas) {
  if (lambdas.size() < 2) throw UsageError("lambda sweep needs at least 2 values");
  std::vector<SaeTrainStats> out;
  out.reserve(lambdas.size());
  for (double lambda : lambdas) {
    SaeTrainConfig cfg = config;
    cfg.lambda = lambda;
    out.push_back(sae_train(x, cfg).second);
  }
  return out;
}

void write_sweep_csv(const std::vector<SaeTrainStats>& sweep, const std::string& path) {
  std::string out = "lambda,explained_variance,avg_l0,dead_fraction\n";
  for (const auto& run : sweep) {
    const SaeEpochStats& fin = run.final_epoch();
    out += fmt(run.config.lambda) + ',' + fmt(fin.explained_variance) + ',' +
           fmt(fin.avg_l0) + ',' + fmt(fin.dead_fraction) + '\n';
  }
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw DataError("cannot open file for writing: " + path);
  f << out;
  if (!f) throw DataError("write failed: " + path);
}

void write_train_stats_csv(const SaeTrainStats& stats, const std::string& path) {
  std::string out = "epoch,recon_loss,l1_penalty,explained_variance,avg_l0,dead_fraction\n";
  for (size_t e = 0; e < stats.epochs.size(); ++e) {
    const SaeEpochStats& s = stats.epochs[e];
    out += std::to_string(e) + ',' + fmt(s.recon_loss) + ',' + fmt(s.l1_penalty) + ',' +
           fmt(s.explained_variance) + ',' + fmt(s.avg_l0) + ',' + fmt(s.dead_fraction) +
           '\n';
  }
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw DataError("cannot open file for writing: " + path);
  f << out;
  if (!f) throw DataError("write failed: " + path);
}

EmbeddingMatrix feature_activations(const SaeModel& m, const EmbeddingMatrix& x) {
  std::vector<size_t> order(x.n_rows);
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::vector<float> values;
  values.reserve(x.n_rows * m.hidden_dim);
  constexpr size_t kBatch = 1024;
  for (size_t start = 0; start < x.n_rows; start += kBatch) {
    const size_t count = std::min(kBatch, x.n_rows - start);
    const Matrix batch = gather_batch(x, order, start, count, nullptr);
    const SaeForward fwd = sae_forward(m, batch);
    for (double v : fwd.f.data) values.push_back(static_cast<float>(v));
  }
  std::vector<std::string> labels(m.hidden_dim);
  for (size_t h = 0; h < m.hidden_dim; ++h) labels[h] = "f" + std::to_string(h);
  return validate_embedding_matrix(x.ids, std::move(values), m.hidden_dim,
                                   std::move(labels));
}

io::ModelArtifact sae_to_artifact(const SaeModel& m) {
  io::ModelArtifact art;
  art.kind = io::ModelArtifact::Kind::sae;
  art.meta["model"] = "sae";
  art.meta["input_dim"] = m.input_dim;
  art.meta["hidden_dim"] = m.hidden_dim;
  art.meta["expansion"] = m.expansion;
  art.meta["lambda"] = m.lambda;
  art.blocks.emplace_back("w_enc", m.w_enc.data);
  art.blocks.emplace_back("b_enc", m.b_enc);
  art.blocks.emplace_back("w_dec", m.w_dec.data);
  art.blocks.emplace_back("b_dec", m.b_dec);
  return art;
}

SaeModel sae_from_artifact(const io::ModelArtifact& artifact) {
  if (artifact.kind != io::ModelArtifact::Kind::sae)
    throw DataError("artifact does not hold an sae model");
  SaeModel m;
  m.input_dim = artifact.meta.at("input_dim").get<size_t>();
  m.hidden_dim = artifact.meta.at("hidden_dim").get<size_t>();
  m.expansion = artifact.meta.at("expansion").get<size_t>();
  m.lambda = artifact.meta.at("lambda").get<double>();
  if (m.input_dim < 1 || m.hidden_dim < 1)
    throw DataError("sae artifact has invalid dimensions");

  const auto take_matrix = [&](const std::string& name, size_t rows, size_t cols) {
    const std::vector<double>& data = artifact.block(name);
    if (data.size() != rows * cols)
      throw DataError("sae artifact block " + name + " has wrong size");
    Matrix out(rows, cols);
    out.data = data;
    return out;
  };
  m.w_enc = take_matrix("w_enc", m.input_dim, m.hidden_dim);
  m.w_dec = take_matrix("w_dec", m.hidden_dim, m.input_dim);
  m.b_enc = artifact.block("b_enc");
  m.b_dec = artifact.block("b_dec");
  if (m.b_enc.size() != m.hidden_dim || m.b_dec.size() != m.input_dim)
    throw DataError("sae artifact bias block has wrong size");
  return m;
}

}  // namespace emblens::sae
