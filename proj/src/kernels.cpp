#include "emblens/kernels.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace emblens::kernels {

namespace {

void check(bool ok, const char* what) {
  if (!ok) throw std::logic_error(std::string("kernel shape mismatch: ") + what);
}

}  // namespace

// ---------------------------------------------------------------------------
// Serial reference implementations.
// ---------------------------------------------------------------------------

namespace serial {

void gemm_nn(const Matrix& a, const Matrix& b, Matrix& c) {
  check(a.cols == b.rows && c.rows == a.rows && c.cols == b.cols, "gemm_nn");
  const size_t n = a.rows, k = a.cols, m = b.cols;
  for (size_t i = 0; i < n; ++i) {
    double* ci = c.row(i);
    for (size_t j = 0; j < m; ++j) ci[j] = 0.0;
    const double* ai = a.row(i);
    for (size_t l = 0; l < k; ++l) {
      const double ail = ai[l];
      const double* bl = b.row(l);
      for (size_t j = 0; j < m; ++j) ci[j] += ail * bl[j];
    }
  }
}

void gemm_tn(const Matrix& a, const Matrix& b, Matrix& c) {
  check(a.rows == b.rows && c.rows == a.cols && c.cols == b.cols, "gemm_tn");
  const size_t r = a.rows, n = a.cols, m = b.cols;
  for (size_t i = 0; i < n; ++i) {
    double* ci = c.row(i);
    for (size_t j = 0; j < m; ++j) ci[j] = 0.0;
    for (size_t l = 0; l < r; ++l) {
      const double ali = a(l, i);
      const double* bl = b.row(l);
      for (size_t j = 0; j < m; ++j) ci[j] += ali * bl[j];
    }
  }
}

void gemm_nt(const Matrix& a, const Matrix& b, Matrix& c) {
  check(a.cols == b.cols && c.rows == a.rows && c.cols == b.rows, "gemm_nt");
  const size_t n = a.rows, k = a.cols, m = b.rows;
  for (size_t i = 0; i < n; ++i) {
    const double* ai = a.row(i);
    double* ci = c.row(i);
    for (size_t j = 0; j < m; ++j) {
      const double* bj = b.row(j);
      double s = 0.0;
      for (size_t l = 0; l < k; ++l) s += ai[l] * bj[l];
      ci[j] = s;
    }
  }
}

void gram(const Matrix& x, Matrix& g) {
  check(g.rows == x.cols && g.cols == x.cols, "gram");
  gemm_tn(x, x, g);
  const double inv_n = 1.0 / static_cast<double>(x.rows);
  for (double& v : g.data) v *= inv_n;
}

std::vector<double> gemv_t(const Matrix& a, const std::vector<double>& y) {
  check(a.rows == y.size(), "gemv_t");
  std::vector<double> out(a.cols, 0.0);
  for (size_t j = 0; j < a.cols; ++j) {
    double s = 0.0;
    for (size_t i = 0; i < a.rows; ++i) s += a(i, j) * y[i];
    out[j] = s;
  }
  return out;
}

std::vector<double> col_sums(const Matrix& a) {
  std::vector<double> out(a.cols, 0.0);
  for (size_t j = 0; j < a.cols; ++j) {
    double s = 0.0;
    for (size_t i = 0; i < a.rows; ++i) s += a(i, j);
    out[j] = s;
  }
  return out;
}

void col_mean_std(const Matrix& x, std::vector<double>& mean, std::vector<double>& std) {
  const size_t n = x.rows, d = x.cols;
  mean.assign(d, 0.0);
  std.assign(d, 0.0);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (size_t j = 0; j < d; ++j) {
    double s = 0.0;
    for (size_t i = 0; i < n; ++i) s += x(i, j);
    const double m = s * inv_n;
    double v = 0.0;
    for (size_t i = 0; i < n; ++i) {
      const double dlt = x(i, j) - m;
      v += dlt * dlt;
    }
    mean[j] = m;
    std[j] = std::sqrt(v * inv_n);
  }
}

double frob_sq_diff(const Matrix& a, const Matrix& b) {
  check(a.same_shape(b), "frob_sq_diff");
  std::vector<double> partial(a.rows, 0.0);
  for (size_t i = 0; i < a.rows; ++i) {
    const double* ai = a.row(i);
    const double* bi = b.row(i);
    double s = 0.0;
    for (size_t j = 0; j < a.cols; ++j) {
      const double d = ai[j] - bi[j];
      s += d * d;
    }
    partial[i] = s;
  }
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

}  // namespace serial

// ---------------------------------------------------------------------------
// OpenMP versions. Same per-element summation order as the serial reference.
// ---------------------------------------------------------------------------

void gemm_nn(const Matrix& a, const Matrix& b, Matrix& c) {
  check(a.cols == b.rows && c.rows == a.rows && c.cols == b.cols, "gemm_nn");
  const int64_t n = static_cast<int64_t>(a.rows);
  const size_t k = a.cols, m = b.cols;
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) {
    double* ci = c.row(static_cast<size_t>(i));
    for (size_t j = 0; j < m; ++j) ci[j] = 0.0;
    const double* ai = a.row(static_cast<size_t>(i));
    for (size_t l = 0; l < k; ++l) {
      const double ail = ai[l];
      const double* bl = b.row(l);
      for (size_t j = 0; j < m; ++j) ci[j] += ail * bl[j];
    }
  }
}

void gemm_tn(const Matrix& a, const Matrix& b, Matrix& c) {
  check(a.rows == b.rows && c.rows == a.cols && c.cols == b.cols, "gemm_tn");
  const size_t r = a.rows, m = b.cols;
  const int64_t n = static_cast<int64_t>(a.cols);
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) {
    double* ci = c.row(static_cast<size_t>(i));
    for (size_t j = 0; j < m; ++j) ci[j] = 0.0;
    for (size_t l = 0; l < r; ++l) {
      const double ali = a(l, static_cast<size_t>(i));
      const double* bl = b.row(l);
      for (size_t j = 0; j < m; ++j) ci[j] += ali * bl[j];
    }
  }
}

void gemm_nt(const Matrix& a, const Matrix& b, Matrix& c) {
  check(a.cols == b.cols && c.rows == a.rows && c.cols == b.rows, "gemm_nt");
  const int64_t n = static_cast<int64_t>(a.rows);
  const size_t k = a.cols, m = b.rows;
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) {
    const double* ai = a.row(static_cast<size_t>(i));
    double* ci = c.row(static_cast<size_t>(i));
    for (size_t j = 0; j < m; ++j) {
      const double* bj = b.row(j);
      double s = 0.0;
      for (size_t l = 0; l < k; ++l) s += ai[l] * bj[l];
      ci[j] = s;
    }
  }
}

void gram(const Matrix& x, Matrix& g) {
  check(g.rows == x.cols && g.cols == x.cols, "gram");
  gemm_tn(x, x, g);
  const double inv_n = 1.0 / static_cast<double>(x.rows);
  const int64_t total = static_cast<int64_t>(g.size());
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < total; ++i) g.data[static_cast<size_t>(i)] *= inv_n;
}

std::vector<double> gemv_t(const Matrix& a, const std::vector<double>& y) {
  check(a.rows == y.size(), "gemv_t");
  std::vector<double> out(a.cols, 0.0);
  const int64_t d = static_cast<int64_t>(a.cols);
#pragma omp parallel for schedule(static)
  for (int64_t j = 0; j < d; ++j) {
    double s = 0.0;
    for (size_t i = 0; i < a.rows; ++i) s += a(i, static_cast<size_t>(j)) * y[i];
    out[static_cast<size_t>(j)] = s;
  }
  return out;
}

std::vector<double> col_sums(const Matrix& a) {
  std::vector<double> out(a.cols, 0.0);
  const int64_t d = static_cast<int64_t>(a.cols);
#pragma omp parallel for schedule(static)
  for (int64_t j = 0; j < d; ++j) {
    double s = 0.0;
    for (size_t i = 0; i < a.rows; ++i) s += a(i, static_cast<size_t>(j));
    out[static_cast<size_t>(j)] = s;
  }
  return out;
}

void col_mean_std(const Matrix& x, std::vector<double>& mean, std::vector<double>& std) {
  const size_t n = x.rows;
  const int64_t d = static_cast<int64_t>(x.cols);
  mean.assign(x.cols, 0.0);
  std.assign(x.cols, 0.0);
  const double inv_n = 1.0 / static_cast<double>(n);
#pragma omp parallel for schedule(static)
  for (int64_t j = 0; j < d; ++j) {
    const size_t jj = static_cast<size_t>(j);
    double s = 0.0;
    for (size_t i = 0; i < n; ++i) s += x(i, jj);
    const double m = s * inv_n;
    double v = 0.0;
    for (size_t i = 0; i < n; ++i) {
      const double dlt = x(i, jj) - m;
      v += dlt * dlt;
    }
    mean[jj] = m;
    std[jj] = std::sqrt(v * inv_n);
  }
}

double frob_sq_diff(const Matrix& a, const Matrix& b) {
  check(a.same_shape(b), "frob_sq_diff");
  std::vector<double> partial(a.rows, 0.0);
  const int64_t n = static_cast<int64_t>(a.rows);
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) {
    const double* ai = a.row(static_cast<size_t>(i));
    const double* bi = b.row(static_cast<size_t>(i));
    double s = 0.0;
    for (size_t j = 0; j < a.cols; ++j) {
      const double d = ai[j] - bi[j];
      s += d * d;
    }
    partial[static_cast<size_t>(i)] = s;
  }
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

}  // namespace emblens::kernels
