#pragma once

#include <vector>

#include "emblens/matrix.hpp"

namespace emblens::kernels {

// Data-parallel kernels used by the probe solvers and the autoencoder.
//
// Every kernel computes each output element with a fixed, thread-independent
// summation order (parallelism is only across independent output elements),
// so the OpenMP versions are bit-identical to the serial reference for any
// thread count. The serial reference implementations live in
// kernels::serial and are kept for equivalence tests and benchmarks.

// c = a * b              a: n x k, b: k x m, c: n x m
void gemm_nn(const Matrix& a, const Matrix& b, Matrix& c);
// c = a^T * b            a: r x n, b: r x m, c: n x m
void gemm_tn(const Matrix& a, const Matrix& b, Matrix& c);
// c = a * b^T            a: n x k, b: m x k, c: n x m
void gemm_nt(const Matrix& a, const Matrix& b, Matrix& c);

// g = x^T x / rows       x: n x d, g: d x d
void gram(const Matrix& x, Matrix& g);

// a^T y                  a: n x d, y: n  ->  d
std::vector<double> gemv_t(const Matrix& a, const std::vector<double>& y);

// Column sums of a (length a.cols).
std::vector<double> col_sums(const Matrix& a);

// Per-column mean and population standard deviation (1/N variance).
void col_mean_std(const Matrix& x, std::vector<double>& mean, std::vector<double>& std);

// Frobenius norm squared of (a - b). Row partials combined in row order.
double frob_sq_diff(const Matrix& a, const Matrix& b);

namespace serial {
void gemm_nn(const Matrix& a, const Matrix& b, Matrix& c);
void gemm_tn(const Matrix& a, const Matrix& b, Matrix& c);
void gemm_nt(const Matrix& a, const Matrix& b, Matrix& c);
void gram(const Matrix& x, Matrix& g);
std::vector<double> gemv_t(const Matrix& a, const std::vector<double>& y);
std::vector<double> col_sums(const Matrix& a);
void col_mean_std(const Matrix& x, std::vector<double>& mean, std::vector<double>& std);
double frob_sq_diff(const Matrix& a, const Matrix& b);
}  // namespace serial

}  // namespace emblens::kernels
