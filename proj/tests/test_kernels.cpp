#include <omp.h>

#include "doctest.h"
#include "emblens/kernels.hpp"
#include "emblens/rng.hpp"

using namespace emblens;

namespace {

Matrix random_matrix(size_t r, size_t c, Rng& rng) {
  Matrix m(r, c);
  for (double& v : m.data) v = rng.normal();
  return m;
}

std::vector<double> random_vec(size_t n, Rng& rng) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.normal();
  return v;
}

}  // namespace

// The OpenMP kernels must be bit-identical to the serial reference for any
// thread count; everything downstream relies on that for determinism.
TEST_CASE("omp kernels match the serial reference bit-exactly") {
  Rng rng(1234);
  const Matrix a = random_matrix(33, 17, rng);
  const Matrix b = random_matrix(17, 29, rng);
  const Matrix c = random_matrix(33, 17, rng);
  const Matrix wide = random_matrix(33, 29, rng);
  const std::vector<double> y = random_vec(33, rng);

  Matrix ref_nn(33, 29), ref_tn(17, 17), ref_nt(33, 33), ref_gram(17, 17);
  kernels::serial::gemm_nn(a, b, ref_nn);
  kernels::serial::gemm_tn(a, c, ref_tn);
  kernels::serial::gemm_nt(a, c, ref_nt);
  kernels::serial::gram(a, ref_gram);
  const auto ref_gemv = kernels::serial::gemv_t(a, y);
  const auto ref_sums = kernels::serial::col_sums(a);
  const double ref_frob = kernels::serial::frob_sq_diff(a, c);
  std::vector<double> ref_mean, ref_std;
  kernels::serial::col_mean_std(a, ref_mean, ref_std);

  const int saved = omp_get_max_threads();
  for (int threads : {1, 2, 3, 7}) {
    CAPTURE(threads);
    omp_set_num_threads(threads);
    Matrix out_nn(33, 29), out_tn(17, 17), out_nt(33, 33), out_gram(17, 17);
    kernels::gemm_nn(a, b, out_nn);
    kernels::gemm_tn(a, c, out_tn);
    kernels::gemm_nt(a, c, out_nt);
    kernels::gram(a, out_gram);
    CHECK(out_nn == ref_nn);
    CHECK(out_tn == ref_tn);
    CHECK(out_nt == ref_nt);
    CHECK(out_gram == ref_gram);
    CHECK(kernels::gemv_t(a, y) == ref_gemv);
    CHECK(kernels::col_sums(a) == ref_sums);
    CHECK(kernels::frob_sq_diff(a, c) == ref_frob);
    std::vector<double> mean, sd;
    kernels::col_mean_std(a, mean, sd);
    CHECK(mean == ref_mean);
    CHECK(sd == ref_std);
    (void)wide;
  }
  omp_set_num_threads(saved);
}

TEST_CASE("gemm_nn against a hand-computed product") {
  Matrix a(2, 2), b(2, 2), c(2, 2);
  a(0, 0) = 1; a(0, 1) = 2; a(1, 0) = 3; a(1, 1) = 4;
  b(0, 0) = 5; b(0, 1) = 6; b(1, 0) = 7; b(1, 1) = 8;
  kernels::gemm_nn(a, b, c);
  CHECK(c(0, 0) == 19);
  CHECK(c(0, 1) == 22);
  CHECK(c(1, 0) == 43);
  CHECK(c(1, 1) == 50);
}

TEST_CASE("gemm transposed variants agree with explicit transposition") {
  Rng rng(77);
  const Matrix a = random_matrix(11, 5, rng);
  const Matrix b = random_matrix(11, 7, rng);

  Matrix at(5, 11);
  for (size_t i = 0; i < a.rows; ++i)
    for (size_t j = 0; j < a.cols; ++j) at(j, i) = a(i, j);

  Matrix via_tn(5, 7), via_nn(5, 7);
  kernels::gemm_tn(a, b, via_tn);
  kernels::gemm_nn(at, b, via_nn);
  for (size_t i = 0; i < via_tn.size(); ++i)
    CHECK(via_tn.data[i] == doctest::Approx(via_nn.data[i]).epsilon(1e-14));

  Matrix via_nt(11, 11), direct(11, 11);
  kernels::gemm_nt(a, a, via_nt);
  for (size_t i = 0; i < 11; ++i)
    for (size_t j = 0; j < 11; ++j) {
      double s = 0.0;
      for (size_t l = 0; l < 5; ++l) s += a(i, l) * a(j, l);
      direct(i, j) = s;
    }
  for (size_t i = 0; i < via_nt.size(); ++i)
    CHECK(via_nt.data[i] == doctest::Approx(direct.data[i]).epsilon(1e-14));
}

TEST_CASE("col_mean_std computes population statistics") {
  Matrix x(4, 1);
  x(0, 0) = 1; x(1, 0) = 2; x(2, 0) = 3; x(3, 0) = 4;
  std::vector<double> mean, sd;
  kernels::col_mean_std(x, mean, sd);
  CHECK(mean[0] == doctest::Approx(2.5));
  CHECK(sd[0] == doctest::Approx(std::sqrt(1.25)));
}
