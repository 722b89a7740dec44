// Benchmarks the OpenMP kernels against the serial reference and verifies
// that both produce bit-identical results on the benchmark inputs.
//
// Usage: bench_kernels [threads] [repeats]

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <string>

#include "emblens/kernels.hpp"
#include "emblens/rng.hpp"

using namespace emblens;

namespace {

Matrix random_matrix(size_t r, size_t c, Rng& rng) {
  Matrix m(r, c);
  for (double& v : m.data) v = rng.normal();
  return m;
}

double time_ms(const std::function<void()>& fn, int repeats) {
  fn();  // warm-up
  const auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < repeats; ++i) fn();
  const auto elapsed = std::chrono::steady_clock::now() - start;
  return std::chrono::duration<double, std::milli>(elapsed).count() / repeats;
}

struct Case {
  const char* name;
  std::function<void()> serial;
  std::function<void()> omp;
  std::function<bool()> identical;
};

}  // namespace

int main(int argc, char** argv) {
  const int threads = argc > 1 ? std::atoi(argv[1]) : omp_get_num_procs();
  const int repeats = argc > 2 ? std::atoi(argv[2]) : 5;

  Rng rng(20240518);
  // shapes drawn from the artifact's hot paths: sae batches and probe grams
  const Matrix batch = random_matrix(256, 64, rng);      // minibatch
  const Matrix w_enc = random_matrix(64, 512, rng);      // encoder
  const Matrix acts = random_matrix(256, 512, rng);      // hidden activations
  const Matrix w_dec = random_matrix(512, 64, rng);      // decoder
  const Matrix tall = random_matrix(10000, 384, rng);    // probe design

  Matrix out_a(256, 512), out_b(256, 512);
  Matrix dec_a(512, 64), dec_b(512, 64);
  Matrix nt_a(256, 512), nt_b(256, 512);
  Matrix gram_a(384, 384), gram_b(384, 384);

  Case cases[] = {
      {"gemm_nn 256x64 * 64x512",
       [&] { kernels::serial::gemm_nn(batch, w_enc, out_a); },
       [&] { kernels::gemm_nn(batch, w_enc, out_b); },
       [&] { return out_a == out_b; }},
      {"gemm_tn (256x512)^T grad",
       [&] { kernels::serial::gemm_tn(acts, batch, dec_a); },
       [&] { kernels::gemm_tn(acts, batch, dec_b); },
       [&] { return dec_a == dec_b; }},
      {"gemm_nt 256x64 * (512x64)^T",
       [&] { kernels::serial::gemm_nt(batch, w_dec, nt_a); },
       [&] { kernels::gemm_nt(batch, w_dec, nt_b); },
       [&] { return nt_a == nt_b; }},
      {"gram 10000x384",
       [&] { kernels::serial::gram(tall, gram_a); },
       [&] { kernels::gram(tall, gram_b); },
       [&] { return gram_a == gram_b; }},
  };

  std::printf("threads=%d repeats=%d\n", threads, repeats);
  std::printf("%-28s %12s %12s %9s %10s\n", "kernel", "serial ms", "omp ms", "speedup",
              "identical");
  bool all_identical = true;
  for (Case& c : cases) {
    omp_set_num_threads(1);
    const double serial_ms = time_ms(c.serial, repeats);
    omp_set_num_threads(threads);
    const double omp_ms = time_ms(c.omp, repeats);
    const bool same = c.identical();
    all_identical = all_identical && same;
    std::printf("%-28s %12.3f %12.3f %8.2fx %10s\n", c.name, serial_ms, omp_ms,
                serial_ms / omp_ms, same ? "yes" : "NO");
  }
  if (!all_identical) {
    std::fprintf(stderr, "kernel outputs diverged from the serial reference\n");
    return 1;
  }
  return 0;
}
