// Compiled with -mavx2; only reached after a runtime CPU check.
#include <immintrin.h>

#include "spikefit/kernels.hpp"

namespace spikefit::kernels {
namespace {

inline double reduce_lanes(__m256d acc) {
  alignas(32) double lane[4];
  _mm256_store_pd(lane, acc);
  return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d va = _mm256_loadu_pd(a + i);
    const __m256d vb = _mm256_loadu_pd(b + i);
    acc = _mm256_add_pd(acc, _mm256_mul_pd(va, vb));
  }
  double total = reduce_lanes(acc);
  for (; i < n; ++i) total += a[i] * b[i];
  return total;
}

double sq_dist_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d t = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc = _mm256_add_pd(acc, _mm256_mul_pd(t, t));
  }
  double total = reduce_lanes(acc);
  for (; i < n; ++i) {
    const double t = a[i] - b[i];
    total += t * t;
  }
  return total;
}

void syr_upper_avx2(double* a, std::size_t d, double alpha, const double* y) {
  for (std::size_t r = 0; r < d; ++r) {
    const double s = alpha * y[r];
    const __m256d vs = _mm256_set1_pd(s);
    double* row = a + r * d;
    std::size_t c = r;
    for (; c + 4 <= d; c += 4) {
      const __m256d prod = _mm256_mul_pd(vs, _mm256_loadu_pd(y + c));
      _mm256_storeu_pd(row + c, _mm256_add_pd(_mm256_loadu_pd(row + c), prod));
    }
    for (; c < d; ++c) row[c] += s * y[c];
  }
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d prod = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
    _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), prod));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace

const KernelTable& avx2_kernels() {
  static const KernelTable table{Isa::avx2, dot_avx2, sq_dist_avx2, syr_upper_avx2, axpy_avx2};
  return table;
}

}  // namespace spikefit::kernels
