#pragma once

// Data-parallel inner loops shared by every estimator.
//
// Each kernel has a scalar reference implementation and optional SIMD
// variants (AVX2 on x86-64, NEON on AArch64). All variants use the same
// four-lane blocked reduction order:
//
//   acc[j] += f(a[i + j], b[i + j])  for i = 0, 4, 8, ...; j = 0..3
//   total   = (acc[0] + acc[1]) + (acc[2] + acc[3])
//   total  += f(a[i], b[i])          for the tail
//
// so a SIMD variant returns bitwise the same value as the scalar one. Element-
// wise kernels (syr_upper, axpy) are trivially order independent. The build
// disables floating-point contraction so no variant fuses multiply-adds.

#include <cstddef>
#include <string_view>

namespace spikefit::kernels {

enum class Isa { scalar, avx2, neon };

struct KernelTable {
  Isa isa;
  // sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // sum_i (a[i] - b[i])^2
  double (*sq_dist)(const double* a, const double* b, std::size_t n);
  // Upper triangle (c >= r) of the row-major d x d matrix a += alpha * y * y^T.
  // Row r uses s = alpha * y[r] and adds s * y[c].
  void (*syr_upper)(double* a, std::size_t d, double alpha, const double* y);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
};

const KernelTable& scalar_table();
// nullptr when the variant was not compiled in or the CPU lacks it.
const KernelTable* avx2_table();
const KernelTable* neon_table();

// The table used by the library. Chosen once at first use: the best variant
// the CPU supports, unless SPIKEFIT_SIMD=scalar|avx2|neon says otherwise.
const KernelTable& active();

// Overrides the active table (tests, benchmarks). Returns false and leaves the
// selection unchanged if the variant is unavailable.
bool select(Isa isa);

std::string_view isa_name(Isa isa);

inline double dot(const double* a, const double* b, std::size_t n) {
  return active().dot(a, b, n);
}
inline double sq_norm(const double* a, std::size_t n) { return active().dot(a, a, n); }
inline double sq_dist(const double* a, const double* b, std::size_t n) {
  return active().sq_dist(a, b, n);
}
inline void syr_upper(double* a, std::size_t d, double alpha, const double* y) {
  active().syr_upper(a, d, alpha, y);
}
inline void axpy(double alpha, const double* x, double* y, std::size_t n) {
  active().axpy(alpha, x, y, n);
}

}  // namespace spikefit::kernels
