// AArch64 NEON variants. Two float64x2 accumulators hold lanes {0,1} and {2,3}
// so the reduction order matches the scalar reference.
#include <arm_neon.h>

#include "spikefit/kernels.hpp"

namespace spikefit::kernels {
namespace {

double dot_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t lo = vdupq_n_f64(0.0);
  float64x2_t hi = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    lo = vaddq_f64(lo, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
    hi = vaddq_f64(hi, vmulq_f64(vld1q_f64(a + i + 2), vld1q_f64(b + i + 2)));
  }
  double total = (vgetq_lane_f64(lo, 0) + vgetq_lane_f64(lo, 1)) +
                 (vgetq_lane_f64(hi, 0) + vgetq_lane_f64(hi, 1));
  for (; i < n; ++i) total += a[i] * b[i];
  return total;
}

double sq_dist_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t lo = vdupq_n_f64(0.0);
  float64x2_t hi = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const float64x2_t t0 = vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i));
    const float64x2_t t1 = vsubq_f64(vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
    lo = vaddq_f64(lo, vmulq_f64(t0, t0));
    hi = vaddq_f64(hi, vmulq_f64(t1, t1));
  }
  double total = (vgetq_lane_f64(lo, 0) + vgetq_lane_f64(lo, 1)) +
                 (vgetq_lane_f64(hi, 0) + vgetq_lane_f64(hi, 1));
  for (; i < n; ++i) {
    const double t = a[i] - b[i];
    total += t * t;
  }
  return total;
}

void syr_upper_neon(double* a, std::size_t d, double alpha, const double* y) {
  for (std::size_t r = 0; r < d; ++r) {
    const double s = alpha * y[r];
    const float64x2_t vs = vdupq_n_f64(s);
    double* row = a + r * d;
    std::size_t c = r;
    for (; c + 2 <= d; c += 2) {
      vst1q_f64(row + c, vaddq_f64(vld1q_f64(row + c), vmulq_f64(vs, vld1q_f64(y + c))));
    }
    for (; c < d; ++c) row[c] += s * y[c];
  }
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), vmulq_f64(va, vld1q_f64(x + i))));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace

const KernelTable& neon_kernels() {
  static const KernelTable table{Isa::neon, dot_neon, sq_dist_neon, syr_upper_neon, axpy_neon};
  return table;
}

}  // namespace spikefit::kernels
