#include "spikefit/kernels.hpp"

namespace spikefit::kernels {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double acc0 = 0.0, acc1 = 0.0, acc2 = 0.0, acc3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 += a[i] * b[i];
    acc1 += a[i + 1] * b[i + 1];
    acc2 += a[i + 2] * b[i + 2];
    acc3 += a[i + 3] * b[i + 3];
  }
  double total = (acc0 + acc1) + (acc2 + acc3);
  for (; i < n; ++i) total += a[i] * b[i];
  return total;
}

double sq_dist_scalar(const double* a, const double* b, std::size_t n) {
  double acc0 = 0.0, acc1 = 0.0, acc2 = 0.0, acc3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const double t0 = a[i] - b[i];
    const double t1 = a[i + 1] - b[i + 1];
    const double t2 = a[i + 2] - b[i + 2];
    const double t3 = a[i + 3] - b[i + 3];
    acc0 += t0 * t0;
    acc1 += t1 * t1;
    acc2 += t2 * t2;
    acc3 += t3 * t3;
  }
  double total = (acc0 + acc1) + (acc2 + acc3);
  for (; i < n; ++i) {
    const double t = a[i] - b[i];
    total += t * t;
  }
  return total;
}

void syr_upper_scalar(double* a, std::size_t d, double alpha, const double* y) {
  for (std::size_t r = 0; r < d; ++r) {
    const double s = alpha * y[r];
    double* row = a + r * d;
    for (std::size_t c = r; c < d; ++c) row[c] += s * y[c];
  }
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{Isa::scalar, dot_scalar, sq_dist_scalar, syr_upper_scalar,
                                 axpy_scalar};
  return table;
}

}  // namespace spikefit::kernels
