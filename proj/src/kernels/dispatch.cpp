#include <atomic>
#include <cstdlib>
#include <string_view>

#include "spikefit/kernels.hpp"

namespace spikefit::kernels {

#if defined(SPIKEFIT_HAVE_AVX2)
const KernelTable& avx2_kernels();
#endif
#if defined(SPIKEFIT_HAVE_NEON)
const KernelTable& neon_kernels();
#endif

const KernelTable* avx2_table() {
#if defined(SPIKEFIT_HAVE_AVX2)
  static const bool supported = __builtin_cpu_supports("avx2");
  return supported ? &avx2_kernels() : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable* neon_table() {
#if defined(SPIKEFIT_HAVE_NEON)
  // Advanced SIMD is mandatory on AArch64.
  return &neon_kernels();
#else
  return nullptr;
#endif
}

namespace {

const KernelTable* table_for(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return &scalar_table();
    case Isa::avx2:
      return avx2_table();
    case Isa::neon:
      return neon_table();
  }
  return nullptr;
}

const KernelTable* initial_table() {
  if (const char* env = std::getenv("SPIKEFIT_SIMD")) {
    const std::string_view want{env};
    for (Isa isa : {Isa::scalar, Isa::avx2, Isa::neon}) {
      if (want == isa_name(isa)) {
        if (const KernelTable* t = table_for(isa)) return t;
      }
    }
  }
  if (const KernelTable* t = avx2_table()) return t;
  if (const KernelTable* t = neon_table()) return t;
  return &scalar_table();
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> table{initial_table()};
  return table;
}

}  // namespace

const KernelTable& active() { return *current().load(std::memory_order_acquire); }

bool select(Isa isa) {
  const KernelTable* t = table_for(isa);
  if (t == nullptr) return false;
  current().store(t, std::memory_order_release);
  return true;
}

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return "scalar";
    case Isa::avx2:
      return "avx2";
    case Isa::neon:
      return "neon";
  }
  return "unknown";
}

}  // namespace spikefit::kernels
