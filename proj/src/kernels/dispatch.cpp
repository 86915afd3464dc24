#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "respira/kernels.hpp"

namespace respira::simd {

extern const KernelTable kScalarKernels;
#if defined(RESPIRA_HAVE_AVX2)
extern const KernelTable kAvx2Kernels;
#endif
#if defined(RESPIRA_HAVE_NEON)
extern const KernelTable kNeonKernels;
#endif

namespace {

const KernelTable* builtin(Isa isa) {
  switch (isa) {
    case Isa::scalar: return &kScalarKernels;
    case Isa::avx2:
#if defined(RESPIRA_HAVE_AVX2)
      return &kAvx2Kernels;
#else
      return nullptr;
#endif
    case Isa::neon:
#if defined(RESPIRA_HAVE_NEON)
      return &kNeonKernels;
#else
      return nullptr;
#endif
  }
  return nullptr;
}

bool cpu_has(Isa isa) {
  switch (isa) {
    case Isa::scalar: return true;
    case Isa::avx2:
#if defined(RESPIRA_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::neon:
      // Advanced SIMD is mandatory on AArch64.
      return builtin(Isa::neon) != nullptr;
  }
  return false;
}

const KernelTable* pick_default() {
  if (const char* env = std::getenv("RESPIRA_SIMD")) {
    const std::string want(env);
    for (Isa isa : {Isa::scalar, Isa::avx2, Isa::neon}) {
      if (want == name(isa) && supported(isa)) return builtin(isa);
    }
  }
  for (Isa isa : {Isa::avx2, Isa::neon}) {
    if (supported(isa)) return builtin(isa);
  }
  return &kScalarKernels;
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> table{pick_default()};
  return table;
}

}  // namespace

std::string_view name(Isa isa) {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
    case Isa::neon: return "neon";
  }
  return "?";
}

bool supported(Isa isa) { return builtin(isa) != nullptr && cpu_has(isa); }

const KernelTable& table(Isa isa) {
  if (!supported(isa)) throw std::invalid_argument("kernel variant not available: " + std::string(name(isa)));
  return *builtin(isa);
}

const KernelTable& active() { return *current().load(std::memory_order_acquire); }

void select(Isa isa) { current().store(&table(isa), std::memory_order_release); }

}  // namespace respira::simd
