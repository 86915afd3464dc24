#pragma once

// Data-parallel inner loops used across the pipeline. Every kernel has a
// scalar reference implementation; SIMD variants (AVX2+FMA on x86-64, NEON on
// AArch64) are chosen once at runtime and must agree with the reference
// (exactly for the integer sums, to rounding for the floating-point ones).
//
// Set RESPIRA_SIMD=scalar|avx2|neon to force a variant.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace respira::simd {

enum class Isa { scalar, avx2, neon };

struct KernelTable {
  Isa isa;
  double (*dot)(const double* a, const double* b, std::size_t n);
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  std::uint64_t (*sum_u8)(const std::uint8_t* p, std::size_t n);
  std::uint64_t (*sum_u16)(const std::uint16_t* p, std::size_t n);
};

std::string_view name(Isa isa);
/// Built into this binary and supported by the running CPU.
bool supported(Isa isa);
/// Table for a specific variant. Throws std::invalid_argument if unsupported.
const KernelTable& table(Isa isa);
/// Variant used by the pipeline.
const KernelTable& active();
/// Overrides the runtime choice. Throws std::invalid_argument if unsupported.
void select(Isa isa);

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size() < b.size() ? a.size() : b.size());
}

/// y += alpha * x
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), x.size() < y.size() ? x.size() : y.size());
}

inline std::uint64_t sum(std::span<const std::uint8_t> p) { return active().sum_u8(p.data(), p.size()); }
inline std::uint64_t sum(std::span<const std::uint16_t> p) { return active().sum_u16(p.data(), p.size()); }

}  // namespace respira::simd
