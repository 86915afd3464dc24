#include <arm_neon.h>

#include "respira/kernels.hpp"

namespace respira::simd {
namespace {

double dot_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  double acc = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

std::uint64_t sum_u8_neon(const std::uint8_t* p, std::size_t n) {
  uint64x2_t acc = vdupq_n_u64(0);
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    acc = vpadalq_u32(acc, vpaddlq_u16(vpaddlq_u8(vld1q_u8(p + i))));
  }
  std::uint64_t total = vaddvq_u64(acc);
  for (; i < n; ++i) total += p[i];
  return total;
}

std::uint64_t sum_u16_neon(const std::uint16_t* p, std::size_t n) {
  uint64x2_t acc = vdupq_n_u64(0);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) acc = vpadalq_u32(acc, vpaddlq_u16(vld1q_u16(p + i)));
  std::uint64_t total = vaddvq_u64(acc);
  for (; i < n; ++i) total += p[i];
  return total;
}

}  // namespace

extern const KernelTable kNeonKernels{Isa::neon, dot_neon, axpy_neon, sum_u8_neon, sum_u16_neon};

}  // namespace respira::simd
