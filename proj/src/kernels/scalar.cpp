#include "respira/kernels.hpp"

namespace respira::simd {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

std::uint64_t sum_u8_scalar(const std::uint8_t* p, std::size_t n) {
  std::uint64_t acc = 0;
  for (std::size_t i = 0; i < n; ++i) acc += p[i];
  return acc;
}

std::uint64_t sum_u16_scalar(const std::uint16_t* p, std::size_t n) {
  std::uint64_t acc = 0;
  for (std::size_t i = 0; i < n; ++i) acc += p[i];
  return acc;
}

}  // namespace

extern const KernelTable kScalarKernels{Isa::scalar, dot_scalar, axpy_scalar, sum_u8_scalar,
                                        sum_u16_scalar};

}  // namespace respira::simd
