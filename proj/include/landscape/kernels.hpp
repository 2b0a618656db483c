#pragma once
// Dense inner-loop kernels. Every kernel has a scalar reference version and,
// on x86-64 hosts whose CPU reports AVX2+FMA, a vectorized variant. The
// variant is picked once at first use; set LANDSCAPE_KERNELS=scalar to force
// the reference path.

#include <cstddef>
#include <string_view>

namespace landscape::kernels {

struct KernelTable {
  std::string_view isa;
  // sum_i x[i] * y[i]
  double (*dot)(const double* x, const double* y, std::size_t n);
  // sum_i x[i]^2
  double (*sum_squares)(const double* x, std::size_t n);
  // sum_i (x[i] - y[i])^2
  double (*sum_sq_diff)(const double* x, const double* y, std::size_t n);
  // y += a * x
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  // (x, y) <- (c*x - s*y, s*x + c*y)
  void (*rotate)(double* x, double* y, std::size_t n, double c, double s);
  // C (m x n) = A (m x k) * B (k x n), all row-major, C overwritten
  void (*gemm)(std::size_t m, std::size_t n, std::size_t k, const double* a,
               const double* b, double* c);
};

const KernelTable& scalar_table() noexcept;

/// nullptr when the variant was not compiled in or the CPU lacks the ISA.
const KernelTable* avx2_table() noexcept;

/// The table used by the library.
const KernelTable& active() noexcept;

inline double dot(const double* x, const double* y, std::size_t n) {
  return active().dot(x, y, n);
}
inline double sum_squares(const double* x, std::size_t n) {
  return active().sum_squares(x, n);
}
inline double sum_sq_diff(const double* x, const double* y, std::size_t n) {
  return active().sum_sq_diff(x, y, n);
}
inline void axpy(double a, const double* x, double* y, std::size_t n) {
  active().axpy(a, x, y, n);
}
inline void rotate(double* x, double* y, std::size_t n, double c, double s) {
  active().rotate(x, y, n, c, s);
}
inline void gemm(std::size_t m, std::size_t n, std::size_t k, const double* a,
                 const double* b, double* c) {
  active().gemm(m, n, k, a, b, c);
}

namespace detail {
const KernelTable& avx2_table_unchecked() noexcept;
}

}  // namespace landscape::kernels
