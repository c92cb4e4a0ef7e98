#pragma once

// Dense vector kernels used by the active-set solver's inner loops.
//
// Every kernel has a scalar reference implementation; SIMD variants (AVX2+FMA
// on x86-64, NEON on AArch64) are selected once at runtime from CPU feature
// detection. Setting TASKQP_KERNELS=scalar|avx2|neon in the environment
// overrides the choice. Variants agree with the scalar reference up to
// floating-point reassociation.

#include <cstddef>
#include <span>
#include <string_view>

namespace taskqp::kernels {

enum class Backend { scalar, avx2, neon };

struct KernelTable {
  Backend backend;
  /// sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  /// y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  /// In-place plane reflection of two columns:
  ///   x' = c x + s y,  y' = s x - c y
  void (*reflect)(double c, double s, double* x, double* y, std::size_t n);
};

std::string_view backend_name(Backend backend);

/// True when the backend was compiled in and the running CPU supports it.
bool backend_supported(Backend backend);

/// Table for a specific backend. Throws taskqp::InvalidArgument when the
/// backend is not supported on this machine.
const KernelTable& table(Backend backend);

/// Table currently used by the free functions below.
const KernelTable& active();

/// Overrides the runtime selection (process-wide). Throws when unsupported.
void set_backend(Backend backend);

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), x.size());
}

inline void reflect(double c, double s, std::span<double> x, std::span<double> y) {
  active().reflect(c, s, x.data(), y.data(), x.size());
}

}  // namespace taskqp::kernels
