#include "kernel_tables.hpp"

namespace taskqp::kernels::detail {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void reflect_scalar(double c, double s, double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double xi = x[i];
    const double yi = y[i];
    x[i] = c * xi + s * yi;
    y[i] = s * xi - c * yi;
  }
}

}  // namespace

const KernelTable scalar_table{Backend::scalar, &dot_scalar, &axpy_scalar,
                               &reflect_scalar};

}  // namespace taskqp::kernels::detail
