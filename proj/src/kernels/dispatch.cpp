#include "kernel_tables.hpp"
#include "taskqp/errors.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

namespace taskqp::kernels {
namespace {

bool cpu_has_avx2() {
#if defined(TASKQP_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* detect() {
  if (const char* env = std::getenv("TASKQP_KERNELS")) {
    const std::string requested(env);
    for (Backend b : {Backend::scalar, Backend::avx2, Backend::neon}) {
      if (requested == backend_name(b) && backend_supported(b)) return &table(b);
    }
  }
#if defined(TASKQP_HAVE_NEON)
  return &detail::neon_table;
#else
  if (cpu_has_avx2()) return &table(Backend::avx2);
  return &detail::scalar_table;
#endif
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> instance{detect()};
  return instance;
}

}  // namespace

std::string_view backend_name(Backend backend) {
  switch (backend) {
    case Backend::scalar:
      return "scalar";
    case Backend::avx2:
      return "avx2";
    case Backend::neon:
      return "neon";
  }
  return "unknown";
}

bool backend_supported(Backend backend) {
  switch (backend) {
    case Backend::scalar:
      return true;
    case Backend::avx2:
      return cpu_has_avx2();
    case Backend::neon:
#if defined(TASKQP_HAVE_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& table(Backend backend) {
  if (!backend_supported(backend)) {
    throw InvalidArgument("kernel backend '" + std::string(backend_name(backend)) +
                          "' is not available on this machine");
  }
  switch (backend) {
#if defined(TASKQP_HAVE_AVX2)
    case Backend::avx2:
      return detail::avx2_table;
#endif
#if defined(TASKQP_HAVE_NEON)
    case Backend::neon:
      return detail::neon_table;
#endif
    default:
      return detail::scalar_table;
  }
}

const KernelTable& active() { return *current().load(std::memory_order_acquire); }

void set_backend(Backend backend) {
  current().store(&table(backend), std::memory_order_release);
}

}  // namespace taskqp::kernels
