#pragma once

#include "taskqp/kernels/kernels.hpp"

namespace taskqp::kernels::detail {

extern const KernelTable scalar_table;
#if defined(TASKQP_HAVE_AVX2)
extern const KernelTable avx2_table;
#endif
#if defined(TASKQP_HAVE_NEON)
extern const KernelTable neon_table;
#endif

}  // namespace taskqp::kernels::detail
