#include "taskqp/errors.hpp"
#include "taskqp/kernels/kernels.hpp"
#include "taskqp/solver.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <vector>

namespace taskqp {
namespace {

using kernels::Backend;
using testing::Rng;

std::vector<Backend> supported_backends() {
  std::vector<Backend> out;
  for (Backend b : {Backend::scalar, Backend::avx2, Backend::neon}) {
    if (kernels::backend_supported(b)) out.push_back(b);
  }
  return out;
}

// Restores the process-wide backend after a test switches it.
class BackendGuard {
 public:
  BackendGuard() : saved_(kernels::active().backend) {}
  ~BackendGuard() { kernels::set_backend(saved_); }

 private:
  Backend saved_;
};

TEST(Kernels, ScalarAlwaysSupported) {
  EXPECT_TRUE(kernels::backend_supported(Backend::scalar));
  EXPECT_EQ(kernels::table(Backend::scalar).backend, Backend::scalar);
  EXPECT_EQ(kernels::backend_name(Backend::avx2), "avx2");
}

TEST(Kernels, UnsupportedBackendThrows) {
  for (Backend b : {Backend::avx2, Backend::neon}) {
    if (!kernels::backend_supported(b)) EXPECT_THROW(kernels::table(b), InvalidArgument);
  }
}

TEST(Kernels, VariantsMatchScalarReference) {
  Rng rng(11);
  const kernels::KernelTable& ref = kernels::table(Backend::scalar);
  for (Backend b : supported_backends()) {
    const kernels::KernelTable& k = kernels::table(b);
    for (std::size_t n = 0; n <= 67; ++n) {
      const Eigen::VectorXd x = rng.vector(static_cast<Eigen::Index>(n));
      const Eigen::VectorXd y = rng.vector(static_cast<Eigen::Index>(n));
      const double scale = x.cwiseAbs().sum() * y.cwiseAbs().sum() + 1.0;
      EXPECT_NEAR(k.dot(x.data(), y.data(), n), ref.dot(x.data(), y.data(), n), 1e-14 * scale)
          << kernels::backend_name(b) << " n=" << n;

      Eigen::VectorXd y1 = y, y2 = y;
      k.axpy(0.37, x.data(), y1.data(), n);
      ref.axpy(0.37, x.data(), y2.data(), n);
      EXPECT_LE(testing::max_abs(y1 - y2), 1e-15) << kernels::backend_name(b) << " n=" << n;

      Eigen::VectorXd a1 = x, b1 = y, a2 = x, b2 = y;
      k.reflect(0.6, 0.8, a1.data(), b1.data(), n);
      ref.reflect(0.6, 0.8, a2.data(), b2.data(), n);
      EXPECT_LE(testing::max_abs(a1 - a2), 1e-15);
      EXPECT_LE(testing::max_abs(b1 - b2), 1e-15);
    }
  }
}

TEST(Kernels, ScalarMatchesEigen) {
  Rng rng(12);
  const kernels::KernelTable& ref = kernels::table(Backend::scalar);
  const Eigen::VectorXd x = rng.vector(29);
  const Eigen::VectorXd y = rng.vector(29);
  EXPECT_NEAR(ref.dot(x.data(), y.data(), 29), x.dot(y), 1e-14);
  Eigen::VectorXd a = x, b = y;
  ref.reflect(0.6, 0.8, a.data(), b.data(), 29);
  EXPECT_LE(testing::max_abs(a - (0.6 * x + 0.8 * y)), 1e-15);
  EXPECT_LE(testing::max_abs(b - (0.8 * x - 0.6 * y)), 1e-15);
}

TEST(Kernels, SolverAgreesAcrossBackends) {
  BackendGuard guard;
  Rng rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const StandardQP qp = testing::random_feasible_qp(rng, rng.integer(3, 15), rng.integer(0, 2),
                                                      rng.integer(1, 10));
    kernels::set_backend(Backend::scalar);
    const SolveResult ref = solve_qp(qp);
    for (Backend b : supported_backends()) {
      kernels::set_backend(b);
      const SolveResult r = solve_qp(qp);
      EXPECT_LE(testing::max_abs(r.x - ref.x), 1e-10);
      EXPECT_EQ(r.active_set, ref.active_set);
    }
  }
}

}  // namespace
}  // namespace taskqp
