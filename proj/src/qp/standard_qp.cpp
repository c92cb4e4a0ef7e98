#include "taskqp/standard_qp.hpp"

#include "taskqp/errors.hpp"

#include <string>

namespace taskqp {

void StandardQP::validate() const {
  const Eigen::Index n = P.rows();
  auto fail = [](const std::string& what) { throw DimensionError("standard QP: " + what); };
  if (P.cols() != n) fail("P must be square");
  if (a.size() != n) fail("a must have " + std::to_string(n) + " entries");
  if (A.rows() != b.size()) fail("A and b row counts differ");
  if (G.rows() != h.size()) fail("G and h row counts differ");
  if (A.rows() > 0 && A.cols() != n) fail("A must have " + std::to_string(n) + " columns");
  if (G.rows() > 0 && G.cols() != n) fail("G must have " + std::to_string(n) + " columns");
  if (!P.allFinite() || !a.allFinite() || !A.allFinite() || !b.allFinite() || !G.allFinite() ||
      !h.allFinite()) {
    fail("non-finite entries");
  }
  if (n > 0) {
    const double scale = std::max(1.0, P.cwiseAbs().maxCoeff());
    if ((P - P.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) fail("P is not symmetric");
  }
}

}  // namespace taskqp
