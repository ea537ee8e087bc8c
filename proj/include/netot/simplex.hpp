#pragma once

#include <Eigen/Core>

namespace netot {

enum class LPStatus { Optimal, Unbounded, IterationLimit };

struct LPResult {
  LPStatus status = LPStatus::Optimal;
  double value = 0.0;
  Eigen::VectorXd x;
};

/// Dense tableau simplex for  max c^T x  s.t.  A x <= b, x >= 0  with b >= 0, so the origin is a
/// feasible basis. Dantzig pricing, switching to Bland's rule after a run of degenerate pivots.
LPResult maximize_lp(const Eigen::VectorXd& c, const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                     int max_pivots = 100000);

}  // namespace netot
