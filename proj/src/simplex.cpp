#include "netot/simplex.hpp"

#include <limits>
#include <stdexcept>
#include <vector>

namespace netot {

LPResult maximize_lp(const Eigen::VectorXd& c, const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                     int max_pivots) {
  const int m = static_cast<int>(A.rows());
  const int n = static_cast<int>(A.cols());
  if (c.size() != n || b.size() != m) throw std::invalid_argument("maximize_lp: shape mismatch");
  if ((b.array() < 0.0).any()) throw std::invalid_argument("maximize_lp: b must be nonnegative");

  // tableau rows 0..m-1 constraints, row m objective (reduced costs); last column rhs
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m + 1, n + m + 1);
  T.block(0, 0, m, n) = A;
  T.block(0, n, m, m).setIdentity();
  T.col(n + m).head(m) = b;
  T.row(m).head(n) = -c.transpose();
  std::vector<int> basis(m);
  for (int i = 0; i < m; ++i) basis[i] = n + i;

  const double eps = 1e-12;
  int degenerate_run = 0;
  LPResult res;
  int pivots = 0;
  for (;; ++pivots) {
    if (pivots >= max_pivots) {
      res.status = LPStatus::IterationLimit;
      break;
    }
    const bool bland = degenerate_run > 50;
    int enter = -1;
    double best = -eps;
    for (int j = 0; j < n + m; ++j) {
      if (T(m, j) < best) {
        enter = j;
        if (bland) break;
        best = T(m, j);
      }
    }
    if (enter < 0) break;

    int leave = -1;
    double ratio = std::numeric_limits<double>::infinity();
    for (int i = 0; i < m; ++i) {
      if (T(i, enter) > eps) {
        const double r = T(i, n + m) / T(i, enter);
        if (r < ratio - eps || (r <= ratio + eps && leave >= 0 && basis[i] < basis[leave])) {
          ratio = r;
          leave = i;
        }
      }
    }
    if (leave < 0) {
      res.status = LPStatus::Unbounded;
      return res;
    }
    degenerate_run = ratio <= eps ? degenerate_run + 1 : 0;

    T.row(leave) /= T(leave, enter);
    for (int i = 0; i <= m; ++i) {
      if (i != leave && T(i, enter) != 0.0) T.row(i) -= T(i, enter) * T.row(leave);
    }
    basis[leave] = enter;
  }

  res.x = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < m; ++i) {
    if (basis[i] < n) res.x(basis[i]) = T(i, n + m);
  }
  res.value = c.dot(res.x);
  return res;
}

}  // namespace netot
