#pragma once

#include "netot/grid.hpp"
#include "netot/network.hpp"

#include <Eigen/Core>

#include <cmath>
#include <limits>
#include <utility>
#include <vector>

namespace netot {

/// Kinetic action density |b|^2 / (2a), extended by 0 at the origin and +inf elsewhere off a > 0.
template <typename Scalar>
Scalar action_density(Scalar a, Scalar b) {
  if (a > Scalar(0)) return b * b / (Scalar(2) * a);
  if (a == Scalar(0) && b == Scalar(0)) return Scalar(0);
  return std::numeric_limits<Scalar>::infinity();
}

/// Closed convex set {(alpha, s) : alpha + s^2 / (2c) <= 0}. With c = 1 this is the edge
/// subsolution set; its support function is c * action_density.
template <typename Scalar>
struct ParaboloidSet {
  Scalar curvature = Scalar(1);

  bool contains(Scalar alpha, Scalar s, Scalar slack = Scalar(0)) const {
    return alpha + s * s / (Scalar(2) * curvature) <= slack;
  }
};

/// Euclidean projection onto {alpha + s^2/(2c) <= 0}.
///
/// Outside the set the projection sits on the boundary with multiplier mu >= 0 solving
///   g(mu) = alpha - mu + c s^2 / (2 (c + mu)^2) = 0,
/// which is strictly decreasing in mu. Solved by Newton steps kept inside a shrinking bracket.
template <typename Scalar>
std::pair<Scalar, Scalar> project_paraboloid(Scalar alpha, Scalar s, Scalar c) {
  using std::abs;
  const Scalar two(2);
  if (alpha + s * s / (two * c) <= Scalar(0)) return {alpha, s};

  auto g = [&](Scalar mu) { return alpha - mu + c * s * s / (two * (c + mu) * (c + mu)); };
  Scalar lo(0);
  Scalar hi = alpha + s * s / (two * c);  // g(hi) <= 0
  Scalar mu = hi;
  if (s == Scalar(0)) {
    mu = alpha;
  } else {
    const Scalar tol = Scalar(1e-12) * (Scalar(1) + abs(alpha) + abs(s));
    mu = Scalar(0.5) * (lo + hi);
    for (int it = 0; it < 200; ++it) {
      const Scalar val = g(mu);
      if (val <= Scalar(0) && val >= -tol) break;
      if (val > Scalar(0)) lo = mu; else hi = mu;
      const Scalar cm = c + mu;
      const Scalar deriv = -Scalar(1) - c * s * s / (cm * cm * cm);
      Scalar next = mu - val / deriv;
      if (!(next > lo && next < hi)) next = Scalar(0.5) * (lo + hi);
      if (hi - lo <= std::numeric_limits<Scalar>::epsilon() * (Scalar(1) + hi)) break;
      mu = next;
    }
    if (g(mu) > Scalar(0)) mu = hi;  // stay on the feasible side
  }
  return {alpha - mu, s * c / (c + mu)};
}

/// Point of the vertex subsolution set: (a, b, c_1..c_d).
struct VertexPoint {
  double a = 0.0;
  double b = 0.0;
  Eigen::VectorXd c;
};

/// Euclidean projection onto {a + |b - mean(c)|^2 / (2 kappa^2) <= 0}.
/// The constraint sees (b, c) only through s = <w, (b, c)> with w = (1, -1/d, ..., -1/d); the
/// component orthogonal to w is left untouched.
VertexPoint project_vertex_set(const VertexPoint& point, double kappa);

/// prox of sigma * c * A at x, via Moreau: x - sigma * Proj_S(x / sigma).
template <typename Scalar>
std::pair<Scalar, Scalar> prox_action(Scalar a, Scalar b, Scalar sigma, Scalar c = Scalar(1)) {
  const auto [pa, pb] = project_paraboloid(a / sigma, b / sigma, c);
  Scalar ra = a - sigma * pa;
  Scalar rb = b - sigma * pb;
  if (ra < Scalar(0)) ra = Scalar(0);  // rounding only; the exact prox has ra >= 0
  if (ra == Scalar(0)) rb = Scalar(0);
  return {ra, rb};
}

struct ActionBreakdown {
  double edge = 0.0;
  double vertex = 0.0;
  double total = 0.0;
  std::vector<double> per_edge;
  std::vector<double> per_vertex;
};

/// Discrete action of a trajectory: midpoint quadrature on faces (half weight on the two
/// boundary faces of each edge) and on vertex time midpoints, vertex part scaled by kappa^2.
/// kappa == 0 drops the vertex part entirely.
ActionBreakdown action_eval(const TrajectoryField& field, double kappa, const Network& net,
                            const GridSpec& grid);

}  // namespace netot
