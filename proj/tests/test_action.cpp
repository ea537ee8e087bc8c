#include "doctest.h"

#include "netot/action.hpp"
#include "netot/verify/instances.hpp"

#include <cmath>
#include <limits>
#include <random>

using namespace netot;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

// brute-force projection onto {alpha + s^2/(2c) <= 0}: scan the boundary curve alpha = -s^2/(2c)
std::pair<double, double> projection_by_search(double alpha, double s, double c) {
  if (alpha + s * s / (2 * c) <= 0) return {alpha, s};
  auto dist = [&](double t) {
    const double a = -t * t / (2 * c);
    return (a - alpha) * (a - alpha) + (t - s) * (t - s);
  };
  const double span = std::abs(s) + std::sqrt(2 * c * std::abs(alpha)) + 1.0;
  double lo = -span, hi = span, best = 0;
  for (int level = 0; level < 6; ++level) {
    double bestv = kInf;
    const int n = 2000;
    for (int i = 0; i <= n; ++i) {
      const double t = lo + (hi - lo) * i / n;
      if (dist(t) < bestv) {
        bestv = dist(t);
        best = t;
      }
    }
    const double w = (hi - lo) / n;
    lo = best - 2 * w;
    hi = best + 2 * w;
  }
  return {-best * best / (2 * c), best};
}

}  // namespace

TEST_CASE("action density values") {
  CHECK(action_density(1.0, 2.0) == doctest::Approx(2.0));
  CHECK(action_density(0.0, 0.0) == 0.0);
  CHECK(action_density(0.0, 1.0) == kInf);
  CHECK(action_density(-1.0, 0.0) == kInf);
  CHECK(action_density(1.0f, 2.0f) == doctest::Approx(2.0f));
}

TEST_CASE("action density is 1-homogeneous and convex") {
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> pos(0.01, 3.0), any(-3.0, 3.0), lam(0.0, 1.0);
  for (int n = 0; n < 200; ++n) {
    const double a = pos(rng), b = any(rng), l = pos(rng);
    CHECK(action_density(l * a, l * b) == doctest::Approx(l * action_density(a, b)).epsilon(1e-12));
    const double a2 = pos(rng), b2 = any(rng), t = lam(rng);
    const double mid = action_density(t * a + (1 - t) * a2, t * b + (1 - t) * b2);
    CHECK(mid <= t * action_density(a, b) + (1 - t) * action_density(a2, b2) + 1e-12);
  }
}

TEST_CASE("Fenchel identity by grid search over the subsolution set") {
  std::mt19937 rng(2);
  std::uniform_real_distribution<double> pos(0.2, 2.0), any(-2.0, 2.0);
  for (int n = 0; n < 10; ++n) {
    const double a = pos(rng), b = any(rng);
    // sup over beta of a * (-beta^2/2) + b * beta on the boundary; the interior never wins for a > 0
    double best = -kInf;
    const int m = 200000;
    for (int i = 0; i <= m; ++i) {
      const double beta = -20.0 + 40.0 * i / m;
      best = std::max(best, -a * beta * beta / 2 + b * beta);
    }
    CHECK(best == doctest::Approx(action_density(a, b)).epsilon(1e-3));
  }
}

TEST_CASE("paraboloid projection examples") {
  auto [a0, s0] = project_paraboloid(-1.0, 0.0, 1.0);
  CHECK(a0 == -1.0);
  CHECK(s0 == 0.0);
  auto [a1, s1] = project_paraboloid(1.0, 0.0, 1.0);
  CHECK(std::abs(a1) < 1e-12);
  CHECK(s1 == 0.0);
  auto [a2, s2] = project_paraboloid(0.0, 2.0, 1.0);
  const auto [oa, os] = projection_by_search(0.0, 2.0, 1.0);
  CHECK(a2 == doctest::Approx(-0.6956).epsilon(1e-4));
  CHECK(s2 == doctest::Approx(1.1795).epsilon(1e-4));
  CHECK(a2 == doctest::Approx(oa).epsilon(1e-6));
  CHECK(s2 == doctest::Approx(os).epsilon(1e-6));
  // boundary residual
  CHECK(std::abs(a2 + s2 * s2 / 2) < 1e-12);
}

TEST_CASE("paraboloid projection matches brute force") {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-4.0, 4.0), c(0.1, 5.0);
  for (int n = 0; n < 50; ++n) {
    const double alpha = u(rng), s = u(rng), k = c(rng);
    const auto [pa, ps] = project_paraboloid(alpha, s, k);
    const auto [oa, os] = projection_by_search(alpha, s, k);
    CHECK(std::hypot(pa - oa, ps - os) < 1e-6);
    CHECK(pa + ps * ps / (2 * k) <= 1e-12);
  }
}

TEST_CASE("projection is idempotent and nonexpansive") {
  std::mt19937 rng(4);
  std::uniform_real_distribution<double> u(-5.0, 5.0), c(0.1, 5.0);
  for (int n = 0; n < 500; ++n) {
    const double k = c(rng);
    const double x1 = u(rng), y1 = u(rng), x2 = u(rng), y2 = u(rng);
    const auto [p1, q1] = project_paraboloid(x1, y1, k);
    const auto [pp, qq] = project_paraboloid(p1, q1, k);
    CHECK(std::abs(pp - p1) <= 1e-12 * (1 + std::abs(p1)));
    CHECK(std::abs(qq - q1) <= 1e-12 * (1 + std::abs(q1)));
    const auto [p2, q2] = project_paraboloid(x2, y2, k);
    CHECK(std::hypot(p1 - p2, q1 - q2) <= std::hypot(x1 - x2, y1 - y2) + 1e-12);
  }
}

TEST_CASE("vertex set projection examples") {
  VertexPoint feasible{-1.0, 0.0, Eigen::VectorXd::Zero(3)};
  VertexPoint p = project_vertex_set(feasible, 1.0);
  CHECK(p.a == -1.0);
  CHECK(p.b == 0.0);
  CHECK(p.c.norm() == 0.0);

  VertexPoint balanced{-0.3, 0.7, Eigen::VectorXd::Constant(2, 0.7)};
  p = project_vertex_set(balanced, 2.0);
  CHECK(p.a == -0.3);
  CHECK(p.b == 0.7);

  VertexPoint clip{1.0, 1.0, Eigen::VectorXd::Ones(1)};
  p = project_vertex_set(clip, 1.0);
  CHECK(std::abs(p.a) < 1e-12);
  CHECK(p.b == doctest::Approx(1.0));
  CHECK(p.c(0) == doctest::Approx(1.0));
}

TEST_CASE("vertex set projection matches a dense 3-D search") {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (int n = 0; n < 4; ++n) {
    const VertexPoint x{u(rng), u(rng), Eigen::VectorXd::Constant(1, u(rng))};
    const VertexPoint p = project_vertex_set(x, 1.0);
    // search the boundary a = -(b - c)^2 / 2 over (b, c), refining around the best point
    double bb = 0, bc = 0, best = kInf;
    double cb = x.b, cc = x.c(0), span = 4.0;
    for (int level = 0; level < 8; ++level) {
      const int m = 200;
      for (int i = 0; i <= m; ++i) {
        for (int j = 0; j <= m; ++j) {
          const double b = cb - span + 2 * span * i / m;
          const double c = cc - span + 2 * span * j / m;
          const double a = -(b - c) * (b - c) / 2;
          const double d = (a - x.a) * (a - x.a) + (b - x.b) * (b - x.b) + (c - x.c(0)) * (c - x.c(0));
          if (d < best) {
            best = d;
            bb = b;
            bc = c;
          }
        }
      }
      cb = bb;
      cc = bc;
      span *= 0.05;
    }
    if (x.a + (x.b - x.c(0)) * (x.b - x.c(0)) / 2 <= 0) {
      CHECK(p.b == x.b);
      continue;
    }
    CHECK(p.b == doctest::Approx(bb).epsilon(1e-5));
    CHECK(p.c(0) == doctest::Approx(bc).epsilon(1e-5));
  }
}

TEST_CASE("vertex set projection is equivariant under diagonal shifts") {
  std::mt19937 rng(6);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int d : {1, 2, 3, 5}) {
    for (int n = 0; n < 40; ++n) {
      VertexPoint x{u(rng), u(rng), Eigen::VectorXd::NullaryExpr(d, [&] { return u(rng); })};
      const double kappa = 0.5 + std::abs(u(rng));
      const double shift = u(rng);
      VertexPoint y = x;
      y.b += shift;
      y.c.array() += shift;
      const VertexPoint px = project_vertex_set(x, kappa);
      const VertexPoint py = project_vertex_set(y, kappa);
      CHECK(py.a == doctest::Approx(px.a).epsilon(1e-10));
      CHECK(py.b == doctest::Approx(px.b + shift).epsilon(1e-10));
      CHECK((py.c.array() - px.c.array() - shift).abs().maxCoeff() < 1e-10);
      // the projection lands in the set and is idempotent
      const double s = py.b - py.c.mean();
      CHECK(py.a + s * s / (2 * kappa * kappa) <= 1e-10);
      const VertexPoint again = project_vertex_set(py, kappa);
      CHECK(std::abs(again.a - py.a) < 1e-10);
    }
  }
}

TEST_CASE("prox examples") {
  auto [a0, b0] = prox_action(-0.5, 0.0, 1.0);
  CHECK(a0 == 0.0);
  CHECK(b0 == 0.0);
  for (double sigma : {0.1, 1.0, 7.0}) {
    auto [a1, b1] = prox_action(1.0, 0.0, sigma);
    CHECK(a1 == doctest::Approx(1.0));
    CHECK(b1 == 0.0);
  }
  auto [a2, b2] = prox_action(0.0, 0.0, 1.0);
  CHECK(a2 == 0.0);
  CHECK(b2 == 0.0);
}

TEST_CASE("prox minimizes the Moreau envelope") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-2.0, 2.0), pos(0.0, 3.0), sig(0.1, 3.0);
  for (int n = 0; n < 100; ++n) {
    const double xa = u(rng), xb = u(rng), sigma = sig(rng), c = 0.5 + pos(rng);
    const auto [ya, yb] = prox_action(xa, xb, sigma, c);
    CHECK(ya >= 0.0);
    auto obj = [&](double a, double b) {
      return c * action_density(a, b) + ((a - xa) * (a - xa) + (b - xb) * (b - xb)) / (2 * sigma);
    };
    const double fy = obj(ya, yb);
    for (int m = 0; m < 50; ++m) {
      const double za = pos(rng), zb = u(rng);
      CHECK(fy <= obj(za, zb) + 1e-10);
    }
    // brute-force grid around the prox point
    double best = obj(0.0, 0.0);
    for (int i = 1; i <= 300; ++i) {
      for (int j = -300; j <= 300; ++j) best = std::min(best, obj(i * 0.01, j * 0.01));
    }
    CHECK(fy <= best + 1e-10);
  }
}

TEST_CASE("action evaluation") {
  const Network net = verify::single_edge();
  {
    const GridSpec grid = GridSpec::uniform(net, 3, 2);
    TrajectoryField f = TrajectoryField::zeros(net, grid);
    f.rho[0].setConstant(0.7);
    f.gamma.setConstant(0.2);
    const ActionBreakdown a = action_eval(f, 1.0, net, grid);
    CHECK(a.total == 0.0);
  }
  {
    // one interior face with rho = 1, F = 2 and dx * dt = 1 would need L = 2; use two cells on a
    // length-2 edge and one step
    const Network two = Network::build({{"A", 0, 0}, {"B", 2, 0}}, {{"e", 0, 1, {}}});
    const GridSpec grid = GridSpec::uniform(two, 2, 1);
    TrajectoryField f = TrajectoryField::zeros(two, grid);
    f.rho[0].setConstant(1.0);
    f.flux[0](0, 1) = 2.0;
    const ActionBreakdown a = action_eval(f, 1.0, two, grid);
    CHECK(a.edge == doctest::Approx(2.0));
    CHECK(a.per_edge[0] == doctest::Approx(2.0));
  }
  {
    const GridSpec grid = GridSpec::uniform(net, 1, 1);
    TrajectoryField f = TrajectoryField::zeros(net, grid);
    f.gamma.col(0).setConstant(1.0);
    f.exchange(0, 0) = 1.0;
    const ActionBreakdown a = action_eval(f, 2.0, net, grid);
    CHECK(a.vertex == doctest::Approx(2.0));
    CHECK(a.per_vertex[0] == doctest::Approx(2.0));
    CHECK(a.total == doctest::Approx(a.edge + a.vertex));
  }
  {
    const GridSpec grid = GridSpec::uniform(net, 2, 1);
    TrajectoryField f = TrajectoryField::zeros(net, grid);
    f.flux[0](0, 1) = 0.3;
    CHECK(action_eval(f, 1.0, net, grid).total == kInf);
  }
}
