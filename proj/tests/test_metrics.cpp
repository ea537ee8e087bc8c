#include "doctest.h"

#include "netot/metrics.hpp"
#include "netot/simplex.hpp"
#include "netot/verify/instances.hpp"

#include <cmath>
#include <cstdlib>
#include <random>

using namespace netot;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(v.size());
  int i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

// 1/2 int_0^1 |Q0 - Q1|^2 by inverting the piecewise linear distribution functions at many levels
double quantile_oracle(const Eigen::VectorXd& r0, const Eigen::VectorXd& r1, double length) {
  auto quantile = [&](const Eigen::VectorXd& r, double s) {
    const double dx = length / r.size();
    double acc = 0.0;
    for (int c = 0; c < r.size(); ++c) {
      const double m = r(c) * dx;
      if (m > 0 && acc + m >= s) return c * dx + (s - acc) / r(c);
      acc += m;
    }
    return length;
  };
  const double mass = r0.sum() * length / r0.size();
  const int n = 200000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double s = (i + 0.5) / n * mass;
    const double d = quantile(r0, s) - quantile(r1, s);
    sum += d * d;
  }
  return 0.5 * sum * mass / n;
}

}  // namespace

TEST_CASE("Fisher-Rao closed form") {
  CHECK(fisher_rao(vec({0.3, 0.1}), vec({0.3, 0.1}), 2.0) == 0.0);
  CHECK(fisher_rao(vec({0.0}), vec({1.0}), 1.0) == doctest::Approx(2.0));
  CHECK(fisher_rao(vec({0.25}), vec({1.0}), 2.0) == doctest::Approx(2.0));
  CHECK_THROWS_AS(fisher_rao(vec({-0.1}), vec({1.0}), 1.0), std::invalid_argument);
  CHECK_THROWS_AS(fisher_rao(vec({0.1}), vec({1.0, 2.0}), 1.0), std::invalid_argument);
}

TEST_CASE("Fisher-Rao discrete program") {
  // the geodesic from an empty vertex is t^2; midpoint discretization converges like 1/P there
  CHECK(fisher_rao_discrete(vec({0.0}), vec({1.0}), 1.0, 2000) == doctest::Approx(2.0).epsilon(1e-3));
  CHECK(fisher_rao_discrete(vec({0.25}), vec({1.0}), 2.0, 200) == doctest::Approx(2.0).epsilon(1e-3));
  CHECK(fisher_rao_discrete(vec({0.4, 0.0}), vec({0.4, 0.0}), 1.0, 50) <= 1e-20);
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> u(0.01, 1.0), k(0.25, 4.0);
  for (int n = 0; n < 20; ++n) {
    const Eigen::VectorXd a = vec({u(rng), u(rng), u(rng)}), b = vec({u(rng), u(rng), u(rng)});
    const double kappa = k(rng);
    CHECK(fisher_rao_discrete(a, b, kappa, 200) == doctest::Approx(fisher_rao(a, b, kappa)).epsilon(1e-3));
  }
}

TEST_CASE("one-dimensional Wasserstein") {
  const Eigen::VectorXd r = vec({0.5, 1.5, 1.0, 1.0});
  CHECK(wasserstein_edge_1d(r, r, 1.0) == 0.0);
  const Eigen::VectorXd left = vec({2.0, 2.0, 0.0, 0.0}), right = vec({0.0, 0.0, 2.0, 2.0});
  CHECK(wasserstein_edge_1d(left, right, 1.0) == doctest::Approx(0.125).epsilon(1e-12));
  CHECK_THROWS_AS(wasserstein_edge_1d(left, vec({1.0, 1.0, 1.0, 0.0}), 1.0), std::invalid_argument);
  CHECK_THROWS_AS(wasserstein_edge_1d(vec({-1.0, 5.0}), vec({2.0, 2.0}), 1.0), std::invalid_argument);

  // narrow bumps: the value approaches 1/8 as the width shrinks
  const Network net = verify::single_edge();
  const GridSpec grid = GridSpec::uniform(net, 400, 1);
  double prev = 1.0;
  for (double w : {0.08, 0.04, 0.02, 0.01}) {
    const double v = wasserstein_edge_1d(verify::bump_measure(net, grid, 0, 0.25, w).edge_densities[0],
                                         verify::bump_measure(net, grid, 0, 0.75, w).edge_densities[0], 1.0);
    CHECK(std::abs(v - 0.125) <= prev);
    prev = std::abs(v - 0.125);
  }
  CHECK(prev < 1e-4);
}

TEST_CASE("one-dimensional Wasserstein matches a sampled quantile oracle") {
  std::mt19937 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int n = 0; n < 5; ++n) {
    Eigen::VectorXd a(7), b(11);
    for (int i = 0; i < 7; ++i) a(i) = u(rng) < 0.3 ? 0.0 : u(rng);
    for (int i = 0; i < 11; ++i) b(i) = u(rng);
    const double L = 0.5 + 2 * u(rng);
    a *= 1.0 / (a.sum() * L / 7);
    b *= 1.0 / (b.sum() * L / 11);
    CHECK(wasserstein_edge_1d(a, b, L) == doctest::Approx(quantile_oracle(a, b, L)).epsilon(1e-4));
  }
}

TEST_CASE("simplex on small programs") {
  // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18 -> 36 at (2, 6)
  Eigen::MatrixXd A(3, 2);
  A << 1, 0, 0, 2, 3, 2;
  LPResult r = maximize_lp(vec({3, 5}), A, vec({4, 12, 18}));
  CHECK(r.status == LPStatus::Optimal);
  CHECK(r.value == doctest::Approx(36.0));
  CHECK(r.x(0) == doctest::Approx(2.0));
  CHECK(r.x(1) == doctest::Approx(6.0));
  // unbounded
  Eigen::MatrixXd B(1, 2);
  B << 1, -1;
  CHECK(maximize_lp(vec({1, 1}), B, vec({1})).status == LPStatus::Unbounded);
  // degenerate vertex (Beale-type data that cycles under naive pricing)
  Eigen::MatrixXd C(3, 4);
  C << 0.25, -8, -1, 9, 0.5, -12, -0.5, 3, 0, 0, 1, 0;
  r = maximize_lp(vec({0.75, -20, 0.5, -6}), C, vec({0, 0, 1}));
  CHECK(r.status == LPStatus::Optimal);
  CHECK(r.value == doctest::Approx(1.25));
}

TEST_CASE("bounded-Lipschitz distances") {
  const int N = 40;
  const double dx = 1.0 / N;
  Eigen::VectorXd a = Eigen::VectorXd::Zero(N), b = Eigen::VectorXd::Zero(N);
  a(10) = 1.0 / dx;
  b(30) = 1.0 / dx;  // centres 0.5 apart
  CHECK(bl_distance_edge(a, a, dx) == 0.0);
  CHECK(bl_distance_edge(a, b, dx) == doctest::Approx(2 * 0.5 / (2 + 0.5)).epsilon(1e-9));
  CHECK(bl_distance_vertex(0.3, 0.7) == doctest::Approx(0.4));

  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int n = 0; n < 5; ++n) {
    Eigen::VectorXd x(12), y(12), z(12);
    for (int i = 0; i < 12; ++i) {
      x(i) = u(rng);
      y(i) = u(rng);
      z(i) = u(rng);
    }
    const double h = 1.0 / 12;
    const double xy = bl_distance_edge(x, y, h), yx = bl_distance_edge(y, x, h);
    CHECK(xy == doctest::Approx(yx).epsilon(1e-12));
    CHECK(bl_distance_edge(x, z, h) <= xy + bl_distance_edge(y, z, h) + 1e-10);
  }
}

TEST_CASE("bounded-Lipschitz constant and exchange norm") {
  const Network net = verify::y_graph();
  CHECK(bl_constant(net, 1.0) == doctest::Approx(2 * std::sqrt(14.0)));
  CHECK(bl_constant(net, 0.5) == doctest::Approx(4 * std::sqrt(14.0)));
  CHECK(bl_constant(net, 3.0) == doctest::Approx(2 * std::sqrt(14.0)));
  const GridSpec grid = GridSpec::uniform(net, 2, 4);
  TrajectoryField f = TrajectoryField::zeros(net, grid);
  f.exchange(1, 2) = 2.0;
  CHECK(exchange_norm(f, grid) == doctest::Approx(std::sqrt(4.0 * 0.25)));
}

TEST_CASE("Kirchhoff-coupled edge transport") {
  const Network net = verify::y_graph();
  SolverParams p;
  p.tol_gap = 1e-5;
  p.max_iters = 40000;
  {
    const GridSpec grid = GridSpec::uniform(net, 8, 4);
    std::mt19937 rng(5);
    const NetworkMeasure mu = verify::random_measure(net, grid, rng);
    CHECK(wasserstein_edges_kirchhoff(net, grid, {mu, mu}, p) <= 1e-10);
    CHECK(w_zero(net, grid, {mu, mu}, p) <= 1e-10);
  }
  {
    // per-edge compatible masses: the coupled problem allows more than edge-wise transport
    const GridSpec grid = GridSpec::uniform(net, 16, 8);
    NetworkMeasure a, b;
    a.vertex_masses = b.vertex_masses = Eigen::VectorXd::Zero(4);
    for (int j = 0; j < 3; ++j) {
      a.edge_densities.push_back(verify::bump_measure(net, grid, j, 0.3, 0.1).edge_densities[j] / 3.0);
      b.edge_densities.push_back(verify::bump_measure(net, grid, j, 0.7, 0.1).edge_densities[j] / 3.0);
    }
    double separate = 0.0;
    for (int j = 0; j < 3; ++j) separate += wasserstein_edge_1d(a.edge_densities[j], b.edge_densities[j], 1.0);
    const double coupled = wasserstein_edges_kirchhoff(net, grid, {a, b}, p);
    CHECK(coupled <= separate * 1.02);
  }
  {
    // unit mass moved from E1 to E2 across the hub: compare with the concatenated interval [0, 2]
    const GridSpec grid = GridSpec::uniform(net, 16, 16);
    NetworkMeasure a = verify::zero_measure(net, grid), b = verify::zero_measure(net, grid);
    a.edge_densities[0].setOnes();
    b.edge_densities[1].setOnes();
    const double coupled = wasserstein_edges_kirchhoff(net, grid, {a, b}, p);
    Eigen::VectorXd line0 = Eigen::VectorXd::Zero(32), line1 = Eigen::VectorXd::Zero(32);
    line0.head(16).setOnes();
    line1.tail(16).setOnes();
    const double oracle = wasserstein_edge_1d(line0, line1, 2.0);
    CHECK(oracle == doctest::Approx(0.5));
    CHECK(std::isfinite(coupled));
    CHECK(coupled >= oracle * 0.98);
  }
}

TEST_CASE("the unpriced relaxation is a lower bound") {
  const Network net = verify::y_graph();
  const GridSpec grid = GridSpec::uniform(net, 8, 8);
  std::mt19937 rng(6);
  const Endpoints ep{verify::random_measure(net, grid, rng), verify::random_measure(net, grid, rng)};
  SolverParams p;
  p.tol_gap = 1e-6;
  p.max_iters = 40000;
  const double w0 = w_zero(net, grid, ep, p);
  for (double kappa : {0.25, 1.0, 4.0}) {
    const SolveReport rep = solve_transport(net, grid, ep, kappa, VertexMode::Active, p);
    CHECK(w0 <= rep.value * (1 + 1e-5));
  }

  // vertex to vertex with no edge mass: finite without a price on exchange
  const Network one = verify::single_edge();
  const GridSpec g1 = GridSpec::uniform(one, 8, 8);
  NetworkMeasure a{{Eigen::VectorXd::Zero(8)}, vec({1.0, 0.0})};
  NetworkMeasure b{{Eigen::VectorXd::Zero(8)}, vec({0.0, 1.0})};
  CHECK(std::isfinite(w_zero(one, g1, {a, b}, p)));
}

TEST_CASE("kappa sweep") {
  const Network net = verify::y_graph();
  const GridSpec grid = GridSpec::uniform(net, 8, 4);
  std::mt19937 rng(7);
  const NetworkMeasure a = verify::random_measure(net, grid, rng);
  SolverParams p;
  p.tol_gap = 1e-5;
  p.max_iters = 40000;

  const KappaSweep same = sweep_kappa(net, grid, {a, a}, {0.5, 1.0, 2.0}, p);
  for (double v : same.values) CHECK(v <= 1e-10);

  NetworkMeasure b = verify::random_measure(net, grid, rng);
  const KappaSweep inc = sweep_kappa(net, grid, {a, b}, {1.0, 2.0, 4.0}, p);
  CHECK_FALSE(inc.has_reference);
  CHECK(inc.mass_gap == doctest::Approx(0.5 * (b.vertex_masses - a.vertex_masses).squaredNorm()));
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(inc.converged[k]);
    CHECK(inc.values[k] + std::abs(inc.gaps[k]) >= inc.kappas[k] * inc.kappas[k] * inc.mass_gap);
  }
  for (double d : inc.monotonicity_defects) CHECK(d <= 1e-4 * inc.values.back());

  b.vertex_masses = a.vertex_masses;
  verify::normalize_edges(b, net);
  const KappaSweep comp = sweep_kappa(net, grid, {a, b}, {1.0, 4.0, 16.0}, p);
  CHECK(comp.has_reference);
  CHECK(comp.values.back() == doctest::Approx(comp.reference).epsilon(0.05));
  CHECK(comp.flux_norms[2] < comp.flux_norms[0]);

  CHECK_THROWS_AS(sweep_kappa(net, grid, {a, a}, {1.0, 1.0}, p), std::invalid_argument);
  CHECK_THROWS_AS(sweep_kappa(net, grid, {a, a}, {0.0, 1.0}, p), std::invalid_argument);
}

TEST_CASE("worker cap from the environment") {
  setenv("NETOT_THREADS", "3", 1);
  CHECK(worker_count() == 3);
  setenv("NETOT_THREADS", "0", 1);
  CHECK(worker_count() >= 1);
  unsetenv("NETOT_THREADS");
  CHECK(worker_count() >= 1);
}
