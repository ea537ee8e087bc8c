#include "netot/metrics.hpp"

#include "netot/simplex.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <thread>

namespace netot {

namespace {

void require_nonnegative(const Eigen::VectorXd& v, const char* what) {
  if ((v.array() < 0.0).any()) throw std::invalid_argument(std::string(what) + ": negative entry");
}

// min over interior masses of kappa^2/dt * sum_k (g_{k+1} - g_k)^2 / (g_k + g_{k+1})
double fisher_rao_vertex(double a, double b, double kappa, int P) {
  if (a == 0.0 && b == 0.0) return 0.0;
  const double dt = 1.0 / P;
  const double scale = kappa * kappa / dt;
  const int m = P - 1;
  Eigen::VectorXd g(P + 1);
  for (int k = 0; k <= P; ++k) {
    const double t = k * dt;
    const double r = (1.0 - t) * std::sqrt(a) + t * std::sqrt(b);
    g(k) = r * r;
  }
  g(0) = a;
  g(P) = b;
  auto objective = [&](const Eigen::VectorXd& x) {
    double v = 0.0;
    for (int k = 0; k < P; ++k) {
      const double s = x(k) + x(k + 1);
      const double d = x(k + 1) - x(k);
      v += s > 0.0 ? d * d / s : (d == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
    }
    return v;
  };
  if (m == 0) return scale * objective(g);

  for (int it = 0; it < 100; ++it) {
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(m);
    std::vector<Eigen::Triplet<double>> hess;  // tridiagonal
    for (int k = 0; k < P; ++k) {
      const double s = g(k) + g(k + 1);
      const double d = g(k + 1) - g(k);
      // gradient and (rank one) Hessian of d^2/s in (g_k, g_{k+1})
      const Eigen::Vector2d v(-1.0 - d / s, 1.0 - d / s);
      const Eigen::Vector2d gr(-2.0 * d / s - d * d / (s * s), 2.0 * d / s - d * d / (s * s));
      const Eigen::Matrix2d h = (2.0 / s) * v * v.transpose();
      const int idx[2] = {k - 1, k};  // interior index of g_k, g_{k+1}
      for (int p = 0; p < 2; ++p) {
        if (idx[p] < 0 || idx[p] >= m) continue;
        grad(idx[p]) += gr(p);
        for (int q = 0; q < 2; ++q) {
          if (idx[q] >= 0 && idx[q] < m) hess.emplace_back(idx[p], idx[q], h(p, q));
        }
      }
    }
    if (grad.cwiseAbs().maxCoeff() < 1e-14 * (1.0 + std::max(a, b))) break;
    for (int i = 0; i < m; ++i) hess.emplace_back(i, i, 1e-14);
    Eigen::SparseMatrix<double> H(m, m);
    H.setFromTriplets(hess.begin(), hess.end());
    const Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(H);
    const Eigen::VectorXd step = ldlt.solve(-grad);
    const double f0 = objective(g);
    double tau = 1.0;
    Eigen::VectorXd trial = g;
    for (int ls = 0; ls < 60; ++ls) {
      trial.segment(1, m) = g.segment(1, m) + tau * step;
      if ((trial.segment(1, m).array() > 0.0).all() &&
          objective(trial) <= f0 + 1e-4 * tau * grad.dot(step)) {
        break;
      }
      tau *= 0.5;
    }
    if (tau < 1e-15) break;
    const double change = (trial - g).cwiseAbs().maxCoeff();
    g = trial;
    if (change < 1e-15 * (1.0 + std::max(a, b))) break;
  }
  return scale * objective(g);
}

}  // namespace

double fisher_rao(const Eigen::VectorXd& gamma0, const Eigen::VectorXd& gamma1, double kappa) {
  if (gamma0.size() != gamma1.size()) throw std::invalid_argument("fisher_rao: size mismatch");
  require_nonnegative(gamma0, "fisher_rao");
  require_nonnegative(gamma1, "fisher_rao");
  return 2.0 * kappa * kappa * (gamma1.cwiseSqrt() - gamma0.cwiseSqrt()).squaredNorm();
}

double fisher_rao_discrete(const Eigen::VectorXd& gamma0, const Eigen::VectorXd& gamma1, double kappa,
                           int steps) {
  if (gamma0.size() != gamma1.size()) throw std::invalid_argument("fisher_rao: size mismatch");
  if (steps < 1) throw std::invalid_argument("fisher_rao: at least one step required");
  require_nonnegative(gamma0, "fisher_rao");
  require_nonnegative(gamma1, "fisher_rao");
  double v = 0.0;
  for (Eigen::Index i = 0; i < gamma0.size(); ++i) v += fisher_rao_vertex(gamma0(i), gamma1(i), kappa, steps);
  return v;
}

double wasserstein_edge_1d(const Eigen::VectorXd& rho0, const Eigen::VectorXd& rho1, double length) {
  require_nonnegative(rho0, "wasserstein_edge_1d");
  require_nonnegative(rho1, "wasserstein_edge_1d");
  const double dx0 = length / rho0.size();
  const double dx1 = length / rho1.size();
  const double m0 = rho0.sum() * dx0;
  const double m1 = rho1.sum() * dx1;
  if (std::abs(m0 - m1) > 1e-10 * std::max(1.0, std::max(m0, m1))) {
    throw std::invalid_argument("wasserstein_edge_1d: masses differ");
  }

  // walk both quantile functions over the merged mass breakpoints
  int i = 0, j = 0;
  double used0 = 0.0, used1 = 0.0;  // mass already consumed in the current cells
  double total = 0.0;
  auto skip = [](const Eigen::VectorXd& r, int& c, double& used) {
    while (c < r.size() && r(c) <= 0.0) {
      ++c;
      used = 0.0;
    }
  };
  const double tiny = 1e-14 * std::max(1.0, m0);
  for (;;) {
    skip(rho0, i, used0);
    skip(rho1, j, used1);
    if (i >= rho0.size() || j >= rho1.size()) break;
    const double rem0 = rho0(i) * dx0 - used0;
    const double rem1 = rho1(j) * dx1 - used1;
    const double ds = std::min(rem0, rem1);
    const double q0a = i * dx0 + used0 / rho0(i);
    const double q1a = j * dx1 + used1 / rho1(j);
    const double da = q0a - q1a;
    const double db = (q0a + ds / rho0(i)) - (q1a + ds / rho1(j));
    total += ds * (da * da + da * db + db * db) / 3.0;
    used0 += ds;
    used1 += ds;
    if (rem0 - ds <= tiny) {
      ++i;
      used0 = 0.0;
    }
    if (rem1 - ds <= tiny) {
      ++j;
      used1 = 0.0;
    }
  }
  return 0.5 * total;
}

double wasserstein_edges_kirchhoff(const Network& net, const GridSpec& grid,
                                   const Endpoints& endpoints, const SolverParams& params) {
  return solve_transport(net, grid, endpoints, 1.0, VertexMode::Frozen, params).value;
}

double w_zero(const Network& net, const GridSpec& grid, const Endpoints& endpoints,
              const SolverParams& params) {
  return solve_transport(net, grid, endpoints, 0.0, VertexMode::Free, params).value;
}

double bl_distance_edge(const Eigen::VectorXd& rho0, const Eigen::VectorXd& rho1, double dx) {
  if (rho0.size() != rho1.size()) throw std::invalid_argument("bl_distance_edge: grid mismatch");
  const int N = static_cast<int>(rho0.size());
  const Eigen::VectorXd m = (rho1 - rho0) * dx;
  if (m.cwiseAbs().maxCoeff() == 0.0) return 0.0;

  // x = (p, q, s, l), Phi = p - q
  const int n = 2 * N + 2;
  const int S = 2 * N, L = 2 * N + 1;
  const int rows = 2 * N + 2 * (N - 1) + 1;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(rows, n);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(rows);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(n);
  c.head(N) = m;
  c.segment(N, N) = -m;
  int r = 0;
  for (int k = 0; k < N; ++k, ++r) {
    A(r, k) = 1.0;
    A(r, N + k) = -1.0;
    A(r, S) = -1.0;
  }
  for (int k = 0; k < N; ++k, ++r) {
    A(r, k) = -1.0;
    A(r, N + k) = 1.0;
    A(r, S) = -1.0;
  }
  for (int k = 0; k + 1 < N; ++k) {
    for (double sgn : {1.0, -1.0}) {
      A(r, k + 1) = sgn;
      A(r, N + k + 1) = -sgn;
      A(r, k) = -sgn;
      A(r, N + k) = sgn;
      A(r, L) = -dx;
      ++r;
    }
  }
  A(r, S) = 1.0;
  A(r, L) = 1.0;
  b(r) = 1.0;
  const LPResult res = maximize_lp(c, A, b);
  if (res.status != LPStatus::Optimal) throw std::runtime_error("bl_distance_edge: LP failed");
  return std::max(0.0, res.value);
}

double bl_slice_distance(const TrajectoryField& field, int a, int b, const Network& net,
                         const GridSpec& grid) {
  double v = 0.0;
  for (int j = 0; j < net.num_edges(); ++j) {
    v += bl_distance_edge(field.rho[j].row(a).transpose(), field.rho[j].row(b).transpose(), grid.dx[j]);
  }
  for (int i = 0; i < net.num_vertices(); ++i) v += bl_distance_vertex(field.gamma(a, i), field.gamma(b, i));
  return v;
}

double bl_constant(const Network& net, double kappa) {
  return 2.0 * std::sqrt(2.0 * (net.num_vertices() + net.num_edges())) * std::max(1.0, 1.0 / kappa);
}

double exchange_norm(const TrajectoryField& field, const GridSpec& grid) {
  return std::sqrt(field.exchange.squaredNorm() * grid.dt);
}

int worker_count() {
  if (const char* env = std::getenv("NETOT_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

KappaSweep sweep_kappa(const Network& net, const GridSpec& grid, const Endpoints& endpoints,
                       const std::vector<double>& kappas, const SolverParams& params,
                       bool with_reference) {
  for (std::size_t k = 0; k < kappas.size(); ++k) {
    if (!(kappas[k] > 0.0) || (k > 0 && !(kappas[k] > kappas[k - 1]))) {
      throw std::invalid_argument("sweep_kappa: kappa grid must be positive and strictly increasing");
    }
  }
  check_endpoints(endpoints, net, grid);
  KappaSweep sw;
  const std::size_t n = kappas.size();
  sw.kappas = kappas;
  sw.values.assign(n, 0.0);
  sw.dual_values.assign(n, 0.0);
  sw.gaps.assign(n, 0.0);
  sw.flux_norms.assign(n, 0.0);
  sw.converged.assign(n, false);
  const Eigen::VectorXd dg = endpoints.terminal.vertex_masses - endpoints.initial.vertex_masses;
  sw.mass_gap = 0.5 * dg.squaredNorm();
  const bool compatible = dg.cwiseAbs().maxCoeff() <= 1e-12;

  std::vector<char> done(n, 0);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t k = next++; k < n; k = next++) {
      const SolveReport rep = solve_transport(net, grid, endpoints, kappas[k], VertexMode::Active, params);
      sw.values[k] = rep.value;
      sw.dual_values[k] = rep.dual_value;
      sw.gaps[k] = rep.gap;
      sw.flux_norms[k] = exchange_norm(rep.geodesic, grid);
      done[k] = rep.converged ? 1 : 0;
    }
  };
  const int workers = std::min<int>(worker_count(), static_cast<int>(n));
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  for (std::size_t k = 0; k < n; ++k) sw.converged[k] = done[k] != 0;

  for (std::size_t k = 0; k + 1 < n; ++k) {
    sw.monotonicity_defects.push_back(std::max(0.0, sw.values[k] - sw.values[k + 1]));
  }
  if (with_reference && compatible) {
    sw.reference = wasserstein_edges_kirchhoff(net, grid, endpoints, params);
    sw.has_reference = true;
  }
  return sw;
}

}  // namespace netot
