#include "netot/verify/oracles.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <vector>

namespace netot::verify {

namespace {

struct Affine {  // sum coef * x[idx] + constant
  std::vector<std::pair<int, double>> terms;
  double constant = 0.0;

  double eval(const Eigen::VectorXd& x) const {
    double v = constant;
    for (auto [i, c] : terms) v += c * x(i);
    return v;
  }
};

struct Term {  // weight * b^2 / (2 a)
  double weight;
  Affine a;
  int b;
};

}  // namespace

OracleResult barrier_oracle(const Network& net, const GridSpec& grid, const Endpoints& ep,
                            double kappa) {
  const int P = grid.steps;
  const double dt = grid.dt;
  const int n = net.num_vertices();
  int nx = 0;
  std::vector<std::vector<std::vector<int>>> rho(net.num_edges()), flux(net.num_edges());
  std::vector<int> positive;
  for (int j = 0; j < net.num_edges(); ++j) {
    rho[j].assign(P + 1, std::vector<int>(grid.cells[j], -1));
    flux[j].assign(P, std::vector<int>(grid.cells[j] + 1, -1));
    for (int k = 1; k < P; ++k) {
      for (int c = 0; c < grid.cells[j]; ++c) {
        positive.push_back(nx);
        rho[j][k][c] = nx++;
      }
    }
    for (int k = 0; k < P; ++k) {
      for (int f = 0; f <= grid.cells[j]; ++f) flux[j][k][f] = nx++;
    }
  }
  std::vector<std::vector<int>> gam(P + 1, std::vector<int>(n, -1)), exch(P, std::vector<int>(n));
  for (int k = 1; k < P; ++k) {
    for (int i = 0; i < n; ++i) {
      positive.push_back(nx);
      gam[k][i] = nx++;
    }
  }
  for (int k = 0; k < P; ++k) {
    for (int i = 0; i < n; ++i) exch[k][i] = nx++;
  }

  auto rho_term = [&](Affine& a, int j, int k, int c, double coef) {
    if (rho[j][k][c] >= 0) a.terms.push_back({rho[j][k][c], coef});
    else a.constant += coef * (k == 0 ? ep.initial.edge_densities[j](c) : ep.terminal.edge_densities[j](c));
  };
  auto gamma_term = [&](Affine& a, int i, int k, double coef) {
    if (gam[k][i] >= 0) a.terms.push_back({gam[k][i], coef});
    else a.constant += coef * (k == 0 ? ep.initial.vertex_masses(i) : ep.terminal.vertex_masses(i));
  };

  // equality constraints  A x = b
  std::vector<Affine> rows;
  for (int j = 0; j < net.num_edges(); ++j) {
    const int N = grid.cells[j];
    for (int k = 0; k < P; ++k) {
      for (int c = 0; c < N; ++c) {
        Affine r;
        rho_term(r, j, k + 1, c, 1.0 / dt);
        rho_term(r, j, k, c, -1.0 / dt);
        r.terms.push_back({flux[j][k][c + 1], 1.0 / grid.dx[j]});
        r.terms.push_back({flux[j][k][c], -1.0 / grid.dx[j]});
        rows.push_back(r);
      }
    }
  }
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < P; ++k) {
      Affine r;
      gamma_term(r, i, k + 1, 1.0 / dt);
      gamma_term(r, i, k, -1.0 / dt);
      r.terms.push_back({exch[k][i], -1.0});
      rows.push_back(r);
      Affine s;
      s.terms.push_back({exch[k][i], 1.0});
      for (const auto& inc : net.incidence(i)) {
        const int f = inc.sign > 0 ? grid.cells[inc.edge] : 0;
        s.terms.push_back({flux[inc.edge][k][f], -double(inc.sign)});
      }
      rows.push_back(s);
    }
  }
  const int m = static_cast<int>(rows.size());
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, nx);
  Eigen::VectorXd b(m);
  for (int r = 0; r < m; ++r) {
    for (auto [i, c] : rows[r].terms) A(r, i) += c;
    b(r) = -rows[r].constant;
  }

  // objective terms
  std::vector<Term> terms;
  for (int j = 0; j < net.num_edges(); ++j) {
    const int N = grid.cells[j];
    for (int k = 0; k < P; ++k) {
      for (int f = 0; f <= N; ++f) {
        Term t{grid.dx[j] * dt, {}, flux[j][k][f]};
        if (f == 0 || f == N) {
          t.weight *= 0.5;
          const int c = f == 0 ? 0 : N - 1;
          rho_term(t.a, j, k, c, 0.5);
          rho_term(t.a, j, k + 1, c, 0.5);
        } else {
          for (int c : {f - 1, f}) {
            rho_term(t.a, j, k, c, 0.25);
            rho_term(t.a, j, k + 1, c, 0.25);
          }
        }
        terms.push_back(t);
      }
    }
  }
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < P; ++k) {
      Term t{dt * kappa * kappa, {}, exch[k][i]};
      gamma_term(t.a, i, k, 0.5);
      gamma_term(t.a, i, k + 1, 0.5);
      terms.push_back(t);
    }
  }

  auto action = [&](const Eigen::VectorXd& x) {
    double v = 0.0;
    for (const auto& t : terms) {
      const double a = t.a.eval(x);
      v += t.weight * x(t.b) * x(t.b) / (2.0 * a);
    }
    return v;
  };
  // action + mu * barrier with mu = 1 / tau, which keeps the Newton systems well scaled
  auto barrier = [&](const Eigen::VectorXd& x, double mu) {
    double v = action(x);
    for (int i : positive) {
      if (x(i) <= 0.0) return std::numeric_limits<double>::infinity();
      v -= mu * std::log(x(i));
    }
    return v;
  };

  // start: linear interpolation of the masses, minimum-norm fluxes
  Eigen::VectorXd x = Eigen::VectorXd::Zero(nx);
  for (int j = 0; j < net.num_edges(); ++j) {
    for (int k = 1; k < P; ++k) {
      const double t = grid.time_node(k);
      for (int c = 0; c < grid.cells[j]; ++c) {
        x(rho[j][k][c]) = (1 - t) * ep.initial.edge_densities[j](c) + t * ep.terminal.edge_densities[j](c);
      }
    }
  }
  for (int k = 1; k < P; ++k) {
    const double t = grid.time_node(k);
    for (int i = 0; i < n; ++i) {
      x(gam[k][i]) = (1 - t) * ep.initial.vertex_masses(i) + t * ep.terminal.vertex_masses(i);
    }
  }
  {
    std::vector<char> is_pos(nx, 0);
    for (int i : positive) is_pos[i] = 1;
    std::vector<int> freev;
    for (int i = 0; i < nx; ++i) {
      if (!is_pos[i]) freev.push_back(i);
    }
    Eigen::MatrixXd Af(m, freev.size());
    for (std::size_t q = 0; q < freev.size(); ++q) Af.col(q) = A.col(freev[q]);
    const Eigen::VectorXd sol = Af.completeOrthogonalDecomposition().solve(b - A * x);
    for (std::size_t q = 0; q < freev.size(); ++q) x(freev[q]) = sol(q);
  }

  OracleResult out;
  const int np = static_cast<int>(positive.size());
  for (double tau = 1.0; tau <= 1e13; tau *= 10.0) {
    const double mu = 1.0 / tau;
    for (int it = 0; it < 200; ++it) {
      Eigen::VectorXd g = Eigen::VectorXd::Zero(nx);
      Eigen::MatrixXd H = Eigen::MatrixXd::Zero(nx, nx);
      for (const auto& t : terms) {
        const double a = t.a.eval(x);
        const double F = x(t.b);
        // phi(F, a) = w F^2 / (2a)
        const double gF = t.weight * F / a;
        const double ga = -t.weight * F * F / (2.0 * a * a);
        const double hFF = t.weight / a;
        const double hFa = -t.weight * F / (a * a);
        const double haa = t.weight * F * F / (a * a * a);
        g(t.b) += gF;
        H(t.b, t.b) += hFF;
        for (auto [i, c] : t.a.terms) {
          g(i) += ga * c;
          H(t.b, i) += hFa * c;
          H(i, t.b) += hFa * c;
          for (auto [i2, c2] : t.a.terms) H(i, i2) += haa * c * c2;
        }
      }
      for (int i : positive) {
        g(i) -= mu / x(i);
        H(i, i) += mu / (x(i) * x(i));
      }
      Eigen::MatrixXd K = Eigen::MatrixXd::Zero(nx + m, nx + m);
      K.topLeftCorner(nx, nx) = H;
      K.topRightCorner(nx, m) = A.transpose();
      K.bottomLeftCorner(m, nx) = A;
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nx + m);
      rhs.head(nx) = -g;
      rhs.tail(m) = b - A * x;  // restores feasibility lost to round-off
      const Eigen::VectorXd sol = K.fullPivLu().solve(rhs);
      const Eigen::VectorXd dx = sol.head(nx);
      const double decrement = -g.dot(dx);
      ++out.newton_steps;
      if (decrement < 1e-18) break;
      const double f0 = barrier(x, mu);
      double step = 1.0;
      while (step > 1e-16) {
        const Eigen::VectorXd trial = x + step * dx;
        const double f1 = barrier(trial, mu);
        if (std::isfinite(f1) && f1 <= f0 - 0.25 * step * std::max(decrement, 0.0)) break;
        step *= 0.5;
      }
      x += step * dx;
    }
    if (np / tau < 1e-11 * std::max(1.0, action(x))) {
      out.converged = true;
      break;
    }
  }
  out.value = action(x);
  return out;
}

}  // namespace netot::verify
