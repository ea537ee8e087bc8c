#include "netot/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace netot {

GridSpec GridSpec::make(const Network& net, std::vector<int> cells, int steps) {
  if (static_cast<int>(cells.size()) != net.num_edges()) {
    throw std::invalid_argument("grid: one cell count per edge required");
  }
  if (steps < 1) throw std::invalid_argument("grid: at least one time step required");
  GridSpec g;
  g.steps = steps;
  g.dt = 1.0 / steps;
  for (int j = 0; j < net.num_edges(); ++j) {
    if (cells[j] < 1) throw std::invalid_argument("grid: every edge needs at least one cell");
    g.dx.push_back(net.edge(j).length / cells[j]);
  }
  g.cells = std::move(cells);
  return g;
}

GridSpec GridSpec::uniform(const Network& net, int cells_per_edge, int steps) {
  return make(net, std::vector<int>(net.num_edges(), cells_per_edge), steps);
}

TrajectoryField TrajectoryField::zeros(const Network& net, const GridSpec& grid) {
  TrajectoryField f;
  const int P = grid.steps;
  for (int j = 0; j < net.num_edges(); ++j) {
    f.rho.push_back(Eigen::MatrixXd::Zero(P + 1, grid.cells[j]));
    f.flux.push_back(Eigen::MatrixXd::Zero(P, grid.cells[j] + 1));
  }
  f.gamma = Eigen::MatrixXd::Zero(P + 1, net.num_vertices());
  f.exchange = Eigen::MatrixXd::Zero(P, net.num_vertices());
  return f;
}

void TrajectoryField::check_conforms(const Network& net, const GridSpec& grid) const {
  const int P = grid.steps;
  bool ok = static_cast<int>(rho.size()) == net.num_edges() &&
            static_cast<int>(flux.size()) == net.num_edges() && gamma.rows() == P + 1 &&
            gamma.cols() == net.num_vertices() && exchange.rows() == P &&
            exchange.cols() == net.num_vertices();
  for (int j = 0; ok && j < net.num_edges(); ++j) {
    ok = rho[j].rows() == P + 1 && rho[j].cols() == grid.cells[j] && flux[j].rows() == P &&
         flux[j].cols() == grid.cells[j] + 1;
  }
  if (!ok) throw NetworkError(NetworkErrorKind::ShapeMismatch, "trajectory field does not match grid");
}

NetworkMeasure TrajectoryField::slice(int k) const {
  NetworkMeasure mu;
  for (const auto& r : rho) mu.edge_densities.push_back(r.row(k).transpose());
  mu.vertex_masses = gamma.row(k).transpose();
  return mu;
}

double TrajectoryField::face_density(int j, int k, int f) const {
  const auto& r = rho[j];
  const int N = static_cast<int>(r.cols());
  if (f == 0) return 0.5 * (r(k, 0) + r(k + 1, 0));
  if (f == N) return 0.5 * (r(k, N - 1) + r(k + 1, N - 1));
  return 0.25 * (r(k, f - 1) + r(k, f) + r(k + 1, f - 1) + r(k + 1, f));
}

void TrajectoryField::sync_exchange(const Network& net) {
  exchange.setZero();
  for (int i = 0; i < net.num_vertices(); ++i) {
    for (const auto& inc : net.incidence(i)) {
      const auto& F = flux[inc.edge];
      const int face = inc.sign > 0 ? static_cast<int>(F.cols()) - 1 : 0;
      exchange.col(i) += inc.sign * F.col(face);
    }
  }
}

double TrajectoryField::mass(const Network& net, const GridSpec& grid, int k) const {
  double m = gamma.row(k).sum();
  for (int j = 0; j < net.num_edges(); ++j) m += rho[j].row(k).sum() * grid.dx[j];
  return m;
}

double CEResidual::max() const {
  double m = std::max(coupling_max, endpoint_max);
  for (double v : edge_max) m = std::max(m, v);
  for (double v : vertex_max) m = std::max(m, v);
  return m;
}

CEResidual ce_residual(const TrajectoryField& field, const Endpoints& endpoints,
                       const Network& net, const GridSpec& grid) {
  field.check_conforms(net, grid);
  endpoints.initial.check_conforms(net);
  endpoints.terminal.check_conforms(net);
  const int P = grid.steps;
  const double dt = grid.dt;
  CEResidual res;
  for (int j = 0; j < net.num_edges(); ++j) {
    const auto& r = field.rho[j];
    const auto& F = field.flux[j];
    const Eigen::MatrixXd div = (F.rightCols(F.cols() - 1) - F.leftCols(F.cols() - 1)) / grid.dx[j];
    const Eigen::MatrixXd interior = (r.bottomRows(P) - r.topRows(P)) / dt + div;
    res.edge_max.push_back(interior.cwiseAbs().maxCoeff());
    res.edge_l2.push_back(std::sqrt(interior.squaredNorm() * grid.dx[j] * dt));
    res.endpoint_max = std::max({res.endpoint_max,
                                 (r.row(0).transpose() - endpoints.initial.edge_densities[j]).cwiseAbs().maxCoeff(),
                                 (r.row(P).transpose() - endpoints.terminal.edge_densities[j]).cwiseAbs().maxCoeff()});
  }
  TrajectoryField coupled = field;
  coupled.sync_exchange(net);
  for (int i = 0; i < net.num_vertices(); ++i) {
    const Eigen::VectorXd g = field.gamma.col(i);
    const Eigen::VectorXd ode = (g.tail(P) - g.head(P)) / dt - field.exchange.col(i);
    res.vertex_max.push_back(ode.cwiseAbs().maxCoeff());
    res.coupling_max =
        std::max(res.coupling_max, (field.exchange.col(i) - coupled.exchange.col(i)).cwiseAbs().maxCoeff());
    res.endpoint_max = std::max({res.endpoint_max, std::abs(g(0) - endpoints.initial.vertex_masses(i)),
                                 std::abs(g(P) - endpoints.terminal.vertex_masses(i))});
  }
  return res;
}

double weak_form_residual(const TrajectoryField& field, const TestFunctions& test,
                          const Network& net, const GridSpec& grid) {
  field.check_conforms(net, grid);
  const int P = grid.steps;
  const double dt = grid.dt;

  double edge_defect = 0.0;
  for (int j = 0; j < net.num_edges(); ++j) {
    const int N = grid.cells[j];
    const double dx = grid.dx[j];
    const auto& r = field.rho[j];
    const auto& F = field.flux[j];
    for (int k = 0; k < P; ++k) {
      const double t = grid.time_mid(k);
      for (int c = 0; c < N; ++c) {
        edge_defect += dt * dx * test.phi_t(j, t, grid.cell_center(j, c)) * 0.5 * (r(k, c) + r(k + 1, c));
      }
      for (int f = 0; f <= N; ++f) {
        const double w = (f == 0 || f == N) ? 0.5 * dx : dx;
        edge_defect += dt * w * test.phi_x(j, t, grid.face(j, f)) * F(k, f);
      }
    }
    for (int c = 0; c < N; ++c) {
      const double x = grid.cell_center(j, c);
      edge_defect -= dx * (test.phi(j, 1.0, x) * r(P, c) - test.phi(j, 0.0, x) * r(0, c));
    }
  }
  for (int i = 0; i < net.num_vertices(); ++i) {
    for (int k = 0; k < P; ++k) {
      const double t = grid.time_mid(k);
      double trace = 0.0;
      for (const auto& inc : net.incidence(i)) {
        const double x = inc.sign > 0 ? net.edge(inc.edge).length : 0.0;
        trace += test.phi(inc.edge, t, x);
      }
      trace /= net.degree(i);
      edge_defect -= dt * trace * field.exchange(k, i);
    }
  }

  double vertex_defect = 0.0;
  for (int i = 0; i < net.num_vertices(); ++i) {
    for (int k = 0; k < P; ++k) {
      const double t = grid.time_mid(k);
      vertex_defect += dt * (test.psi_t(i, t) * field.mid_gamma(i, k) + test.psi(i, t) * field.exchange(k, i));
    }
    vertex_defect -= test.psi(i, 1.0) * field.gamma(P, i) - test.psi(i, 0.0) * field.gamma(0, i);
  }
  return std::abs(edge_defect) + std::abs(vertex_defect);
}

TrajectoryField linear_seed(const Endpoints& endpoints, const Network& net, const GridSpec& grid) {
  endpoints.initial.check_conforms(net);
  endpoints.terminal.check_conforms(net);
  TrajectoryField f = TrajectoryField::zeros(net, grid);
  for (int k = 0; k <= grid.steps; ++k) {
    const double t = grid.time_node(k);
    for (int j = 0; j < net.num_edges(); ++j) {
      if (endpoints.initial.edge_densities[j].size() != grid.cells[j]) {
        throw NetworkError(NetworkErrorKind::ShapeMismatch, "endpoint density does not match grid");
      }
      f.rho[j].row(k) = ((1.0 - t) * endpoints.initial.edge_densities[j] +
                         t * endpoints.terminal.edge_densities[j]).transpose();
    }
    f.gamma.row(k) =
        ((1.0 - t) * endpoints.initial.vertex_masses + t * endpoints.terminal.vertex_masses).transpose();
  }
  return f;
}

std::vector<FaceVelocity> velocity_field(const TrajectoryField& field, const GridSpec& grid) {
  std::vector<FaceVelocity> out;
  for (std::size_t j = 0; j < field.flux.size(); ++j) {
    const auto& F = field.flux[j];
    FaceVelocity v{Eigen::MatrixXd::Zero(F.rows(), F.cols()),
                   Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(F.rows(), F.cols(), false)};
    for (int k = 0; k < grid.steps; ++k) {
      for (int f = 0; f < F.cols(); ++f) {
        const double rho = field.face_density(static_cast<int>(j), k, f);
        if (rho > 0.0) {
          v.value(k, f) = F(k, f) / rho;
          v.defined(k, f) = true;
        } else if (F(k, f) != 0.0) {
          throw std::domain_error("nonzero flux through zero density on edge " + std::to_string(j));
        }
      }
    }
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace netot
