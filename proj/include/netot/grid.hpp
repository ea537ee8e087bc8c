#pragma once

#include "netot/network.hpp"

#include <Eigen/Core>

#include <functional>
#include <vector>

namespace netot {

/// Staggered space-time grid on [0,1] x network. Edge j carries N_j cells of width L_j / N_j;
/// the time interval is split into P steps.
struct GridSpec {
  std::vector<int> cells;
  std::vector<double> dx;
  int steps = 1;
  double dt = 1.0;

  static GridSpec uniform(const Network& net, int cells_per_edge, int steps);
  static GridSpec make(const Network& net, std::vector<int> cells, int steps);

  int num_edges() const { return static_cast<int>(cells.size()); }
  double time_node(int k) const { return k * dt; }
  double time_mid(int k) const { return (k + 0.5) * dt; }
  double cell_center(int j, int c) const { return (c + 0.5) * dx[j]; }
  double face(int j, int f) const { return f * dx[j]; }
};

/// Endpoint data of a transport problem.
struct Endpoints {
  NetworkMeasure initial;
  NetworkMeasure terminal;
};

/// Space-time fields. Densities live at cell centres and time nodes, fluxes at faces and time
/// midpoints. Face 0 of an edge sits at its tail vertex, face N_j at its head.
struct TrajectoryField {
  std::vector<Eigen::MatrixXd> rho;   // per edge, (P+1) x N_j
  std::vector<Eigen::MatrixXd> flux;  // per edge, P x (N_j+1)
  Eigen::MatrixXd gamma;              // (P+1) x n
  Eigen::MatrixXd exchange;           // P x n, f^{i,k}

  static TrajectoryField zeros(const Network& net, const GridSpec& grid);

  void check_conforms(const Network& net, const GridSpec& grid) const;
  NetworkMeasure slice(int k) const;

  /// Face value of the density at time midpoint k: mean of the two time nodes and of the two
  /// adjacent cells; boundary faces use the single adjacent cell.
  double face_density(int j, int k, int f) const;
  /// Vertex mass at time midpoint k.
  double mid_gamma(int i, int k) const { return 0.5 * (gamma(k, i) + gamma(k + 1, i)); }

  /// Recomputes f^{i,k} from the boundary fluxes.
  void sync_exchange(const Network& net);
  /// Mass of time slice k.
  double mass(const Network& net, const GridSpec& grid, int k) const;
};

struct CEResidual {
  std::vector<double> edge_max;
  std::vector<double> edge_l2;
  std::vector<double> vertex_max;
  double coupling_max = 0.0;
  double endpoint_max = 0.0;

  /// Largest entry over every category.
  double max() const;
};

CEResidual ce_residual(const TrajectoryField& field, const Endpoints& endpoints,
                       const Network& net, const GridSpec& grid);

/// Smooth test functions for the weak form; derivatives are supplied exactly by the caller.
struct TestFunctions {
  std::function<double(int, double, double)> phi;    // (edge, t, x)
  std::function<double(int, double, double)> phi_t;
  std::function<double(int, double, double)> phi_x;
  std::function<double(int, double)> psi;            // (vertex, t)
  std::function<double(int, double)> psi_t;
};

/// Absolute defect of the discrete weak continuity equation (edge identity plus vertex
/// identity) under midpoint quadrature.
double weak_form_residual(const TrajectoryField& field, const TestFunctions& test,
                          const Network& net, const GridSpec& grid);

/// Time-linear interpolation of the endpoints with zero fluxes.
TrajectoryField linear_seed(const Endpoints& endpoints, const Network& net, const GridSpec& grid);

struct FaceVelocity {
  Eigen::MatrixXd value;                             // P x (N_j+1); zero where undefined
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> defined;
};

/// u = F / rho at faces. Faces with zero density and zero flux are marked undefined; a nonzero
/// flux through zero density throws std::domain_error.
std::vector<FaceVelocity> velocity_field(const TrajectoryField& field, const GridSpec& grid);

}  // namespace netot
