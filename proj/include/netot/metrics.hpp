#pragma once

#include "netot/grid.hpp"
#include "netot/network.hpp"
#include "netot/solver.hpp"

#include <Eigen/Core>

#include <vector>

namespace netot {

/// Vertex Fisher-Rao cost sum_i 2 kappa^2 (sqrt(g1_i) - sqrt(g0_i))^2.
double fisher_rao(const Eigen::VectorXd& gamma0, const Eigen::VectorXd& gamma1, double kappa);

/// The same cost from the time-discretized program (P steps, midpoint masses), minimized by
/// Newton's method per vertex.
double fisher_rao_discrete(const Eigen::VectorXd& gamma0, const Eigen::VectorXd& gamma1, double kappa,
                           int steps = 200);

/// 1/2 int_0^m |Q0(s) - Q1(s)|^2 ds for piecewise constant densities on [0, length]; exact for
/// the piecewise linear quantile functions.
double wasserstein_edge_1d(const Eigen::VectorXd& rho0, const Eigen::VectorXd& rho1, double length);

/// Edge transport with vertex masses frozen (boundary fluxes balance at every vertex).
double wasserstein_edges_kirchhoff(const Network& net, const GridSpec& grid,
                                   const Endpoints& endpoints, const SolverParams& params = {});

/// Relaxation in which vertex exchange costs nothing.
double w_zero(const Network& net, const GridSpec& grid, const Endpoints& endpoints,
              const SolverParams& params = {});

/// Bounded-Lipschitz distance of two cell-average densities on a common edge grid.
double bl_distance_edge(const Eigen::VectorXd& rho0, const Eigen::VectorXd& rho1, double dx);
inline double bl_distance_vertex(double gamma0, double gamma1) { return std::abs(gamma0 - gamma1); }

/// sum_j d_BL(rho^j_a, rho^j_b) + sum_i |gamma^i_a - gamma^i_b| between time slices a and b.
double bl_slice_distance(const TrajectoryField& field, int a, int b, const Network& net,
                         const GridSpec& grid);

/// 2 sqrt(2 (n + m)) max(1, 1/kappa).
double bl_constant(const Network& net, double kappa);

/// L2-in-time norm of the vertex exchange: sqrt(sum_k dt sum_i f_ik^2).
double exchange_norm(const TrajectoryField& field, const GridSpec& grid);

struct KappaSweep {
  std::vector<double> kappas;
  std::vector<double> values;
  std::vector<double> dual_values;
  std::vector<double> gaps;
  std::vector<double> flux_norms;
  std::vector<bool> converged;
  double reference = 0.0;     // W_E^2, only when the vertex masses agree
  bool has_reference = false;
  double mass_gap = 0.0;      // 1/2 sum_i |gamma1 - gamma0|^2
  std::vector<double> monotonicity_defects;  // max(0, value_k - value_{k+1}) per consecutive pair
};

/// One solve per kappa (increasing), run concurrently on up to NETOT_THREADS workers.
KappaSweep sweep_kappa(const Network& net, const GridSpec& grid, const Endpoints& endpoints,
                       const std::vector<double>& kappas, const SolverParams& params = {},
                       bool with_reference = true);

/// Worker cap: NETOT_THREADS when set and positive, else the hardware concurrency.
int worker_count();

}  // namespace netot
