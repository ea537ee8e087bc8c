#pragma once

#include "netot/action.hpp"
#include "netot/grid.hpp"
#include "netot/network.hpp"

#include <Eigen/Core>

#include <functional>
#include <limits>
#include <vector>

namespace netot {

/// How vertex masses enter the problem.
///  Active: exchange f costs kappa^2 |f|^2 / (2 gamma).
///  Free:   exchange is unpriced (the kappa = 0 relaxation).
///  Frozen: gamma stays at its initial value, so the incident boundary fluxes obey Kirchhoff's law.
enum class VertexMode { Active, Free, Frozen };

struct SolverParams {
  int max_iters = 20000;
  double penalty = 1.0;           // initial augmented-Lagrangian penalty
  bool adaptive_penalty = true;   // residual balancing
  double tol_ce = 1e-8;
  double tol_gap = 1e-6;          // relative duality gap
  double tol_consensus = 1e-5;    // splitting residual, relative to the largest iterate entry
  double relaxation = 1.6;        // over-relaxation in [1, 2)
  double density_floor = 0.0;
  int check_every = 10;

  void validate() const;
};

/// Potentials of the discrete problem. phi lives at cell centres and time midpoints (one value per
/// discrete continuity equation), psi at vertex time midpoints. trace is the value edge potentials
/// take at a vertex; the Lagrange multiplier of the vertex constraint is its negative.
struct DualPotentials {
  std::vector<Eigen::MatrixXd> phi;  // per edge, P x N_j
  Eigen::MatrixXd psi;               // P x n
  Eigen::MatrixXd trace;             // P x n

  static DualPotentials zeros(const Network& net, const GridSpec& grid);
  /// Samples continuous potentials; the trace is the mean of the incident edge potentials at the
  /// vertex.
  static DualPotentials sample(const Network& net, const GridSpec& grid,
                               const std::function<double(int, double, double)>& phi,
                               const std::function<double(int, double)>& psi);

  Eigen::MatrixXd multiplier() const { return -trace; }
  void check_conforms(const Network& net, const GridSpec& grid) const;
};

struct IterationRecord {
  int iteration = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double value = 0.0;
  double dual_value = 0.0;
  double gap = 0.0;
  double penalty = 0.0;
};

struct SolveReport {
  double value = 0.0;       // action of the splitting iterate
  double dual_value = 0.0;  // certified lower bound
  double gap = 0.0;
  TrajectoryField geodesic;  // satisfies the discrete continuity equation exactly
  DualPotentials duals;
  ActionBreakdown action;    // split of value by edge and vertex
  CEResidual ce;
  double consensus_residual = 0.0;
  std::vector<IterationRecord> history;
  int iterations = 0;
  bool converged = false;
  VertexMode mode = VertexMode::Active;
  double kappa = 1.0;
};

/// Checks nonnegativity, shapes against the grid and equal total mass (relative 1e-12).
void check_endpoints(const Endpoints& endpoints, const Network& net, const GridSpec& grid);

/// Squared distance between probability measures (unit mass) with priced vertex exchange.
SolveReport solve_geodesic(const Network& net, const GridSpec& grid, const Endpoints& endpoints,
                           double kappa, const SolverParams& params = {});

/// Same discretization under any vertex mode; endpoints need equal, not unit, mass. Frozen
/// requires identical initial and terminal vertex masses.
SolveReport solve_transport(const Network& net, const GridSpec& grid, const Endpoints& endpoints,
                            double kappa, VertexMode mode, const SolverParams& params = {});

struct HJResidual {
  double edge = 0.0;
  double vertex = 0.0;
};

/// Positive part of the discrete Hamilton-Jacobi inequalities, evaluated at interior time nodes.
HJResidual hj_residual(const DualPotentials& duals, double kappa, const Network& net,
                       const GridSpec& grid, VertexMode mode = VertexMode::Active);

/// Dual objective of the discrete problem; -infinity when the potentials violate the
/// Hamilton-Jacobi inequalities by more than 1e-9 anywhere.
double eval_dual_objective(const DualPotentials& duals, const Endpoints& endpoints, double kappa,
                           const Network& net, const GridSpec& grid,
                           VertexMode mode = VertexMode::Active);

struct OptimalityResidual {
  double r1 = 0.0;  // weighted L2 of F - rho d_x phi at cell centres
  double r2 = 0.0;  // max |kappa^2 f - gamma (psi - trace)|
};

OptimalityResidual optimality_residual(const TrajectoryField& field, const DualPotentials& duals,
                                       double kappa, const Network& net, const GridSpec& grid);

}  // namespace netot
