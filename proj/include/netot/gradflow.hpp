#pragma once

#include "netot/grid.hpp"
#include "netot/network.hpp"

#include <Eigen/Core>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <functional>
#include <vector>

namespace netot {

/// Vertex energy h: quadratic (c/2)(gamma - target)^2 or entropy gamma log gamma.
struct VertexEnergy {
  enum class Kind { Quadratic, Entropy };
  Kind kind = Kind::Quadratic;
  double c = 0.0;
  double target = 0.0;

  double value(double gamma) const;
  double derivative(double gamma) const;  // entropy variant floors gamma at 1e-12
};

/// Energy sum_j int rho log rho + rho W_j + sum_i h_i(gamma_i).
struct EnergySpec {
  std::vector<std::function<double(double)>> potential;             // W_j on [0, L_j]
  std::vector<std::function<double(double)>> potential_derivative;  // W_j'
  std::vector<VertexEnergy> vertex;
  double kappa = 1.0;

  /// W = 0 on every edge, h = 0 at every vertex.
  static EnergySpec flat(const Network& net, double kappa = 1.0);
  void check_conforms(const Network& net) const;
};

struct FlowState {
  std::vector<Eigen::VectorXd> rho;  // cell averages per edge
  Eigen::VectorXd gamma;
  double t = 0.0;

  double mass(const Network& net, const GridSpec& grid) const;
};

double energy_eval(const FlowState& state, const EnergySpec& energy, const Network& net,
                   const GridSpec& grid);

/// Largest admissible step for the explicit drift and exchange terms at this state.
double cfl_bound(const FlowState& state, const EnergySpec& energy, const Network& net,
                 const GridSpec& grid);

/// Semi-implicit integrator: diffusion implicit with one shared trace unknown u_i per vertex
/// (rho^j = u_i e^{-W_j} at the vertex), drift upwind and vertex exchange explicit. Each vertex
/// row balances the boundary fluxes against the exchange, so total mass is conserved exactly.
class FlowIntegrator {
 public:
  FlowIntegrator(const Network& net, const GridSpec& grid, const EnergySpec& energy, double dt);

  /// Throws std::domain_error when dt exceeds cfl_bound(state).
  FlowState step(const FlowState& state) const;
  /// Vertex trace values rho^j e^{W_j} implied by a state (mean over incident boundary cells).
  Eigen::VectorXd vertex_trace(const FlowState& state) const;

 private:
  const Network& net_;
  const GridSpec& grid_;
  const EnergySpec& energy_;
  double dt_;
  std::vector<int> offset_;
  int unknowns_ = 0;
  std::vector<Eigen::VectorXd> w_center_, dw_face_;
  std::vector<double> w_tail_, w_head_;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu_;
};

FlowState flow_step(const FlowState& state, double dt, const EnergySpec& energy, const Network& net,
                    const GridSpec& grid);

struct FlowTrajectory {
  std::vector<FlowState> states;
  std::vector<double> energy;
  double max_mass_drift = 0.0;  // largest |mass change| over a single step
  int energy_increases = 0;     // steps with energy rising by more than 1e-9
};

/// Integrates to time T; states are recorded every record_every steps (plus the final one).
FlowTrajectory simulate(const FlowState& initial, double T, double dt, const EnergySpec& energy,
                        const Network& net, const GridSpec& grid, int record_every = 1);

}  // namespace netot
