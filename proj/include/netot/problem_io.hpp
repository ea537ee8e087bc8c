#pragma once

#include "netot/gradflow.hpp"
#include "netot/grid.hpp"
#include "netot/metrics.hpp"
#include "netot/network.hpp"
#include "netot/solver.hpp"

#include "json.hpp"

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace netot {

/// Malformed or inconsistent problem description; the message names the offending field.
class ProblemError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unreadable input or unwritable output.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Edge potential W(x): constant a, linear a x + b, or quadratic a (x - b)^2.
struct PotentialSpec {
  std::string type = "constant";
  double a = 0.0;
  double b = 0.0;

  double value(double x) const;
  double derivative(double x) const;
};

struct GradflowConfig {
  double kappa = 1.0;
  std::vector<PotentialSpec> potentials;  // per edge
  std::vector<VertexEnergy> vertex;       // per vertex
  double horizon = 1.0;
  double dt = 1e-3;
  int record_every = 1;

  EnergySpec energy() const;
};

struct Problem {
  Network network;
  std::vector<VertexSpec> vertex_specs;
  std::vector<EdgeSpec> edge_specs;
  GridSpec grid;
  Endpoints endpoints;
  double kappa = 1.0;
  SolverParams solver;
  std::optional<GradflowConfig> gradflow;
};

Problem parse_problem(const nlohmann::json& doc);
Problem load_problem(const std::filesystem::path& path);

/// Fully discretized form: densities as piecewise constant values, no normalization request.
nlohmann::json serialize_problem(const Problem& problem);

nlohmann::json report_to_json(const SolveReport& report);

/// edges.csv (edge_id,cell,t,rho), fluxes.csv (edge_id,face,t,flux),
/// vertices.csv (vertex_id,t,gamma), exchange.csv (vertex_id,t,f).
void write_geodesic_csv(const std::filesystem::path& dir, const TrajectoryField& field,
                        const Network& net, const GridSpec& grid);

void write_sweep_csv(std::ostream& out, const KappaSweep& sweep);

/// flow_edges.csv (t,edge_id,cell,rho) and flow_vertices.csv (t,vertex_id,gamma,energy).
void write_flow_csv(const std::filesystem::path& dir, const FlowTrajectory& traj, const Network& net,
                    const GridSpec& grid);

/// Formats with 17 significant digits.
std::string format_double(double v);

}  // namespace netot
