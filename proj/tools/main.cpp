#include "netot/gradflow.hpp"
#include "netot/metrics.hpp"
#include "netot/problem_io.hpp"
#include "netot/solver.hpp"
#include "netot/verify/acceptance.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kValidation = 1;
constexpr int kNotConverged = 2;
constexpr int kIo = 3;

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw netot::IoError("cannot create directory " + dir.string());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw netot::IoError("cannot write " + path.string());
  out << text;
  if (!out) throw netot::IoError("cannot write " + path.string());
}

void emit(const std::string& text, const std::string& out) {
  if (out.empty()) {
    std::cout << text;
  } else {
    write_text(out, text);
  }
}

bool masses_agree(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a - b).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, a.cwiseAbs().maxCoeff());
}

netot::SolveReport solve(const netot::Problem& pb) {
  return netot::solve_transport(pb.network, pb.grid, pb.endpoints, pb.kappa, netot::VertexMode::Active,
                                pb.solver);
}

int cmd_distance(const std::string& file, const std::string& out) {
  const netot::Problem pb = netot::load_problem(file);
  const netot::SolveReport rep = solve(pb);
  emit(netot::report_to_json(rep).dump(2) + "\n", out);
  return rep.converged ? kOk : kNotConverged;
}

int cmd_geodesic(const std::string& file, const fs::path& dir) {
  const netot::Problem pb = netot::load_problem(file);
  const netot::SolveReport rep = solve(pb);
  ensure_dir(dir);
  write_text(dir / "report.json", netot::report_to_json(rep).dump(2) + "\n");
  netot::write_geodesic_csv(dir, rep.geodesic, pb.network, pb.grid);
  return rep.converged ? kOk : kNotConverged;
}

int cmd_sweep(const std::string& file, const std::vector<double>& kappas, const std::string& out) {
  const netot::Problem pb = netot::load_problem(file);
  if (kappas.empty()) throw std::invalid_argument("--kappas: at least one value required");
  for (double k : kappas) {
    if (!(k > 0.0)) throw std::invalid_argument("--kappas: values must be positive");
  }
  const netot::KappaSweep sw = netot::sweep_kappa(pb.network, pb.grid, pb.endpoints, kappas, pb.solver);
  std::ostringstream s;
  netot::write_sweep_csv(s, sw);
  emit(s.str(), out);
  for (bool c : sw.converged) {
    if (!c) return kNotConverged;
  }
  return kOk;
}

int cmd_metrics(const std::string& file, const std::string& out) {
  const netot::Problem pb = netot::load_problem(file);
  const auto& net = pb.network;
  const auto& grid = pb.grid;
  const auto& a = pb.endpoints.initial;
  const auto& b = pb.endpoints.terminal;
  json doc;
  doc["fisher_rao"] = netot::fisher_rao(a.vertex_masses, b.vertex_masses, pb.kappa);

  bool converged = true;
  if (masses_agree(a.vertex_masses, b.vertex_masses)) {
    const netot::SolveReport rep =
        netot::solve_transport(net, grid, pb.endpoints, pb.kappa, netot::VertexMode::Frozen, pb.solver);
    converged = rep.converged;
    doc["wasserstein_edges"] = rep.value;
  } else {
    doc["wasserstein_edges"] = nullptr;
  }

  json per_edge = json::object();
  for (int j = 0; j < net.num_edges(); ++j) {
    const double L = net.edge(j).length;
    const double m0 = netot::edge_mass(a.edge_densities[j], L);
    const double m1 = netot::edge_mass(b.edge_densities[j], L);
    if (std::abs(m0 - m1) <= 1e-10 * std::max(1.0, m0)) {
      per_edge[net.edge(j).id] = netot::wasserstein_edge_1d(a.edge_densities[j], b.edge_densities[j], L);
    } else {
      per_edge[net.edge(j).id] = nullptr;
    }
  }
  doc["per_edge_1d"] = per_edge;

  json bl_edges = json::object(), bl_vertices = json::object();
  double total = 0.0;
  for (int j = 0; j < net.num_edges(); ++j) {
    const double d = netot::bl_distance_edge(a.edge_densities[j], b.edge_densities[j], grid.dx[j]);
    bl_edges[net.edge(j).id] = d;
    total += d;
  }
  for (int i = 0; i < net.num_vertices(); ++i) {
    const double d = netot::bl_distance_vertex(a.vertex_masses(i), b.vertex_masses(i));
    bl_vertices[net.vertex(i).id] = d;
    total += d;
  }
  doc["bl_distances"] = {{"edges", bl_edges}, {"vertices", bl_vertices}, {"total", total}};
  emit(doc.dump(2) + "\n", out);
  return converged ? kOk : kNotConverged;
}

int cmd_gradflow(const std::string& file, double T, double dt, const fs::path& dir) {
  const netot::Problem pb = netot::load_problem(file);
  netot::GradflowConfig cfg;
  if (pb.gradflow) {
    cfg = *pb.gradflow;
  } else {
    cfg.kappa = pb.kappa;
    cfg.potentials.assign(pb.network.num_edges(), netot::PotentialSpec{});
    cfg.vertex.assign(pb.network.num_vertices(), netot::VertexEnergy{});
  }
  if (T >= 0.0) cfg.horizon = T;
  if (dt > 0.0) cfg.dt = dt;
  const netot::EnergySpec energy = cfg.energy();
  netot::FlowState s;
  s.rho = pb.endpoints.initial.edge_densities;
  s.gamma = pb.endpoints.initial.vertex_masses;
  const netot::FlowTrajectory traj =
      netot::simulate(s, cfg.horizon, cfg.dt, energy, pb.network, pb.grid, cfg.record_every);
  ensure_dir(dir);
  netot::write_flow_csv(dir, traj, pb.network, pb.grid);
  return kOk;
}

int cmd_verify(bool quick) {
  netot::verify::SuiteOptions opt;
  opt.quick = quick;
  opt.log = &std::cout;
  const auto results = netot::verify::run_acceptance(opt);
  int failed = 0;
  for (const auto& r : results) failed += r.passed ? 0 : 1;
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << "\n";
  return failed == 0 ? kOk : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dynamic optimal transport on metric graphs with vertex storage"};
  app.require_subcommand(1);

  std::string file, out, dir = ".";
  std::vector<double> kappas;
  double T = -1.0, dt = -1.0;
  bool quick = false;

  auto* distance = app.add_subcommand("distance", "Solve and print the JSON report");
  distance->add_option("file", file, "Problem file")->required();
  distance->add_option("--out", out, "Write the report here instead of stdout");

  auto* geodesic = app.add_subcommand("geodesic", "Solve and write report.json plus CSV frames");
  geodesic->add_option("file", file, "Problem file")->required();
  geodesic->add_option("--out", dir, "Output directory")->required();

  auto* sweep = app.add_subcommand("sweep-kappa", "Solve for several kappa values, CSV output");
  sweep->add_option("file", file, "Problem file")->required();
  sweep->add_option("--kappas", kappas, "Comma separated kappa values")->required()->delimiter(',');
  sweep->add_option("--out", out, "Write the CSV here instead of stdout");

  auto* metrics = app.add_subcommand("metrics", "Comparison metrics between the endpoints");
  metrics->add_option("file", file, "Problem file")->required();
  metrics->add_option("--out", out, "Write the JSON here instead of stdout");

  auto* gradflow = app.add_subcommand("gradflow", "Integrate the gradient flow from the initial measure");
  gradflow->add_option("file", file, "Problem file")->required();
  gradflow->add_option("--T", T, "Time horizon");
  gradflow->add_option("--dt", dt, "Time step");
  gradflow->add_option("--out", dir, "Output directory");

  auto* verify = app.add_subcommand("verify", "Run the acceptance suite");
  verify->add_flag("--quick", quick, "Smaller grids and fewer instances");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kValidation;
  }

  try {
    if (*distance) return cmd_distance(file, out);
    if (*geodesic) return cmd_geodesic(file, dir);
    if (*sweep) return cmd_sweep(file, kappas, out);
    if (*metrics) return cmd_metrics(file, out);
    if (*gradflow) return cmd_gradflow(file, T, dt, dir);
    if (*verify) return cmd_verify(quick);
  } catch (const netot::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  }
  return kValidation;
}
