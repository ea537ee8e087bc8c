#include "netot/problem_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace netot {

using nlohmann::json;

double PotentialSpec::value(double x) const {
  if (type == "constant") return a;
  if (type == "linear") return a * x + b;
  if (type == "quadratic") return a * (x - b) * (x - b);
  throw ProblemError("unknown potential type '" + type + "'");
}

double PotentialSpec::derivative(double x) const {
  if (type == "constant") return 0.0;
  if (type == "linear") return a;
  if (type == "quadratic") return 2.0 * a * (x - b);
  throw ProblemError("unknown potential type '" + type + "'");
}

EnergySpec GradflowConfig::energy() const {
  EnergySpec e;
  for (const auto& p : potentials) {
    e.potential.push_back([p](double x) { return p.value(x); });
    e.potential_derivative.push_back([p](double x) { return p.derivative(x); });
  }
  e.vertex = vertex;
  e.kappa = kappa;
  return e;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ProblemError(where + ": expected an object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) throw ProblemError(where + ": unknown field '" + key + "'");
  }
}

const json& require(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.contains(key)) throw ProblemError(where + ": missing field '" + key + "'");
  return obj.at(key);
}

double number(const json& obj, const std::string& key, const std::string& where, double fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number()) throw ProblemError(where + "." + key + ": expected a number");
  return v.get<double>();
}

int integer(const json& obj, const std::string& key, const std::string& where, int fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_integer()) throw ProblemError(where + "." + key + ": expected an integer");
  return v.get<int>();
}

bool boolean(const json& obj, const std::string& key, const std::string& where, bool fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_boolean()) throw ProblemError(where + "." + key + ": expected a boolean");
  return v.get<bool>();
}

std::string text(const json& obj, const std::string& key, const std::string& where) {
  const json& v = require(obj, key, where);
  if (!v.is_string()) throw ProblemError(where + "." + key + ": expected a string");
  return v.get<std::string>();
}

Eigen::VectorXd density(const json& spec, int cells, double length, const std::string& where) {
  if (spec.is_null()) return Eigen::VectorXd::Zero(cells);
  const std::string type = text(spec, "type", where);
  if (type == "pwc") {
    check_keys(spec, {"type", "values"}, where);
    const json& vals = require(spec, "values", where);
    if (!vals.is_array()) throw ProblemError(where + ".values: expected an array");
    if (vals.size() != 1 && static_cast<int>(vals.size()) != cells) {
      throw ProblemError(where + ".values: expected 1 or " + std::to_string(cells) + " entries, got " +
                         std::to_string(vals.size()));
    }
    Eigen::VectorXd rho(cells);
    for (int c = 0; c < cells; ++c) {
      const json& v = vals.size() == 1 ? vals[0] : vals[c];
      if (!v.is_number()) throw ProblemError(where + ".values[" + std::to_string(c) + "]: expected a number");
      rho(c) = v.get<double>();
      if (rho(c) < 0.0) throw ProblemError(where + ".values[" + std::to_string(c) + "]: negative density");
    }
    return rho;
  }
  if (type == "gaussian") {
    check_keys(spec, {"type", "center", "width", "mass"}, where);
    const double center = number(spec, "center", where, 0.5 * length);
    const double width = number(spec, "width", where, 0.1 * length);
    const double mass = number(spec, "mass", where, 1.0);
    if (!(width > 0.0)) throw ProblemError(where + ".width: must be positive");
    if (mass < 0.0) throw ProblemError(where + ".mass: must be nonnegative");
    const double dx = length / cells;
    Eigen::VectorXd rho(cells);
    for (int c = 0; c < cells; ++c) {
      const double z = ((c + 0.5) * dx - center) / width;
      rho(c) = std::exp(-0.5 * z * z);
    }
    const double total = rho.sum() * dx;
    if (mass == 0.0) return Eigen::VectorXd::Zero(cells);
    if (!(total > 0.0)) throw ProblemError(where + ": gaussian has no mass on the edge");
    return rho * (mass / total);
  }
  throw ProblemError(where + ".type: unknown density type '" + type + "'");
}

SolverParams parse_solver(const json& s) {
  const std::string w = "solver";
  check_keys(s, {"max_iters", "penalty", "adaptive_penalty", "tol_ce", "tol_gap", "tol_consensus",
                 "relaxation", "density_floor", "check_every"},
             w);
  SolverParams p;
  p.max_iters = integer(s, "max_iters", w, p.max_iters);
  p.penalty = number(s, "penalty", w, p.penalty);
  p.adaptive_penalty = boolean(s, "adaptive_penalty", w, p.adaptive_penalty);
  p.tol_ce = number(s, "tol_ce", w, p.tol_ce);
  p.tol_gap = number(s, "tol_gap", w, p.tol_gap);
  p.tol_consensus = number(s, "tol_consensus", w, p.tol_consensus);
  p.relaxation = number(s, "relaxation", w, p.relaxation);
  p.density_floor = number(s, "density_floor", w, p.density_floor);
  p.check_every = integer(s, "check_every", w, p.check_every);
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    throw ProblemError(e.what());
  }
  return p;
}

GradflowConfig parse_gradflow(const json& g, const Problem& pb) {
  const std::string w = "gradflow";
  check_keys(g, {"kappa", "T", "dt", "record_every", "potentials", "vertex_energy"}, w);
  GradflowConfig cfg;
  cfg.kappa = number(g, "kappa", w, pb.kappa);
  cfg.horizon = number(g, "T", w, cfg.horizon);
  cfg.dt = number(g, "dt", w, cfg.dt);
  cfg.record_every = integer(g, "record_every", w, cfg.record_every);
  if (!(cfg.kappa > 0.0)) throw ProblemError(w + ".kappa: must be positive");
  cfg.potentials.assign(pb.network.num_edges(), PotentialSpec{});
  cfg.vertex.assign(pb.network.num_vertices(), VertexEnergy{});
  if (g.contains("potentials")) {
    const json& pots = g.at("potentials");
    if (!pots.is_object()) throw ProblemError(w + ".potentials: expected an object keyed by edge id");
    for (const auto& [id, spec] : pots.items()) {
      const std::string at = w + ".potentials." + id;
      const int j = pb.network.index_of_edge(id);
      if (j < 0) throw ProblemError(at + ": unknown edge");
      check_keys(spec, {"type", "a", "b"}, at);
      PotentialSpec p;
      p.type = text(spec, "type", at);
      if (p.type != "constant" && p.type != "linear" && p.type != "quadratic") {
        throw ProblemError(at + ".type: unknown potential type '" + p.type + "'");
      }
      p.a = number(spec, "a", at, 0.0);
      p.b = number(spec, "b", at, 0.0);
      cfg.potentials[j] = p;
    }
  }
  if (g.contains("vertex_energy")) {
    const json& ves = g.at("vertex_energy");
    if (!ves.is_object()) throw ProblemError(w + ".vertex_energy: expected an object keyed by vertex id");
    for (const auto& [id, spec] : ves.items()) {
      const std::string at = w + ".vertex_energy." + id;
      const int i = pb.network.index_of_vertex(id);
      if (i < 0) throw ProblemError(at + ": unknown vertex");
      check_keys(spec, {"type", "c", "target"}, at);
      VertexEnergy v;
      const std::string type = text(spec, "type", at);
      if (type == "quadratic") v.kind = VertexEnergy::Kind::Quadratic;
      else if (type == "entropy") v.kind = VertexEnergy::Kind::Entropy;
      else throw ProblemError(at + ".type: unknown vertex energy '" + type + "'");
      v.c = number(spec, "c", at, 0.0);
      v.target = number(spec, "target", at, 0.0);
      cfg.vertex[i] = v;
    }
  }
  return cfg;
}

json solver_to_json(const SolverParams& p) {
  return {{"max_iters", p.max_iters},       {"penalty", p.penalty},
          {"adaptive_penalty", p.adaptive_penalty}, {"tol_ce", p.tol_ce},
          {"tol_gap", p.tol_gap},           {"tol_consensus", p.tol_consensus},
          {"relaxation", p.relaxation},     {"density_floor", p.density_floor},
          {"check_every", p.check_every}};
}

json pwc(const Eigen::VectorXd& rho) {
  json vals = json::array();
  for (Eigen::Index c = 0; c < rho.size(); ++c) vals.push_back(rho(c));
  return {{"type", "pwc"}, {"values", vals}};
}

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p);
  if (!out) throw IoError("cannot write " + p.string());
  return out;
}

}  // namespace

Problem parse_problem(const json& doc) {
  check_keys(doc, {"network", "discretization", "kappa", "normalize", "solver", "gradflow"}, "problem");
  Problem pb;
  const json& netj = require(doc, "network", "problem");
  check_keys(netj, {"vertices", "edges"}, "network");
  const json& vj = require(netj, "vertices", "network");
  const json& ej = require(netj, "edges", "network");
  if (!vj.is_array() || !ej.is_array()) throw ProblemError("network: vertices and edges must be arrays");

  std::map<std::string, int> vindex;
  std::vector<double> g0, g1;
  for (std::size_t i = 0; i < vj.size(); ++i) {
    const std::string at = "network.vertices[" + std::to_string(i) + "]";
    check_keys(vj[i], {"id", "x", "y", "gamma0", "gamma1"}, at);
    VertexSpec v{text(vj[i], "id", at), number(vj[i], "x", at, 0.0), number(vj[i], "y", at, 0.0)};
    if (!vindex.emplace(v.id, static_cast<int>(i)).second) throw ProblemError(at + ": duplicate id '" + v.id + "'");
    g0.push_back(number(vj[i], "gamma0", at, 0.0));
    g1.push_back(number(vj[i], "gamma1", at, 0.0));
    if (g0.back() < 0.0 || g1.back() < 0.0) throw ProblemError(at + ": negative vertex mass");
    pb.vertex_specs.push_back(v);
  }
  std::set<std::string> eids;
  for (std::size_t j = 0; j < ej.size(); ++j) {
    const std::string at = "network.edges[" + std::to_string(j) + "]";
    check_keys(ej[j], {"id", "tail", "head", "length", "rho0", "rho1"}, at);
    EdgeSpec e;
    e.id = text(ej[j], "id", at);
    if (!eids.insert(e.id).second) throw ProblemError(at + ": duplicate id '" + e.id + "'");
    for (const char* end : {"tail", "head"}) {
      const std::string vid = text(ej[j], end, at);
      auto it = vindex.find(vid);
      if (it == vindex.end()) throw ProblemError(at + "." + end + ": unknown vertex '" + vid + "'");
      (std::string(end) == "tail" ? e.tail : e.head) = it->second;
    }
    if (ej[j].contains("length")) e.length = number(ej[j], "length", at, 0.0);
    pb.edge_specs.push_back(e);
  }
  pb.network = Network::build(pb.vertex_specs, pb.edge_specs);

  std::vector<int> cells(pb.network.num_edges(), 32);
  int steps = 16;
  if (doc.contains("discretization")) {
    const json& dj = doc.at("discretization");
    check_keys(dj, {"cells", "dx", "steps"}, "discretization");
    steps = integer(dj, "steps", "discretization", steps);
    if (dj.contains("cells") && dj.contains("dx")) {
      throw ProblemError("discretization: give either cells or dx, not both");
    }
    if (dj.contains("cells")) {
      const json& cj = dj.at("cells");
      if (cj.is_number_integer()) {
        cells.assign(pb.network.num_edges(), cj.get<int>());
      } else if (cj.is_object()) {
        for (const auto& [id, n] : cj.items()) {
          const int j = pb.network.index_of_edge(id);
          if (j < 0) throw ProblemError("discretization.cells." + id + ": unknown edge");
          if (!n.is_number_integer()) throw ProblemError("discretization.cells." + id + ": expected an integer");
          cells[j] = n.get<int>();
        }
      } else {
        throw ProblemError("discretization.cells: expected an integer or an object keyed by edge id");
      }
    }
    if (dj.contains("dx")) {
      const double dx = number(dj, "dx", "discretization", 0.0);
      if (!(dx > 0.0)) throw ProblemError("discretization.dx: must be positive");
      for (int j = 0; j < pb.network.num_edges(); ++j) {
        cells[j] = std::max(1, static_cast<int>(std::lround(pb.network.edge(j).length / dx)));
      }
    }
  }
  try {
    pb.grid = GridSpec::make(pb.network, cells, steps);
  } catch (const std::invalid_argument& e) {
    throw ProblemError(std::string("discretization: ") + e.what());
  }

  for (int j = 0; j < pb.network.num_edges(); ++j) {
    const std::string at = "network.edges[" + std::to_string(j) + "]";
    const json& e = ej[j];
    const double L = pb.network.edge(j).length;
    pb.endpoints.initial.edge_densities.push_back(
        density(e.contains("rho0") ? e.at("rho0") : json(), cells[j], L, at + ".rho0"));
    pb.endpoints.terminal.edge_densities.push_back(
        density(e.contains("rho1") ? e.at("rho1") : json(), cells[j], L, at + ".rho1"));
  }
  pb.endpoints.initial.vertex_masses = Eigen::Map<Eigen::VectorXd>(g0.data(), static_cast<Eigen::Index>(g0.size()));
  pb.endpoints.terminal.vertex_masses = Eigen::Map<Eigen::VectorXd>(g1.data(), static_cast<Eigen::Index>(g1.size()));

  const bool normalize = boolean(doc, "normalize", "problem", false);
  for (auto* mu : {&pb.endpoints.initial, &pb.endpoints.terminal}) {
    const char* name = mu == &pb.endpoints.initial ? "initial" : "terminal";
    const double m = total_mass(*mu, pb.network);
    if (normalize) {
      if (!(m > 0.0)) throw ProblemError(std::string(name) + " data has zero mass");
      for (auto& r : mu->edge_densities) r /= m;
      mu->vertex_masses /= m;
    } else if (std::abs(m - 1.0) > 1e-9) {
      throw ProblemError(std::string(name) + " data has total mass " + format_double(m) +
                         ", expected 1 (set \"normalize\": true to rescale)");
    }
  }

  pb.kappa = number(doc, "kappa", "problem", 1.0);
  if (!(pb.kappa > 0.0)) throw ProblemError("kappa: must be positive");
  if (doc.contains("solver")) pb.solver = parse_solver(doc.at("solver"));
  if (doc.contains("gradflow")) pb.gradflow = parse_gradflow(doc.at("gradflow"), pb);
  return pb;
}

Problem load_problem(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ProblemError(path.string() + ": invalid JSON: " + e.what());
  }
  return parse_problem(doc);
}

json serialize_problem(const Problem& pb) {
  const Network& net = pb.network;
  json vertices = json::array();
  for (int i = 0; i < net.num_vertices(); ++i) {
    const auto& v = pb.vertex_specs[i];
    vertices.push_back({{"id", v.id},
                        {"x", v.x},
                        {"y", v.y},
                        {"gamma0", pb.endpoints.initial.vertex_masses(i)},
                        {"gamma1", pb.endpoints.terminal.vertex_masses(i)}});
  }
  json edges = json::array();
  json cells = json::object();
  for (int j = 0; j < net.num_edges(); ++j) {
    const auto& e = pb.edge_specs[j];
    json ej = {{"id", e.id},
               {"tail", net.vertex(e.tail).id},
               {"head", net.vertex(e.head).id},
               {"rho0", pwc(pb.endpoints.initial.edge_densities[j])},
               {"rho1", pwc(pb.endpoints.terminal.edge_densities[j])}};
    if (e.length) ej["length"] = *e.length;
    edges.push_back(ej);
    cells[e.id] = pb.grid.cells[j];
  }
  json doc = {{"network", {{"vertices", vertices}, {"edges", edges}}},
              {"discretization", {{"cells", cells}, {"steps", pb.grid.steps}}},
              {"kappa", pb.kappa},
              {"solver", solver_to_json(pb.solver)}};
  if (pb.gradflow) {
    const auto& g = *pb.gradflow;
    json pots = json::object();
    for (int j = 0; j < net.num_edges(); ++j) {
      pots[net.edge(j).id] = {{"type", g.potentials[j].type}, {"a", g.potentials[j].a}, {"b", g.potentials[j].b}};
    }
    json ves = json::object();
    for (int i = 0; i < net.num_vertices(); ++i) {
      const auto& v = g.vertex[i];
      ves[net.vertex(i).id] = {{"type", v.kind == VertexEnergy::Kind::Entropy ? "entropy" : "quadratic"},
                               {"c", v.c},
                               {"target", v.target}};
    }
    doc["gradflow"] = {{"kappa", g.kappa},      {"T", g.horizon},        {"dt", g.dt},
                       {"record_every", g.record_every}, {"potentials", pots}, {"vertex_energy", ves}};
  }
  return doc;
}

json report_to_json(const SolveReport& r) {
  return {{"value", r.value},
          {"dual_value", r.dual_value},
          {"gap", r.gap},
          {"iterations", r.iterations},
          {"converged", r.converged},
          {"edge_action", r.action.edge},
          {"vertex_action", r.action.vertex},
          {"ce_residual", r.ce.max()},
          {"consensus_residual", r.consensus_residual}};
}

void write_geodesic_csv(const std::filesystem::path& dir, const TrajectoryField& field,
                        const Network& net, const GridSpec& grid) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  auto edges = open_out(dir / "edges.csv");
  edges << "edge_id,cell,t,rho\n";
  for (int j = 0; j < net.num_edges(); ++j) {
    for (int c = 0; c < grid.cells[j]; ++c) {
      for (int k = 0; k <= grid.steps; ++k) {
        edges << net.edge(j).id << ',' << c << ',' << format_double(grid.time_node(k)) << ','
              << format_double(field.rho[j](k, c)) << '\n';
      }
    }
  }
  auto fluxes = open_out(dir / "fluxes.csv");
  fluxes << "edge_id,face,t,flux\n";
  for (int j = 0; j < net.num_edges(); ++j) {
    for (int f = 0; f <= grid.cells[j]; ++f) {
      for (int k = 0; k < grid.steps; ++k) {
        fluxes << net.edge(j).id << ',' << f << ',' << format_double(grid.time_mid(k)) << ','
               << format_double(field.flux[j](k, f)) << '\n';
      }
    }
  }
  auto verts = open_out(dir / "vertices.csv");
  verts << "vertex_id,t,gamma\n";
  auto exch = open_out(dir / "exchange.csv");
  exch << "vertex_id,t,f\n";
  for (int i = 0; i < net.num_vertices(); ++i) {
    for (int k = 0; k <= grid.steps; ++k) {
      verts << net.vertex(i).id << ',' << format_double(grid.time_node(k)) << ','
            << format_double(field.gamma(k, i)) << '\n';
    }
    for (int k = 0; k < grid.steps; ++k) {
      exch << net.vertex(i).id << ',' << format_double(grid.time_mid(k)) << ','
           << format_double(field.exchange(k, i)) << '\n';
    }
  }
  if (!edges || !fluxes || !verts || !exch) throw IoError("write failed in " + dir.string());
}

void write_sweep_csv(std::ostream& out, const KappaSweep& sw) {
  out << "kappa,value,dual_value,gap,flux_norm,reference,value_over_kappa2,mass_gap,converged\n";
  for (std::size_t k = 0; k < sw.kappas.size(); ++k) {
    const double kap = sw.kappas[k];
    out << format_double(kap) << ',' << format_double(sw.values[k]) << ','
        << format_double(sw.dual_values[k]) << ',' << format_double(sw.gaps[k]) << ','
        << format_double(sw.flux_norms[k]) << ','
        << (sw.has_reference ? format_double(sw.reference) : std::string()) << ','
        << format_double(sw.values[k] / (kap * kap)) << ',' << format_double(sw.mass_gap) << ','
        << (sw.converged[k] ? 1 : 0) << '\n';
  }
}

void write_flow_csv(const std::filesystem::path& dir, const FlowTrajectory& traj, const Network& net,
                    const GridSpec& grid) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  auto edges = open_out(dir / "flow_edges.csv");
  edges << "t,edge_id,cell,rho\n";
  for (int j = 0; j < net.num_edges(); ++j) {
    for (int c = 0; c < grid.cells[j]; ++c) {
      for (const auto& s : traj.states) {
        edges << format_double(s.t) << ',' << net.edge(j).id << ',' << c << ','
              << format_double(s.rho[j](c)) << '\n';
      }
    }
  }
  auto verts = open_out(dir / "flow_vertices.csv");
  verts << "t,vertex_id,gamma,energy\n";
  for (int i = 0; i < net.num_vertices(); ++i) {
    for (std::size_t n = 0; n < traj.states.size(); ++n) {
      verts << format_double(traj.states[n].t) << ',' << net.vertex(i).id << ','
            << format_double(traj.states[n].gamma(i)) << ',' << format_double(traj.energy[n]) << '\n';
    }
  }
  if (!edges || !verts) throw IoError("write failed in " + dir.string());
}

}  // namespace netot
