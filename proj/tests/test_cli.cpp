#include "doctest.h"

#include "json.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string kCli = NETOT_CLI;
const fs::path kData = NETOT_DATA;

fs::path scratch() {
  const fs::path dir = fs::temp_directory_path() / "netot_cli_test";
  fs::create_directories(dir);
  return dir;
}

int run(const std::string& args) {
  const std::string cmd = "\"" + kCli + "\" " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream s(line);
  std::string cell;
  while (std::getline(s, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

TEST_CASE("distance on identical endpoints") {
  const fs::path out = scratch() / "identity.json";
  CHECK(run("distance " + (kData / "identity.json").string() + " --out " + out.string()) == 0);
  const json r = json::parse(slurp(out));
  CHECK(r.at("value").get<double>() <= 1e-6);
  CHECK(r.at("converged").get<bool>());
  for (const char* key : {"dual_value", "gap", "iterations", "edge_action", "vertex_action", "ce_residual",
                          "consensus_residual"}) {
    CHECK(r.contains(key));
  }
}

TEST_CASE("kappa sweep respects the vertex mass floor") {
  const fs::path out = scratch() / "sweep.csv";
  CHECK(run("sweep-kappa " + (kData / "incompatible.json").string() + " --kappas 1,2,4 --out " +
            out.string()) == 0);
  std::stringstream s(slurp(out));
  std::string line;
  std::getline(s, line);
  const auto header = split(line);
  REQUIRE(header.size() == 9);
  CHECK(header[6] == "value_over_kappa2");
  CHECK(header[7] == "mass_gap");
  int rows = 0;
  while (std::getline(s, line)) {
    const auto cells = split(line);
    REQUIRE(cells.size() == 9);
    CHECK(std::stod(cells[5].empty() ? "0" : cells[5]) == 0.0);
    CHECK(std::stod(cells[6]) >= std::stod(cells[7]) * (1 - 1e-6));
    ++rows;
  }
  CHECK(rows == 3);
}

TEST_CASE("geodesic output directory") {
  const fs::path dir = scratch() / "geo";
  fs::remove_all(dir);
  CHECK(run("geodesic " + (kData / "ygraph.json").string() + " --out " + dir.string()) == 0);
  for (const char* f : {"report.json", "edges.csv", "fluxes.csv", "vertices.csv", "exchange.csv"}) {
    CHECK(fs::exists(dir / f));
  }
  const json r = json::parse(slurp(dir / "report.json"));
  CHECK(r.at("value").get<double>() > 0.0);
  CHECK(r.at("edge_action").is_number());
}

TEST_CASE("metrics document") {
  const fs::path out = scratch() / "metrics.json";
  CHECK(run("metrics " + (kData / "ygraph.json").string() + " --out " + out.string()) == 0);
  const json m = json::parse(slurp(out));
  CHECK(m.at("fisher_rao").get<double>() == doctest::Approx(0.0));
  CHECK(m.at("wasserstein_edges").get<double>() > 0.0);
  CHECK(m.at("per_edge_1d").at("E1").is_null());
  CHECK(m.at("bl_distances").at("total").get<double>() > 0.0);
  CHECK(m.at("bl_distances").at("vertices").size() == 4);

  CHECK(run("metrics " + (kData / "incompatible.json").string() + " --out " + out.string()) == 0);
  const json n = json::parse(slurp(out));
  CHECK(n.at("fisher_rao").get<double>() > 0.0);
  CHECK(n.at("wasserstein_edges").is_null());
}

TEST_CASE("gradflow tables") {
  const fs::path dir = scratch() / "flow";
  fs::remove_all(dir);
  CHECK(run("gradflow " + (kData / "ygraph.json").string() + " --T 0.05 --out " + dir.string()) == 0);
  CHECK(fs::exists(dir / "flow_edges.csv"));
  CHECK(fs::exists(dir / "flow_vertices.csv"));
  CHECK(slurp(dir / "flow_vertices.csv").rfind("t,vertex_id,gamma,energy", 0) == 0);
}

TEST_CASE("exit codes") {
  const fs::path bad = scratch() / "bad.json";
  std::ofstream(bad) << R"({"network": {"vertices": [], "edges": []}, "colour": 1})";
  CHECK(run("distance " + bad.string()) == 1);
  CHECK(run("distance") == 1);
  CHECK(run("sweep-kappa " + (kData / "identity.json").string() + " --kappas 1,-2") == 1);
  CHECK(run("distance " + (kData / "missing.json").string()) == 3);
  CHECK(run("distance " + (kData / "identity.json").string() + " --out /proc/netot/x.json") == 3);
}
