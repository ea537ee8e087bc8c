#include "netot/verify/instances.hpp"

#include <cmath>

namespace netot::verify {

Network y_graph() {
  return Network::build({{"V1", 0.0, 0.0}, {"V2", -1.0, 0.0}, {"V3", 1.0, 0.0}, {"V4", 0.0, 1.0}},
                        {{"E1", 1, 0, {}}, {"E2", 0, 2, {}}, {"E3", 0, 3, {}}});
}

Network path_graph(int edges) {
  std::vector<VertexSpec> v;
  std::vector<EdgeSpec> e;
  for (int i = 0; i <= edges; ++i) v.push_back({"V" + std::to_string(i + 1), double(i), 0.0});
  for (int j = 0; j < edges; ++j) e.push_back({"E" + std::to_string(j + 1), j, j + 1, {}});
  return Network::build(v, e);
}

Network single_edge(double length) {
  return Network::build({{"V1", 0.0, 0.0}, {"V2", length, 0.0}}, {{"E1", 0, 1, length}});
}

NetworkMeasure zero_measure(const Network& net, const GridSpec& grid) {
  NetworkMeasure mu;
  for (int j = 0; j < net.num_edges(); ++j) mu.edge_densities.push_back(Eigen::VectorXd::Zero(grid.cells[j]));
  mu.vertex_masses = Eigen::VectorXd::Zero(net.num_vertices());
  return mu;
}

NetworkMeasure random_measure(const Network& net, const GridSpec& grid, std::mt19937& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  NetworkMeasure mu = zero_measure(net, grid);
  for (int j = 0; j < net.num_edges(); ++j) {
    const double L = net.edge(j).length;
    const double base = 0.2 + 0.3 * unit(rng);
    double c[2], w[2], a[2];
    for (int b = 0; b < 2; ++b) {
      c[b] = L * unit(rng);
      w[b] = L * (0.08 + 0.12 * unit(rng));
      a[b] = 2.0 * unit(rng);
    }
    for (int k = 0; k < grid.cells[j]; ++k) {
      const double x = grid.cell_center(j, k);
      double v = base;
      for (int b = 0; b < 2; ++b) v += a[b] * std::exp(-0.5 * std::pow((x - c[b]) / w[b], 2));
      mu.edge_densities[j](k) = v;
    }
  }
  for (int i = 0; i < net.num_vertices(); ++i) mu.vertex_masses(i) = 0.05 + 0.15 * unit(rng);
  normalize(mu, net);
  return mu;
}

NetworkMeasure bump_measure(const Network& net, const GridSpec& grid, int edge, double center,
                            double width) {
  NetworkMeasure mu = zero_measure(net, grid);
  for (int k = 0; k < grid.cells[edge]; ++k) {
    mu.edge_densities[edge](k) = std::exp(-0.5 * std::pow((grid.cell_center(edge, k) - center) / width, 2));
  }
  normalize(mu, net);
  return mu;
}

void normalize(NetworkMeasure& mu, const Network& net) {
  const double m = total_mass(mu, net);
  for (auto& r : mu.edge_densities) r /= m;
  mu.vertex_masses /= m;
}

void normalize_edges(NetworkMeasure& mu, const Network& net) {
  const double target = 1.0 - mu.vertex_masses.sum();
  double m = 0.0;
  for (int j = 0; j < net.num_edges(); ++j) m += edge_mass(mu.edge_densities[j], net.edge(j).length);
  for (auto& r : mu.edge_densities) r *= target / m;
}

}  // namespace netot::verify
