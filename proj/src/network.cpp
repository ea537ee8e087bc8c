#include "netot/network.hpp"

#include <numeric>
#include <sstream>

namespace netot {

Network Network::build(std::vector<VertexSpec> vertices, std::vector<EdgeSpec> edges) {
  if (vertices.empty() || edges.empty()) {
    throw NetworkError(NetworkErrorKind::Empty, "network needs at least one vertex and one edge");
  }
  Network net;
  const int n = static_cast<int>(vertices.size());
  net.vertices_.reserve(vertices.size());
  for (auto& v : vertices) {
    net.vertices_.push_back({std::move(v.id), Eigen::Vector2d(v.x, v.y)});
  }
  net.incidence_.assign(n, {});

  for (std::size_t j = 0; j < edges.size(); ++j) {
    auto& e = edges[j];
    const std::string label = e.id.empty() ? "#" + std::to_string(j) : e.id;
    if (e.tail < 0 || e.tail >= n || e.head < 0 || e.head >= n) {
      throw NetworkError(NetworkErrorKind::DanglingVertex,
                         "edge " + label + " references a vertex that does not exist");
    }
    if (e.tail == e.head) {
      throw NetworkError(NetworkErrorKind::SelfLoop, "edge " + label + " is a self-loop");
    }
    double length = e.length ? *e.length
                             : (net.vertices_[e.head].position - net.vertices_[e.tail].position).norm();
    if (!(length > 0.0)) {
      throw NetworkError(NetworkErrorKind::NonPositiveLength,
                         "edge " + label + " has nonpositive length");
    }
    const int jj = static_cast<int>(j);
    net.edges_.push_back({std::move(e.id), e.tail, e.head, length});
    net.incidence_[e.tail].push_back({jj, -1});
    net.incidence_[e.head].push_back({jj, +1});
  }

  // union-find connectivity
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  for (const auto& e : net.edges_) parent[find(e.tail)] = find(e.head);
  const int root = find(0);
  for (int i = 1; i < n; ++i) {
    if (find(i) != root) {
      throw NetworkError(NetworkErrorKind::Disconnected,
                         "network is not connected (vertex " + net.vertices_[i].id + ")");
    }
  }
  return net;
}

int Network::incidence_sign(int i, int j) const {
  if (i >= 0 && i < num_vertices()) {
    for (const auto& inc : incidence_[i]) {
      if (inc.edge == j) return inc.sign;
    }
  }
  throw NetworkError(NetworkErrorKind::NotIncident,
                     "edge " + std::to_string(j) + " is not incident to vertex " + std::to_string(i));
}

int Network::index_of_vertex(const std::string& id) const {
  for (int i = 0; i < num_vertices(); ++i) {
    if (vertices_[i].id == id) return i;
  }
  return -1;
}

int Network::index_of_edge(const std::string& id) const {
  for (int j = 0; j < num_edges(); ++j) {
    if (edges_[j].id == id) return j;
  }
  return -1;
}

void NetworkMeasure::check_conforms(const Network& net) const {
  if (static_cast<int>(edge_densities.size()) != net.num_edges() ||
      vertex_masses.size() != net.num_vertices()) {
    std::ostringstream msg;
    msg << "measure has " << edge_densities.size() << " edges and " << vertex_masses.size()
        << " vertices, network has " << net.num_edges() << " and " << net.num_vertices();
    throw NetworkError(NetworkErrorKind::ShapeMismatch, msg.str());
  }
  for (const auto& rho : edge_densities) {
    if (rho.size() == 0) {
      throw NetworkError(NetworkErrorKind::ShapeMismatch, "edge density without cells");
    }
  }
}

bool NetworkMeasure::is_nonnegative() const {
  for (const auto& rho : edge_densities) {
    if ((rho.array() < 0.0).any()) return false;
  }
  return !(vertex_masses.array() < 0.0).any();
}

double edge_mass(const Eigen::VectorXd& density, double length) {
  return density.sum() * length / static_cast<double>(density.size());
}

double total_mass(const NetworkMeasure& mu, const Network& net) {
  mu.check_conforms(net);
  double m = mu.vertex_masses.sum();
  for (int j = 0; j < net.num_edges(); ++j) {
    m += edge_mass(mu.edge_densities[j], net.edge(j).length);
  }
  return m;
}

}  // namespace netot
