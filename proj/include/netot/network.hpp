#pragma once

#include <Eigen/Core>

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace netot {

/// Reasons a network description is rejected.
enum class NetworkErrorKind {
  Empty,
  Disconnected,
  SelfLoop,
  DanglingVertex,
  NonPositiveLength,
  NotIncident,
  ShapeMismatch,
};

class NetworkError : public std::invalid_argument {
 public:
  NetworkError(NetworkErrorKind kind, const std::string& what)
      : std::invalid_argument(what), kind_(kind) {}
  NetworkErrorKind kind() const noexcept { return kind_; }

 private:
  NetworkErrorKind kind_;
};

struct VertexSpec {
  std::string id;
  double x = 0.0;
  double y = 0.0;
};

struct EdgeSpec {
  std::string id;
  int tail = -1;
  int head = -1;
  std::optional<double> length;  // Euclidean distance of the endpoints when absent
};

struct Vertex {
  std::string id;
  Eigen::Vector2d position;
};

struct Edge {
  std::string id;
  int tail;
  int head;
  double length;
};

/// One slot of an incidence list: edge index and outward-normal sign at the vertex.
struct Incidence {
  int edge;
  int sign;  // +1 at the head, -1 at the tail
};

/// Finite connected metric graph. Edges are parametrised by arclength from tail to head.
/// Immutable once built.
class Network {
 public:
  static Network build(std::vector<VertexSpec> vertices, std::vector<EdgeSpec> edges);

  int num_vertices() const { return static_cast<int>(vertices_.size()); }
  int num_edges() const { return static_cast<int>(edges_.size()); }

  const Vertex& vertex(int i) const { return vertices_.at(i); }
  const Edge& edge(int j) const { return edges_.at(j); }
  const std::vector<Vertex>& vertices() const { return vertices_; }
  const std::vector<Edge>& edges() const { return edges_; }

  /// Edges incident to vertex i together with their signs, in increasing edge order.
  const std::vector<Incidence>& incidence(int i) const { return incidence_.at(i); }
  int degree(int i) const { return static_cast<int>(incidence_.at(i).size()); }

  /// sign of the outward normal of edge j at vertex i; throws NotIncident otherwise.
  int incidence_sign(int i, int j) const;

  int index_of_vertex(const std::string& id) const;
  int index_of_edge(const std::string& id) const;

 private:
  std::vector<Vertex> vertices_;
  std::vector<Edge> edges_;
  std::vector<std::vector<Incidence>> incidence_;
};

inline int incidence_sign(const Network& net, int i, int j) { return net.incidence_sign(i, j); }

/// Nonnegative measure on the network: cell averages per edge plus point masses per vertex.
struct NetworkMeasure {
  std::vector<Eigen::VectorXd> edge_densities;
  Eigen::VectorXd vertex_masses;

  /// Throws ShapeMismatch when the layout does not match the network.
  void check_conforms(const Network& net) const;
  bool is_nonnegative() const;
};

/// Sum of edge integrals (cell average times cell width) and vertex masses.
double total_mass(const NetworkMeasure& mu, const Network& net);

/// Mass carried by edge j alone.
double edge_mass(const Eigen::VectorXd& density, double length);

}  // namespace netot
