#include "doctest.h"

#include "netot/network.hpp"
#include "netot/verify/instances.hpp"

using namespace netot;

namespace {

NetworkErrorKind build_error(std::vector<VertexSpec> v, std::vector<EdgeSpec> e) {
  try {
    Network::build(std::move(v), std::move(e));
  } catch (const NetworkError& err) {
    return err.kind();
  }
  FAIL("expected a NetworkError");
  return NetworkErrorKind::Empty;
}

}  // namespace

TEST_CASE("Y graph incidence at the hub") {
  const Network net = verify::y_graph();
  REQUIRE(net.num_vertices() == 4);
  REQUIRE(net.num_edges() == 3);
  const auto& inc = net.incidence(0);
  REQUIRE(inc.size() == 3);
  for (int j = 0; j < 3; ++j) CHECK(inc[j].edge == j);
  CHECK(net.incidence_sign(0, 0) == +1);  // E1 ends at V1
  CHECK(net.incidence_sign(0, 1) == -1);
  CHECK(net.incidence_sign(0, 2) == -1);
}

TEST_CASE("single edge orientation") {
  const Network net = Network::build({{"V1", 0, 0}, {"V2", 1, 0}}, {{"E1", 0, 1, 1.0}});
  CHECK(net.incidence(0).size() == 1);
  CHECK(incidence_sign(net, 0, 0) == -1);
  CHECK(incidence_sign(net, 1, 0) == +1);
}

TEST_CASE("incidence sign of a vertex off the edge") {
  const Network net = verify::path_graph(2);
  try {
    net.incidence_sign(0, 1);
    FAIL("expected NotIncident");
  } catch (const NetworkError& e) {
    CHECK(e.kind() == NetworkErrorKind::NotIncident);
  }
}

TEST_CASE("every edge has one tail and one head") {
  const Network net = verify::y_graph();
  for (int j = 0; j < net.num_edges(); ++j) {
    const auto& e = net.edge(j);
    CHECK(net.incidence_sign(e.tail, j) + net.incidence_sign(e.head, j) == 0);
  }
}

TEST_CASE("validation errors are distinct") {
  const std::vector<VertexSpec> four = {{"A", 0, 0}, {"B", 1, 0}, {"C", 0, 5}, {"D", 1, 5}};
  CHECK(build_error(four, {{"e1", 0, 1, {}}, {"e2", 2, 3, {}}}) == NetworkErrorKind::Disconnected);
  CHECK(build_error({{"A", 0, 0}, {"B", 1, 0}}, {{"e", 0, 0, 1.0}}) == NetworkErrorKind::SelfLoop);
  CHECK(build_error({{"A", 0, 0}, {"B", 1, 0}}, {{"e", 0, 7, 1.0}}) == NetworkErrorKind::DanglingVertex);
  CHECK(build_error({{"A", 0, 0}, {"B", 1, 0}}, {{"e", 0, 1, 0.0}}) == NetworkErrorKind::NonPositiveLength);
  CHECK(build_error({{"A", 0, 0}, {"B", 0, 0}}, {{"e", 0, 1, {}}}) == NetworkErrorKind::NonPositiveLength);
  CHECK(build_error({}, {}) == NetworkErrorKind::Empty);
}

TEST_CASE("edge length defaults to the Euclidean distance") {
  const Network net = Network::build({{"A", 0, 0}, {"B", 3, 4}}, {{"e", 0, 1, {}}});
  CHECK(net.edge(0).length == doctest::Approx(5.0));
}

TEST_CASE("parallel edges are accepted") {
  const Network net = Network::build({{"A", 0, 0}, {"B", 1, 0}}, {{"e1", 0, 1, {}}, {"e2", 1, 0, 2.0}});
  CHECK(net.degree(0) == 2);
  CHECK(net.incidence_sign(0, 1) == +1);
}

TEST_CASE("total mass") {
  const Network one = Network::build({{"A", 0, 0}, {"B", 1, 0}}, {{"e", 0, 1, 1.0}});
  NetworkMeasure zero{{Eigen::VectorXd::Zero(3)}, Eigen::VectorXd::Zero(2)};
  CHECK(total_mass(zero, one) == 0.0);

  NetworkMeasure mu{{Eigen::VectorXd::Constant(4, 0.5)}, Eigen::VectorXd::Constant(2, 0.25)};
  CHECK(total_mass(mu, one) == doctest::Approx(1.0).epsilon(1e-15));

  const Network two = Network::build({{"A", 0, 0}, {"B", 2, 0}}, {{"e", 0, 1, {}}});
  for (int cells : {1, 3, 17}) {
    NetworkMeasure u{{Eigen::VectorXd::Ones(cells)}, Eigen::VectorXd::Zero(2)};
    CHECK(total_mass(u, two) == doctest::Approx(2.0).epsilon(1e-14));
  }

  NetworkMeasure wrong{{Eigen::VectorXd::Ones(3)}, Eigen::VectorXd::Zero(3)};
  CHECK_THROWS_AS(total_mass(wrong, one), NetworkError);
}

TEST_CASE("total mass is invariant under consistent refinement") {
  const Network net = verify::y_graph();
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  NetworkMeasure coarse, fine;
  coarse.vertex_masses = fine.vertex_masses = Eigen::Vector4d(0.1, 0.0, 0.3, 0.2);
  for (int j = 0; j < 3; ++j) {
    Eigen::VectorXd c(5), f(15);
    for (int i = 0; i < 5; ++i) {
      c(i) = u(rng);
      f.segment(3 * i, 3).setConstant(c(i));
    }
    coarse.edge_densities.push_back(c);
    fine.edge_densities.push_back(f);
  }
  CHECK(total_mass(coarse, net) == doctest::Approx(total_mass(fine, net)).epsilon(1e-14));
}
