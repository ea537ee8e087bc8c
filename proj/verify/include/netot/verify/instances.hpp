#pragma once

#include "netot/grid.hpp"
#include "netot/network.hpp"

#include <random>

namespace netot::verify {

/// Three unit edges meeting at V1: E1 = V2 -> V1, E2 = V1 -> V3, E3 = V1 -> V4.
Network y_graph();
/// V1 -> V2 -> ... along unit edges.
Network path_graph(int edges);
Network single_edge(double length = 1.0);

/// Smooth positive densities (baseline plus two random bumps per edge) and small vertex masses.
NetworkMeasure random_measure(const Network& net, const GridSpec& grid, std::mt19937& rng);
/// Gaussian bump of the given width on one edge, no vertex mass, unit total mass.
NetworkMeasure bump_measure(const Network& net, const GridSpec& grid, int edge, double center,
                            double width);
NetworkMeasure zero_measure(const Network& net, const GridSpec& grid);

/// Rescales to unit total mass.
void normalize(NetworkMeasure& mu, const Network& net);
/// Rescales the edge part so that edges plus the (given) vertex masses carry unit mass.
void normalize_edges(NetworkMeasure& mu, const Network& net);

}  // namespace netot::verify
