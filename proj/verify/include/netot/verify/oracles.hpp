#pragma once

#include "netot/grid.hpp"
#include "netot/network.hpp"

namespace netot::verify {

struct OracleResult {
  double value = 0.0;
  bool converged = false;
  int newton_steps = 0;
};

/// Log-barrier interior-point method on the discrete transport problem, assembled from scratch
/// with dense matrices and explicit exchange variables. Meant for tiny grids with strictly
/// positive endpoint data.
OracleResult barrier_oracle(const Network& net, const GridSpec& grid, const Endpoints& endpoints,
                            double kappa);

}  // namespace netot::verify
