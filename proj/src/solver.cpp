#include "netot/solver.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace netot {

void SolverParams::validate() const {
  if (max_iters < 1) throw std::invalid_argument("solver: max_iters must be positive");
  if (!(penalty > 0.0)) throw std::invalid_argument("solver: penalty must be positive");
  if (!(tol_ce > 0.0) || !(tol_gap > 0.0) || !(tol_consensus > 0.0)) {
    throw std::invalid_argument("solver: tolerances must be positive");
  }
  if (!(relaxation >= 1.0 && relaxation < 2.0)) {
    throw std::invalid_argument("solver: relaxation must lie in [1, 2)");
  }
  if (density_floor < 0.0) throw std::invalid_argument("solver: density floor must be nonnegative");
  if (check_every < 1) throw std::invalid_argument("solver: check_every must be positive");
}

DualPotentials DualPotentials::zeros(const Network& net, const GridSpec& grid) {
  DualPotentials d;
  for (int j = 0; j < net.num_edges(); ++j) d.phi.push_back(Eigen::MatrixXd::Zero(grid.steps, grid.cells[j]));
  d.psi = Eigen::MatrixXd::Zero(grid.steps, net.num_vertices());
  d.trace = d.psi;
  return d;
}

DualPotentials DualPotentials::sample(const Network& net, const GridSpec& grid,
                                      const std::function<double(int, double, double)>& phi,
                                      const std::function<double(int, double)>& psi) {
  DualPotentials d = zeros(net, grid);
  for (int k = 0; k < grid.steps; ++k) {
    const double t = grid.time_mid(k);
    for (int j = 0; j < net.num_edges(); ++j) {
      for (int c = 0; c < grid.cells[j]; ++c) d.phi[j](k, c) = phi(j, t, grid.cell_center(j, c));
    }
    for (int i = 0; i < net.num_vertices(); ++i) {
      d.psi(k, i) = psi(i, t);
      double tr = 0.0;
      for (const auto& inc : net.incidence(i)) {
        tr += phi(inc.edge, t, inc.sign > 0 ? net.edge(inc.edge).length : 0.0);
      }
      d.trace(k, i) = tr / net.degree(i);
    }
  }
  return d;
}

void DualPotentials::check_conforms(const Network& net, const GridSpec& grid) const {
  bool ok = static_cast<int>(phi.size()) == net.num_edges() && psi.rows() == grid.steps &&
            psi.cols() == net.num_vertices() && trace.rows() == grid.steps &&
            trace.cols() == net.num_vertices();
  for (int j = 0; ok && j < net.num_edges(); ++j) {
    ok = phi[j].rows() == grid.steps && phi[j].cols() == grid.cells[j];
  }
  if (!ok) throw NetworkError(NetworkErrorKind::ShapeMismatch, "dual potentials do not match grid");
}

void check_endpoints(const Endpoints& endpoints, const Network& net, const GridSpec& grid) {
  for (const NetworkMeasure* mu : {&endpoints.initial, &endpoints.terminal}) {
    mu->check_conforms(net);
    for (int j = 0; j < net.num_edges(); ++j) {
      if (mu->edge_densities[j].size() != grid.cells[j]) {
        throw NetworkError(NetworkErrorKind::ShapeMismatch, "endpoint density does not match grid");
      }
    }
    if (!mu->is_nonnegative()) throw std::invalid_argument("endpoints: negative mass");
  }
  const double m0 = total_mass(endpoints.initial, net);
  const double m1 = total_mass(endpoints.terminal, net);
  if (std::abs(m0 - m1) > 1e-12 * std::max({1.0, m0, m1})) {
    throw std::invalid_argument("endpoints: total masses differ");
  }
}

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

constexpr double kInf = std::numeric_limits<double>::infinity();

// Unknowns: interior-time densities, every face flux, interior-time vertex masses (unless frozen).
// Action points contribute two rows (density, flux) to the interpolation operator I; nonnegativity
// of each unknown density is a further row.
struct Point {
  double weight;
  double curvature;
  int flux_col;  // -1 for vertex points
  int owner;     // edge index for face points, vertex index for vertex points
};

struct Discretization {
  const Network& net;
  const GridSpec& grid;
  VertexMode mode;
  double kappa;
  int P;
  std::vector<int> rho_off, flux_off, erow_off;
  int gamma_off = 0, vrow_off = 0, nU = 0, nC = 0;

  Discretization(const Network& n, const GridSpec& g, VertexMode m, double k)
      : net(n), grid(g), mode(m), kappa(k), P(g.steps) {
    for (int j = 0; j < net.num_edges(); ++j) {
      rho_off.push_back(nU);
      nU += (P - 1) * grid.cells[j];
    }
    for (int j = 0; j < net.num_edges(); ++j) {
      flux_off.push_back(nU);
      nU += P * (grid.cells[j] + 1);
    }
    gamma_off = nU;
    if (mode != VertexMode::Frozen) nU += (P - 1) * net.num_vertices();
    for (int j = 0; j < net.num_edges(); ++j) {
      erow_off.push_back(nC);
      nC += P * grid.cells[j];
    }
    vrow_off = nC;
    nC += P * net.num_vertices();
  }

  int rho_col(int j, int k, int c) const { return rho_off[j] + (k - 1) * grid.cells[j] + c; }
  int flux_col(int j, int k, int f) const { return flux_off[j] + k * (grid.cells[j] + 1) + f; }
  int gamma_col(int i, int k) const { return gamma_off + (k - 1) * net.num_vertices() + i; }
  int edge_row(int j, int k, int c) const { return erow_off[j] + k * grid.cells[j] + c; }
  int vertex_row(int i, int k) const { return vrow_off + k * net.num_vertices() + i; }
  int boundary_face(int j, int sign) const { return sign > 0 ? grid.cells[j] : 0; }
};

struct Assembly {
  SpMat I, It, C, Ct;
  Eigen::VectorXd b, d, w;
  std::vector<Point> points;
  int node_row0 = 0;
  std::vector<int> node_col;
  std::vector<char> node_is_vertex;
  Eigen::VectorXd t_mid;  // per C row
  int gauge_row = 0;
};

Assembly assemble(const Discretization& D, const Endpoints& ep) {
  const auto& net = D.net;
  const auto& grid = D.grid;
  const int P = D.P;
  const double dt = grid.dt;
  Assembly A;

  std::vector<Triplet> it;
  std::vector<double> bvec, wvec;
  int row = 0;

  auto known_rho = [&](int j, int k, int c) {
    return k == 0 ? ep.initial.edge_densities[j](c) : ep.terminal.edge_densities[j](c);
  };
  auto known_gamma = [&](int i, int k) {
    return (k == 0 || D.mode == VertexMode::Frozen) ? ep.initial.vertex_masses(i)
                                                    : ep.terminal.vertex_masses(i);
  };
  auto add_rho = [&](std::vector<Triplet>& t, double& rhs, int r, int j, int k, int c, double coef) {
    if (k > 0 && k < P) t.emplace_back(r, D.rho_col(j, k, c), coef);
    else rhs += coef * known_rho(j, k, c);
  };
  auto add_gamma = [&](std::vector<Triplet>& t, double& rhs, int r, int i, int k, double coef) {
    if (D.mode != VertexMode::Frozen && k > 0 && k < P) t.emplace_back(r, D.gamma_col(i, k), coef);
    else rhs += coef * known_gamma(i, k);
  };

  for (int j = 0; j < net.num_edges(); ++j) {
    const int N = grid.cells[j];
    for (int k = 0; k < P; ++k) {
      for (int f = 0; f <= N; ++f) {
        double b0 = 0.0;
        if (f == 0 || f == N) {
          const int c = f == 0 ? 0 : N - 1;
          add_rho(it, b0, row, j, k, c, 0.5);
          add_rho(it, b0, row, j, k + 1, c, 0.5);
        } else {
          for (int c : {f - 1, f}) {
            add_rho(it, b0, row, j, k, c, 0.25);
            add_rho(it, b0, row, j, k + 1, c, 0.25);
          }
        }
        const double weight = (f == 0 || f == N ? 0.5 : 1.0) * grid.dx[j] * dt;
        it.emplace_back(row + 1, D.flux_col(j, k, f), 1.0);
        bvec.push_back(b0);
        bvec.push_back(0.0);
        wvec.push_back(weight);
        wvec.push_back(weight);
        A.points.push_back({weight, 1.0, D.flux_col(j, k, f), j});
        row += 2;
      }
    }
  }
  if (D.mode == VertexMode::Active) {
    for (int i = 0; i < net.num_vertices(); ++i) {
      for (int k = 0; k < P; ++k) {
        double b0 = 0.0;
        add_gamma(it, b0, row, i, k, 0.5);
        add_gamma(it, b0, row, i, k + 1, 0.5);
        for (const auto& inc : net.incidence(i)) {
          it.emplace_back(row + 1, D.flux_col(inc.edge, k, D.boundary_face(inc.edge, inc.sign)), inc.sign);
        }
        bvec.push_back(b0);
        bvec.push_back(0.0);
        wvec.push_back(dt);
        wvec.push_back(dt);
        A.points.push_back({dt, D.kappa * D.kappa, -1, i});
        row += 2;
      }
    }
  }
  A.node_row0 = row;
  for (int j = 0; j < net.num_edges(); ++j) {
    for (int k = 1; k < P; ++k) {
      for (int c = 0; c < grid.cells[j]; ++c) {
        it.emplace_back(row++, D.rho_col(j, k, c), 1.0);
        A.node_col.push_back(D.rho_col(j, k, c));
        A.node_is_vertex.push_back(0);
        bvec.push_back(0.0);
        wvec.push_back(grid.dx[j] * dt);
      }
    }
  }
  if (D.mode != VertexMode::Frozen) {
    for (int k = 1; k < P; ++k) {
      for (int i = 0; i < net.num_vertices(); ++i) {
        it.emplace_back(row++, D.gamma_col(i, k), 1.0);
        A.node_col.push_back(D.gamma_col(i, k));
        A.node_is_vertex.push_back(1);
        bvec.push_back(0.0);
        wvec.push_back(dt);
      }
    }
  }
  A.I.resize(row, D.nU);
  A.I.setFromTriplets(it.begin(), it.end());
  A.It = A.I.transpose();
  A.b = Eigen::Map<Eigen::VectorXd>(bvec.data(), static_cast<Eigen::Index>(bvec.size()));
  A.w = Eigen::Map<Eigen::VectorXd>(wvec.data(), static_cast<Eigen::Index>(wvec.size()));

  // continuity equations, scaled by dx (edges) and unscaled (vertices)
  std::vector<Triplet> ct;
  A.d = Eigen::VectorXd::Zero(D.nC);
  A.t_mid.resize(D.nC);
  for (int j = 0; j < net.num_edges(); ++j) {
    const double dx = grid.dx[j];
    for (int k = 0; k < P; ++k) {
      for (int c = 0; c < grid.cells[j]; ++c) {
        const int r = D.edge_row(j, k, c);
        double rhs = 0.0;
        add_rho(ct, rhs, r, j, k + 1, c, dx);
        add_rho(ct, rhs, r, j, k, c, -dx);
        ct.emplace_back(r, D.flux_col(j, k, c + 1), dt);
        ct.emplace_back(r, D.flux_col(j, k, c), -dt);
        A.d(r) = -rhs;
        A.t_mid(r) = grid.time_mid(k);
      }
    }
  }
  for (int i = 0; i < net.num_vertices(); ++i) {
    for (int k = 0; k < P; ++k) {
      const int r = D.vertex_row(i, k);
      double rhs = 0.0;
      if (D.mode != VertexMode::Frozen) {
        add_gamma(ct, rhs, r, i, k + 1, 1.0);
        add_gamma(ct, rhs, r, i, k, -1.0);
      }
      for (const auto& inc : net.incidence(i)) {
        ct.emplace_back(r, D.flux_col(inc.edge, k, D.boundary_face(inc.edge, inc.sign)), -dt * inc.sign);
      }
      A.d(r) = -rhs;
      A.t_mid(r) = grid.time_mid(k);
    }
  }
  A.C.resize(D.nC, D.nU);
  A.C.setFromTriplets(ct.begin(), ct.end());
  A.Ct = A.C.transpose();
  A.gauge_row = D.edge_row(0, 0, 0);
  return A;
}

struct DualEval {
  double value = 0.0;
  double edge_violation = 0.0;  // max of the normalized node multipliers, may be negative
  double vertex_violation = 0.0;
};

// y: multipliers of the continuity rows (y = -potential); s: (psi - trace) per vertex point.
DualEval evaluate_dual(const Assembly& A, const Eigen::VectorXd& y, const Eigen::VectorXd& s,
                       double floor) {
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(A.I.rows());
  int vp = 0;
  for (std::size_t p = 0; p < A.points.size(); ++p) {
    if (A.points[p].flux_col < 0) theta(2 * p + 1) = A.points[p].weight * s(vp++);
  }
  const Eigen::VectorXd cty = A.Ct * y;
  Eigen::VectorXd r = cty - A.It * theta;
  for (std::size_t p = 0; p < A.points.size(); ++p) {
    const Point& pt = A.points[p];
    if (pt.flux_col >= 0) theta(2 * p + 1) = r(pt.flux_col);
    const double g = theta(2 * p + 1) / pt.weight;
    theta(2 * p) = -pt.weight * g * g / (2.0 * pt.curvature);
  }
  r = cty - A.It * theta;
  DualEval out;
  out.edge_violation = -kInf;
  out.vertex_violation = -kInf;
  double node_sum = 0.0;
  for (std::size_t q = 0; q < A.node_col.size(); ++q) {
    const int row = A.node_row0 + static_cast<int>(q);
    const double th = r(A.node_col[q]);
    theta(row) = th;
    node_sum += th;
    const double v = th / A.w(row);
    double& slot = A.node_is_vertex[q] ? out.vertex_violation : out.edge_violation;
    slot = std::max(slot, v);
  }
  out.value = y.dot(A.d) + theta.dot(A.b) - floor * node_sum;
  return out;
}

DualEval certified_dual(const Assembly& A, const Eigen::VectorXd& y, const Eigen::VectorXd& s,
                        double floor) {
  DualEval e = evaluate_dual(A, y, s, floor);
  const double eps = std::max({0.0, e.edge_violation, e.vertex_violation});
  if (eps > 0.0) e = evaluate_dual(A, y + eps * A.t_mid, s, floor);
  return e;
}

void potentials_to_multipliers(const Discretization& D, const DualPotentials& duals,
                               Eigen::VectorXd& y, Eigen::VectorXd& s) {
  y.resize(D.nC);
  for (int j = 0; j < D.net.num_edges(); ++j) {
    for (int k = 0; k < D.P; ++k) {
      for (int c = 0; c < D.grid.cells[j]; ++c) y(D.edge_row(j, k, c)) = -duals.phi[j](k, c);
    }
  }
  for (int i = 0; i < D.net.num_vertices(); ++i) {
    for (int k = 0; k < D.P; ++k) y(D.vertex_row(i, k)) = -duals.psi(k, i);
  }
  s.resize(D.mode == VertexMode::Active ? D.P * D.net.num_vertices() : 0);
  if (D.mode == VertexMode::Active) {
    int idx = 0;
    for (int i = 0; i < D.net.num_vertices(); ++i) {
      for (int k = 0; k < D.P; ++k) s(idx++) = duals.psi(k, i) - duals.trace(k, i);
    }
  }
}

Endpoints dummy_endpoints(const Network& net, const GridSpec& grid) {
  Endpoints ep;
  for (int j = 0; j < net.num_edges(); ++j) {
    ep.initial.edge_densities.push_back(Eigen::VectorXd::Zero(grid.cells[j]));
  }
  ep.initial.vertex_masses = Eigen::VectorXd::Zero(net.num_vertices());
  ep.terminal = ep.initial;
  return ep;
}

double action_value(const Assembly& A, const Eigen::VectorXd& Z) {
  double v = 0.0;
  for (std::size_t p = 0; p < A.points.size(); ++p) {
    const Point& pt = A.points[p];
    v += pt.weight * pt.curvature * action_density(Z(2 * p), Z(2 * p + 1));
  }
  return v;
}

// per-edge and per-vertex split of action_value
ActionBreakdown action_split(const Assembly& A, const Eigen::VectorXd& Z, const Network& net) {
  ActionBreakdown out;
  out.per_edge.assign(net.num_edges(), 0.0);
  out.per_vertex.assign(net.num_vertices(), 0.0);
  for (std::size_t p = 0; p < A.points.size(); ++p) {
    const Point& pt = A.points[p];
    const double v = pt.weight * pt.curvature * action_density(Z(2 * p), Z(2 * p + 1));
    (pt.flux_col >= 0 ? out.per_edge : out.per_vertex)[pt.owner] += v;
  }
  for (double v : out.per_edge) out.edge += v;
  for (double v : out.per_vertex) out.vertex += v;
  out.total = out.edge + out.vertex;
  return out;
}

double weighted_norm(const Eigen::VectorXd& v, const Eigen::VectorXd& w) {
  return std::sqrt((v.array().square() * w.array()).sum());
}

TrajectoryField unpack(const Discretization& D, const Endpoints& ep, const Eigen::VectorXd& U) {
  TrajectoryField f = TrajectoryField::zeros(D.net, D.grid);
  const int P = D.P;
  for (int j = 0; j < D.net.num_edges(); ++j) {
    const int N = D.grid.cells[j];
    f.rho[j].row(0) = ep.initial.edge_densities[j].transpose();
    f.rho[j].row(P) = ep.terminal.edge_densities[j].transpose();
    for (int k = 1; k < P; ++k) {
      for (int c = 0; c < N; ++c) f.rho[j](k, c) = U(D.rho_col(j, k, c));
    }
    for (int k = 0; k < P; ++k) {
      for (int fc = 0; fc <= N; ++fc) f.flux[j](k, fc) = U(D.flux_col(j, k, fc));
    }
  }
  for (int i = 0; i < D.net.num_vertices(); ++i) {
    for (int k = 0; k <= P; ++k) {
      if (D.mode == VertexMode::Frozen || k == 0) f.gamma(k, i) = ep.initial.vertex_masses(i);
      else if (k == P) f.gamma(k, i) = ep.terminal.vertex_masses(i);
      else f.gamma(k, i) = U(D.gamma_col(i, k));
    }
  }
  f.sync_exchange(D.net);
  return f;
}

DualPotentials extract_duals(const Discretization& D, const Eigen::VectorXd& y,
                             const Eigen::VectorXd& s) {
  DualPotentials d = DualPotentials::zeros(D.net, D.grid);
  for (int j = 0; j < D.net.num_edges(); ++j) {
    for (int k = 0; k < D.P; ++k) {
      for (int c = 0; c < D.grid.cells[j]; ++c) d.phi[j](k, c) = -y(D.edge_row(j, k, c));
    }
  }
  int idx = 0;
  for (int i = 0; i < D.net.num_vertices(); ++i) {
    for (int k = 0; k < D.P; ++k) {
      d.psi(k, i) = -y(D.vertex_row(i, k));
      d.trace(k, i) = D.mode == VertexMode::Active ? d.psi(k, i) - s(idx++) : d.psi(k, i);
    }
  }
  return d;
}

}  // namespace

SolveReport solve_transport(const Network& net, const GridSpec& grid, const Endpoints& endpoints,
                            double kappa, VertexMode mode, const SolverParams& params) {
  params.validate();
  check_endpoints(endpoints, net, grid);
  if (mode == VertexMode::Active && !(kappa > 0.0)) {
    throw std::invalid_argument("solver: kappa must be positive");
  }
  if (mode == VertexMode::Frozen &&
      (endpoints.initial.vertex_masses - endpoints.terminal.vertex_masses).cwiseAbs().maxCoeff() > 1e-12) {
    throw std::invalid_argument("solver: frozen vertices need equal initial and terminal vertex masses");
  }

  const Discretization D(net, grid, mode, kappa);
  const Assembly A = assemble(D, endpoints);
  const int nU = D.nU;
  const int nC = D.nC;

  // KKT system [I^T W I, C'^T; C', 0] with the gauge row removed from C.
  std::vector<Triplet> kt;
  const SpMat H = A.It * A.w.asDiagonal() * A.I;
  for (int k = 0; k < H.outerSize(); ++k) {
    for (SpMat::InnerIterator itH(H, k); itH; ++itH) kt.emplace_back(itH.row(), itH.col(), itH.value());
  }
  auto reduced = [&](int r) { return r < A.gauge_row ? r : r - 1; };
  for (int k = 0; k < A.C.outerSize(); ++k) {
    for (SpMat::InnerIterator itC(A.C, k); itC; ++itC) {
      if (itC.row() == A.gauge_row) continue;
      const int r = nU + reduced(static_cast<int>(itC.row()));
      kt.emplace_back(r, itC.col(), itC.value());
      kt.emplace_back(itC.col(), r, itC.value());
    }
  }
  SpMat K(nU + nC - 1, nU + nC - 1);
  K.setFromTriplets(kt.begin(), kt.end());
  K.makeCompressed();
  Eigen::SparseLU<SpMat> lu;
  lu.compute(K);
  if (lu.info() != Eigen::Success) throw std::runtime_error("solver: KKT factorization failed");

  Eigen::VectorXd rhs(nU + nC - 1);
  for (int r = 0, q = 0; r < nC; ++r) {
    if (r != A.gauge_row) rhs(nU + q++) = A.d(r);
  }

  // seed: time-linear interpolation
  const TrajectoryField seed = linear_seed(endpoints, net, grid);
  Eigen::VectorXd U = Eigen::VectorXd::Zero(nU);
  for (int j = 0; j < net.num_edges(); ++j) {
    for (int k = 1; k < D.P; ++k) {
      for (int c = 0; c < grid.cells[j]; ++c) U(D.rho_col(j, k, c)) = seed.rho[j](k, c);
    }
  }
  if (mode != VertexMode::Frozen) {
    for (int k = 1; k < D.P; ++k) {
      for (int i = 0; i < net.num_vertices(); ++i) U(D.gamma_col(i, k)) = seed.gamma(k, i);
    }
  }
  Eigen::VectorXd Z = A.I * U + A.b;
  Eigen::VectorXd Lam = Eigen::VectorXd::Zero(Z.size());
  Eigen::VectorXd X(Z.size()), Zold(Z.size()), mu(nC);
  Eigen::VectorXd y(nC), s;

  double r = params.penalty;
  const double alpha = params.relaxation;
  const int nPoints = static_cast<int>(A.points.size());

  SolveReport rep;
  rep.mode = mode;
  rep.kappa = kappa;
  DualEval best;
  for (int iter = 1; iter <= params.max_iters; ++iter) {
    rhs.head(nU) = A.It * (A.w.asDiagonal() * (Z - Lam - A.b));
    const Eigen::VectorXd sol = lu.solve(rhs);
    U = sol.head(nU);
    X = A.I * U + A.b;
    const Eigen::VectorXd Xh = alpha * X + (1.0 - alpha) * Z;
    const Eigen::VectorXd V = Xh + Lam;
    Zold = Z;
    const double sigma = 1.0 / r;
    for (int p = 0; p < nPoints; ++p) {
      const auto [za, zb] = prox_action(V(2 * p), V(2 * p + 1), sigma, A.points[p].curvature);
      Z(2 * p) = za;
      Z(2 * p + 1) = zb;
    }
    for (Eigen::Index q = A.node_row0; q < Z.size(); ++q) Z(q) = std::max(params.density_floor, V(q));
    Lam = V - Z;

    const bool last = iter == params.max_iters;
    const bool check = iter % params.check_every == 0 || last;
    const double prim = weighted_norm(X - Z, A.w);
    const double dual = r * weighted_norm(Z - Zold, A.w);
    if (check) {
      for (int q = 0, rr = 0; rr < nC; ++rr) y(rr) = rr == A.gauge_row ? 0.0 : -r * sol(nU + q++);
      s.resize(mode == VertexMode::Active ? D.P * net.num_vertices() : 0);
      for (int p = 0, idx = 0; p < nPoints; ++p) {
        if (A.points[p].flux_col < 0) s(idx++) = r * Lam(2 * p + 1);
      }
      best = certified_dual(A, y, s, params.density_floor);
      const double value = action_value(A, Z);
      const double gap = value - best.value;
      const double scale = std::max(1.0, Z.cwiseAbs().maxCoeff());
      const double consensus = (X - Z).cwiseAbs().maxCoeff();
      rep.history.push_back({iter, prim, dual, value, best.value, gap, r});
      rep.value = value;
      rep.dual_value = best.value;
      rep.gap = gap;
      rep.consensus_residual = consensus / scale;
      rep.iterations = iter;
      // absolute floor: the gap cannot be resolved below the constraint tolerance
      const bool gap_ok = std::abs(gap) <= params.tol_gap * std::abs(value) || std::abs(gap) <= params.tol_ce;
      if (gap_ok && rep.consensus_residual <= params.tol_consensus) {
        rep.converged = true;
        break;
      }
    }
    if (params.adaptive_penalty && iter % params.check_every == 0) {
      if (prim > 10.0 * dual) {
        r *= 2.0;
        Lam /= 2.0;
      } else if (dual > 10.0 * prim) {
        r /= 2.0;
        Lam *= 2.0;
      }
    }
  }

  rep.geodesic = unpack(D, endpoints, U);
  rep.duals = extract_duals(D, y, s);
  rep.ce = ce_residual(rep.geodesic, endpoints, net, grid);
  rep.action = action_split(A, Z, net);
  if (rep.converged && rep.ce.max() > params.tol_ce) rep.converged = false;
  return rep;
}

SolveReport solve_geodesic(const Network& net, const GridSpec& grid, const Endpoints& endpoints,
                           double kappa, const SolverParams& params) {
  check_endpoints(endpoints, net, grid);
  for (const NetworkMeasure* mu : {&endpoints.initial, &endpoints.terminal}) {
    if (std::abs(total_mass(*mu, net) - 1.0) > 1e-12) {
      throw std::invalid_argument("endpoints: total mass must be 1");
    }
  }
  return solve_transport(net, grid, endpoints, kappa, VertexMode::Active, params);
}

HJResidual hj_residual(const DualPotentials& duals, double kappa, const Network& net,
                       const GridSpec& grid, VertexMode mode) {
  duals.check_conforms(net, grid);
  const Discretization D(net, grid, mode, kappa);
  const Assembly A = assemble(D, dummy_endpoints(net, grid));
  Eigen::VectorXd y, s;
  potentials_to_multipliers(D, duals, y, s);
  const DualEval e = evaluate_dual(A, y, s, 0.0);
  return {std::max(0.0, e.edge_violation), std::max(0.0, e.vertex_violation)};
}

double eval_dual_objective(const DualPotentials& duals, const Endpoints& endpoints, double kappa,
                           const Network& net, const GridSpec& grid, VertexMode mode) {
  duals.check_conforms(net, grid);
  check_endpoints(endpoints, net, grid);
  const Discretization D(net, grid, mode, kappa);
  const Assembly A = assemble(D, endpoints);
  Eigen::VectorXd y, s;
  potentials_to_multipliers(D, duals, y, s);
  const DualEval e = evaluate_dual(A, y, s, 0.0);
  if (std::max(e.edge_violation, e.vertex_violation) > 1e-9) return -kInf;
  return e.value;
}

OptimalityResidual optimality_residual(const TrajectoryField& field, const DualPotentials& duals,
                                       double kappa, const Network& net, const GridSpec& grid) {
  field.check_conforms(net, grid);
  duals.check_conforms(net, grid);
  double scale = field.gamma.size() > 0 ? field.gamma.maxCoeff() : 0.0;
  for (const auto& r : field.rho) scale = std::max(scale, r.maxCoeff());
  const double eps = 1e-6 * scale;

  OptimalityResidual out;
  double sum = 0.0;
  for (int j = 0; j < net.num_edges(); ++j) {
    const int N = grid.cells[j];
    const double dx = grid.dx[j];
    for (int k = 0; k < grid.steps; ++k) {
      for (int c = 1; c + 1 < N; ++c) {
        const double rho = 0.5 * (field.rho[j](k, c) + field.rho[j](k + 1, c));
        if (rho <= eps) continue;
        const double F = 0.5 * (field.flux[j](k, c) + field.flux[j](k, c + 1));
        const double grad = (duals.phi[j](k, c + 1) - duals.phi[j](k, c - 1)) / (2.0 * dx);
        const double e = F - rho * grad;
        sum += dx * grid.dt * e * e;
      }
    }
  }
  out.r1 = std::sqrt(sum);
  for (int i = 0; i < net.num_vertices(); ++i) {
    for (int k = 0; k < grid.steps; ++k) {
      const double g = field.mid_gamma(i, k);
      if (g <= eps) continue;
      out.r2 = std::max(out.r2, std::abs(kappa * kappa * field.exchange(k, i) -
                                         g * (duals.psi(k, i) - duals.trace(k, i))));
    }
  }
  return out;
}

}  // namespace netot
