#include "netot/gradflow.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace netot {

namespace {

constexpr double kLogFloor = 1e-12;

double safe_log(double v) { return std::log(std::max(v, kLogFloor)); }

double entropy(double v) { return v > 0.0 ? v * std::log(v) : 0.0; }

// mean over incident edges of 1 + log rho^j + W_j at vertex i
double edge_potential_mean(const FlowState& state, const EnergySpec& energy, const Network& net,
                           const GridSpec& grid, int i) {
  double g = 0.0;
  for (const auto& inc : net.incidence(i)) {
    const int j = inc.edge;
    const bool head = inc.sign > 0;
    const double r = head ? state.rho[j](grid.cells[j] - 1) : state.rho[j](0);
    g += 1.0 + safe_log(r) + energy.potential[j](head ? net.edge(j).length : 0.0);
  }
  return g / net.degree(i);
}

}  // namespace

double VertexEnergy::value(double gamma) const {
  if (kind == Kind::Entropy) return entropy(gamma);
  return 0.5 * c * (gamma - target) * (gamma - target);
}

double VertexEnergy::derivative(double gamma) const {
  if (kind == Kind::Entropy) return 1.0 + safe_log(gamma);
  return c * (gamma - target);
}

EnergySpec EnergySpec::flat(const Network& net, double kappa) {
  EnergySpec e;
  e.potential.assign(net.num_edges(), [](double) { return 0.0; });
  e.potential_derivative.assign(net.num_edges(), [](double) { return 0.0; });
  e.vertex.assign(net.num_vertices(), VertexEnergy{});
  e.kappa = kappa;
  return e;
}

void EnergySpec::check_conforms(const Network& net) const {
  if (static_cast<int>(potential.size()) != net.num_edges() ||
      static_cast<int>(potential_derivative.size()) != net.num_edges() ||
      static_cast<int>(vertex.size()) != net.num_vertices()) {
    throw NetworkError(NetworkErrorKind::ShapeMismatch, "energy does not match network");
  }
  if (!(kappa > 0.0)) throw std::invalid_argument("energy: kappa must be positive");
}

double FlowState::mass(const Network& net, const GridSpec& grid) const {
  double m = gamma.sum();
  for (int j = 0; j < net.num_edges(); ++j) m += rho[j].sum() * grid.dx[j];
  return m;
}

double energy_eval(const FlowState& state, const EnergySpec& energy, const Network& net,
                   const GridSpec& grid) {
  energy.check_conforms(net);
  double e = 0.0;
  for (int j = 0; j < net.num_edges(); ++j) {
    for (int c = 0; c < grid.cells[j]; ++c) {
      const double r = state.rho[j](c);
      e += (entropy(r) + r * energy.potential[j](grid.cell_center(j, c))) * grid.dx[j];
    }
  }
  for (int i = 0; i < net.num_vertices(); ++i) e += energy.vertex[i].value(state.gamma(i));
  return e;
}

FlowIntegrator::FlowIntegrator(const Network& net, const GridSpec& grid, const EnergySpec& energy,
                               double dt)
    : net_(net), grid_(grid), energy_(energy), dt_(dt) {
  energy.check_conforms(net);
  if (!(dt > 0.0)) throw std::invalid_argument("gradflow: time step must be positive");
  if (grid.num_edges() != net.num_edges()) {
    throw NetworkError(NetworkErrorKind::ShapeMismatch, "grid does not match network");
  }
  for (int j = 0; j < net.num_edges(); ++j) {
    offset_.push_back(unknowns_);
    unknowns_ += grid.cells[j];
    const int N = grid.cells[j];
    Eigen::VectorXd wc(N), dw(N + 1);
    for (int c = 0; c < N; ++c) wc(c) = energy.potential[j](grid.cell_center(j, c));
    for (int f = 0; f <= N; ++f) dw(f) = energy.potential_derivative[j](grid.face(j, f));
    w_center_.push_back(wc);
    dw_face_.push_back(dw);
    w_tail_.push_back(energy.potential[j](0.0));
    w_head_.push_back(energy.potential[j](net.edge(j).length));
  }
  const int vbase = unknowns_;
  unknowns_ += net.num_vertices();

  // diffusive fluxes J (positive towards the head), implicit part only
  std::vector<Eigen::Triplet<double>> t;
  for (int j = 0; j < net.num_edges(); ++j) {
    const int N = grid.cells[j];
    const double dx = grid.dx[j];
    const int o = offset_[j];
    const int tail = vbase + net.edge(j).tail;
    const int head = vbase + net.edge(j).head;
    const double et = std::exp(-w_tail_[j]);
    const double eh = std::exp(-w_head_[j]);
    for (int c = 0; c < N; ++c) t.emplace_back(o + c, o + c, 1.0 / dt);
    // interior faces: J = -(rho_c - rho_{c-1}) / dx, cell c-1 loses J/dx, cell c gains it
    for (int f = 1; f < N; ++f) {
      const double k = 1.0 / (dx * dx);
      t.emplace_back(o + f - 1, o + f - 1, k);
      t.emplace_back(o + f - 1, o + f, -k);
      t.emplace_back(o + f, o + f, k);
      t.emplace_back(o + f, o + f - 1, -k);
    }
    // tail face: J_0 = -(rho_0 - et u) * 2/dx, enters cell 0 and leaves the tail vertex
    const double kb = 2.0 / (dx * dx);
    t.emplace_back(o, o, kb);
    t.emplace_back(o, tail, -kb * et);
    t.emplace_back(tail, o, -2.0 / dx);
    t.emplace_back(tail, tail, 2.0 / dx * et);
    // head face: J_N = -(eh u - rho_{N-1}) * 2/dx, leaves cell N-1 and enters the head vertex
    t.emplace_back(o + N - 1, o + N - 1, kb);
    t.emplace_back(o + N - 1, head, -kb * eh);
    t.emplace_back(head, head, 2.0 / dx * eh);
    t.emplace_back(head, o + N - 1, -2.0 / dx);
  }
  Eigen::SparseMatrix<double> A(unknowns_, unknowns_);
  A.setFromTriplets(t.begin(), t.end());
  A.makeCompressed();
  lu_.compute(A);
  if (lu_.info() != Eigen::Success) throw std::runtime_error("gradflow: factorization failed");
}

Eigen::VectorXd FlowIntegrator::vertex_trace(const FlowState& state) const {
  Eigen::VectorXd u = Eigen::VectorXd::Zero(net_.num_vertices());
  for (int i = 0; i < net_.num_vertices(); ++i) {
    for (const auto& inc : net_.incidence(i)) {
      const int j = inc.edge;
      const int N = grid_.cells[j];
      u(i) += inc.sign > 0 ? state.rho[j](N - 1) * std::exp(w_head_[j]) : state.rho[j](0) * std::exp(w_tail_[j]);
    }
    u(i) /= net_.degree(i);
  }
  return u;
}

double cfl_bound(const FlowState& state, const EnergySpec& energy, const Network& net,
                 const GridSpec& grid) {
  energy.check_conforms(net);
  double bound = std::numeric_limits<double>::infinity();
  for (int j = 0; j < net.num_edges(); ++j) {
    double wmax = 0.0;
    for (int f = 0; f <= grid.cells[j]; ++f) {
      wmax = std::max(wmax, std::abs(energy.potential_derivative[j](grid.face(j, f))));
    }
    if (wmax > 0.0) bound = std::min(bound, 0.4 * grid.dx[j] / wmax);
  }
  for (int i = 0; i < net.num_vertices(); ++i) {
    if (state.gamma(i) <= 0.0) continue;
    const double drive =
        std::abs(energy.vertex[i].derivative(state.gamma(i)) - edge_potential_mean(state, energy, net, grid, i));
    if (drive > 0.0) bound = std::min(bound, 0.4 * energy.kappa * energy.kappa / drive);
  }
  return bound;
}

FlowState FlowIntegrator::step(const FlowState& state) const {
  if (dt_ > cfl_bound(state, energy_, net_, grid_) * (1.0 + 1e-12)) {
    throw std::domain_error("gradflow: time step violates the CFL bound");
  }
  const int vbase = unknowns_ - net_.num_vertices();
  const Eigen::VectorXd u = vertex_trace(state);
  const double k2 = energy_.kappa * energy_.kappa;

  // explicit vertex exchange: d gamma / dt = g
  Eigen::VectorXd g(net_.num_vertices());
  for (int i = 0; i < net_.num_vertices(); ++i) {
    const double gam = state.gamma(i);
    g(i) = -gam / k2 * (energy_.vertex[i].derivative(gam) - edge_potential_mean(state, energy_, net_, grid_, i));
  }

  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(unknowns_);
  for (int i = 0; i < net_.num_vertices(); ++i) rhs(vbase + i) = -g(i);
  for (int j = 0; j < net_.num_edges(); ++j) {
    const int N = grid_.cells[j];
    const double dx = grid_.dx[j];
    const int o = offset_[j];
    const auto& r = state.rho[j];
    const int tail = net_.edge(j).tail;
    const int head = net_.edge(j).head;
    // drift flux D = v rho_upwind with v = -W'
    Eigen::VectorXd D(N + 1);
    for (int f = 0; f <= N; ++f) {
      const double v = -dw_face_[j](f);
      double left, right;
      if (f == 0) {
        left = u(tail) * std::exp(-w_tail_[j]);
        right = r(0);
      } else if (f == N) {
        left = r(N - 1);
        right = u(head) * std::exp(-w_head_[j]);
      } else {
        left = r(f - 1);
        right = r(f);
      }
      D(f) = v > 0.0 ? v * left : v * right;
    }
    for (int c = 0; c < N; ++c) rhs(o + c) = r(c) / dt_ - (D(c + 1) - D(c)) / dx;
    // vertex rows hold -(inflow), inflow being J + D at heads and -(J + D) at tails; inflow = g
    rhs(vbase + tail) -= D(0);
    rhs(vbase + head) += D(N);
  }
  const Eigen::VectorXd sol = lu_.solve(rhs);

  FlowState next;
  next.t = state.t + dt_;
  for (int j = 0; j < net_.num_edges(); ++j) next.rho.push_back(sol.segment(offset_[j], grid_.cells[j]));
  next.gamma = state.gamma + dt_ * g;
  return next;
}

FlowState flow_step(const FlowState& state, double dt, const EnergySpec& energy, const Network& net,
                    const GridSpec& grid) {
  return FlowIntegrator(net, grid, energy, dt).step(state);
}

FlowTrajectory simulate(const FlowState& initial, double T, double dt, const EnergySpec& energy,
                        const Network& net, const GridSpec& grid, int record_every) {
  if (!(T >= 0.0)) throw std::invalid_argument("gradflow: horizon must be nonnegative");
  if (record_every < 1) record_every = 1;
  const FlowIntegrator integrator(net, grid, energy, dt);
  FlowTrajectory out;
  FlowState s = initial;
  out.states.push_back(s);
  out.energy.push_back(energy_eval(s, energy, net, grid));
  double e_prev = out.energy.back();
  double m_prev = s.mass(net, grid);
  const int steps = static_cast<int>(std::ceil(T / dt - 1e-9));
  for (int n = 1; n <= steps; ++n) {
    s = integrator.step(s);
    const double e = energy_eval(s, energy, net, grid);
    const double m = s.mass(net, grid);
    out.max_mass_drift = std::max(out.max_mass_drift, std::abs(m - m_prev));
    if (e > e_prev + 1e-9) ++out.energy_increases;
    e_prev = e;
    m_prev = m;
    if (n % record_every == 0 || n == steps) {
      out.states.push_back(s);
      out.energy.push_back(e);
    }
  }
  return out;
}

}  // namespace netot
