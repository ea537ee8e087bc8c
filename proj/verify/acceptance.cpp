#include "netot/verify/acceptance.hpp"

#include "netot/gradflow.hpp"
#include "netot/metrics.hpp"
#include "netot/solver.hpp"
#include "netot/verify/instances.hpp"
#include "netot/verify/oracles.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>

namespace netot::verify {

namespace {

using Clock = std::chrono::steady_clock;

constexpr double kAbsSlack = 1e-8;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << v;
  return s.str();
}

// least-squares slope of log(y) against log(x)
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const int n = static_cast<int>(x.size());
  double mx = 0, my = 0;
  for (int i = 0; i < n; ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0;
  for (int i = 0; i < n; ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

struct SolveRecord {
  std::string label;
  bool converged = false;
  double value = 0.0;
  double gap = 0.0;
  double hj = 0.0;
  double mass_drift = 0.0;
  int iterations = 0;
};

class Suite {
 public:
  explicit Suite(const SuiteOptions& o) : opt_(o) {
    params_.tol_gap = 1e-5;
    params_.tol_consensus = 1e-5;
    params_.max_iters = 40000;
  }

  std::vector<CriterionResult> run() {
    add(1, "identity and metric axioms", [&](CriterionResult& r) { metric_axioms(r); });
    add(2, "one-dimensional oracle", [&](CriterionResult& r) { one_d_oracle(r); });
    add(5, "sandwich and bounded-Lipschitz estimate", [&](CriterionResult& r) { sandwich(r); });
    add(6, "kappa monotonicity and limits", [&](CriterionResult& r) { kappa_limits(r); });
    add(7, "vertex Fisher-Rao closed form", [&](CriterionResult& r) { fisher_rao_check(r); });
    add(8, "optimality relations under refinement", [&](CriterionResult& r) { optimality(r); });
    add(9, "vertex activity", [&](CriterionResult& r) { vertex_activity(r); });
    add(10, "gradient flow", [&](CriterionResult& r) { gradient_flow(r); });
    add(11, "tiny instance against interior-point oracle", [&](CriterionResult& r) { tiny_oracle(r); });
    add(3, "duality gap and Hamilton-Jacobi residual", [&](CriterionResult& r) { duality(r); });
    add(4, "mass conservation of geodesics", [&](CriterionResult& r) { mass(r); });
    std::sort(results_.begin(), results_.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    return results_;
  }

 private:
  SuiteOptions opt_;
  SolverParams params_;
  std::vector<CriterionResult> results_;
  std::vector<SolveRecord> solves_;
  // single-edge refinement runs shared by criteria 2 and 8: (cells, value, oracle, r1)
  struct Level {
    int cells, steps;
    double value, oracle, r1;
  };
  std::vector<Level> levels_;

  void add(int id, const std::string& name, const std::function<void(CriterionResult&)>& body) {
    CriterionResult r;
    r.id = id;
    r.name = name;
    const auto t0 = Clock::now();
    try {
      body(r);
    } catch (const std::exception& e) {
      r.passed = false;
      r.detail = std::string("exception: ") + e.what();
    }
    r.seconds = seconds_since(t0);
    if (opt_.log) *opt_.log << format_result(r) << std::endl;
    results_.push_back(r);
  }

  SolveReport solve(const std::string& label, const Network& net, const GridSpec& grid,
                    const Endpoints& ep, double kappa, VertexMode mode = VertexMode::Active) {
    SolveReport rep = solve_transport(net, grid, ep, kappa, mode, params_);
    SolveRecord rec;
    rec.label = label;
    rec.converged = rep.converged;
    rec.value = rep.value;
    rec.gap = rep.gap;
    const HJResidual hj = hj_residual(rep.duals, kappa, net, grid, mode);
    rec.hj = std::max(hj.edge, hj.vertex);
    const double m0 = rep.geodesic.mass(net, grid, 0);
    for (int k = 0; k <= grid.steps; ++k) {
      rec.mass_drift = std::max(rec.mass_drift, std::abs(rep.geodesic.mass(net, grid, k) - m0));
    }
    rec.iterations = rep.iterations;
    solves_.push_back(rec);
    return rep;
  }

  int instances() const { return opt_.quick ? 2 : 5; }

  void metric_axioms(CriterionResult& r) {
    const Network net = y_graph();
    const GridSpec grid = GridSpec::uniform(net, opt_.quick ? 16 : 32, opt_.quick ? 8 : 16);
    bool ok = true;
    double worst_id = 0, worst_sym = 0, worst_tri = -1e300, worst_time = 0;
    for (int n = 0; n < instances(); ++n) {
      const auto t0 = Clock::now();
      std::mt19937 rng(1000 + n);
      const NetworkMeasure a = random_measure(net, grid, rng);
      const NetworkMeasure b = random_measure(net, grid, rng);
      const NetworkMeasure c = random_measure(net, grid, rng);
      const std::string tag = "axioms#" + std::to_string(n);
      const double waa = solve(tag + " aa", net, grid, {a, a}, 1.0).value;
      const double wab = solve(tag + " ab", net, grid, {a, b}, 1.0).value;
      const double wba = solve(tag + " ba", net, grid, {b, a}, 1.0).value;
      const double wbc = solve(tag + " bc", net, grid, {b, c}, 1.0).value;
      const double wac = solve(tag + " ac", net, grid, {a, c}, 1.0).value;
      const double sym = std::abs(wab - wba) / std::max(wab, wba);
      // triangle: sqrt(W(a,c)) <= (sqrt(W(a,b)) + sqrt(W(b,c))) * 1.02
      const double tri = std::sqrt(wac) / (std::sqrt(wab) + std::sqrt(wbc)) - 1.0;
      const double secs = seconds_since(t0);
      worst_id = std::max(worst_id, waa);
      worst_sym = std::max(worst_sym, sym);
      worst_tri = std::max(worst_tri, tri);
      worst_time = std::max(worst_time, secs);
      ok = ok && waa <= 1e-3 && sym <= 0.02 && tri <= 0.02 && secs <= 60.0;
    }
    r.passed = ok;
    r.detail = "max W(a,a)=" + fmt(worst_id) + ", max asymmetry=" + fmt(worst_sym) +
               ", max triangle excess=" + fmt(worst_tri) + ", max seconds/instance=" + fmt(worst_time, 3);
  }

  void refinement_levels() {
    if (!levels_.empty()) return;
    std::vector<std::pair<int, int>> sizes = opt_.quick ? std::vector<std::pair<int, int>>{{16, 8}, {32, 16}, {64, 32}}
                                                        : std::vector<std::pair<int, int>>{{32, 16}, {64, 32}, {128, 64}};
    const Network net = single_edge();
    for (auto [N, P] : sizes) {
      const GridSpec grid = GridSpec::uniform(net, N, P);
      const Endpoints ep{bump_measure(net, grid, 0, 0.25, 0.05), bump_measure(net, grid, 0, 0.75, 0.05)};
      const SolveReport rep = solve("bump N=" + std::to_string(N), net, grid, ep, 1.0);
      const double oracle = wasserstein_edge_1d(ep.initial.edge_densities[0], ep.terminal.edge_densities[0], 1.0);
      const double r1 = optimality_residual(rep.geodesic, rep.duals, 1.0, net, grid).r1;
      levels_.push_back({N, P, rep.value, oracle, r1});
    }
  }

  void one_d_oracle(CriterionResult& r) {
    refinement_levels();
    const Level& coarse = levels_[1];
    const Level& fine = levels_[2];
    const double e0 = std::abs(coarse.value - coarse.oracle) / coarse.oracle;
    const double e1 = std::abs(fine.value - fine.oracle) / fine.oracle;
    r.passed = e0 <= 0.05 && e1 < e0;
    r.detail = "N=" + std::to_string(coarse.cells) + ": value=" + fmt(coarse.value, 8) + " oracle=" +
               fmt(coarse.oracle, 8) + " rel.err=" + fmt(e0) + "; N=" + std::to_string(fine.cells) +
               ": rel.err=" + fmt(e1);
  }

  void optimality(CriterionResult& r) {
    refinement_levels();
    std::vector<double> h, r1;
    std::string detail = "r1:";
    for (const auto& l : levels_) {
      h.push_back(1.0 / l.cells);
      r1.push_back(l.r1);
      detail += " N=" + std::to_string(l.cells) + ":" + fmt(l.r1);
    }
    const double slope = loglog_slope(h, r1);
    r.passed = slope >= 0.5;
    r.detail = detail + ", slope=" + fmt(slope);
  }

  void sandwich(CriterionResult& r) {
    const Network net = y_graph();
    const GridSpec grid = GridSpec::uniform(net, opt_.quick ? 16 : 32, opt_.quick ? 8 : 16);
    const double kappa = 1.0;
    bool ok = true;
    double worst_lower = -1e300, worst_upper = -1e300, worst_bl = -1e300;
    for (int n = 0; n < instances(); ++n) {
      std::mt19937 rng(2000 + n);
      const NetworkMeasure a = random_measure(net, grid, rng);
      NetworkMeasure b = random_measure(net, grid, rng);
      b.vertex_masses = a.vertex_masses;
      normalize_edges(b, net);
      const std::string tag = "sandwich#" + std::to_string(n);
      const SolveReport rep = solve(tag, net, grid, {a, b}, kappa);
      const double we = solve(tag + " frozen", net, grid, {a, b}, kappa, VertexMode::Frozen).value;
      // the Fisher-Rao bound is only informative when the vertex masses differ
      const NetworkMeasure c = random_measure(net, grid, rng);
      const double wac = solve(tag + " incompatible", net, grid, {a, c}, kappa).value;
      const double fr = fisher_rao(a.vertex_masses, c.vertex_masses, kappa);
      const double lower = fr / wac - 1.0;
      const double upper = rep.value / we - 1.0;
      const double C = bl_constant(net, kappa);
      const double action = rep.action.total;
      double bl = -1e300;
      for (int s = 0; s <= grid.steps; ++s) {
        for (int t = s + 1; t <= grid.steps; ++t) {
          const double lhs = bl_slice_distance(rep.geodesic, s, t, net, grid);
          const double rhs = C * std::sqrt(action) * std::sqrt(grid.time_node(t) - grid.time_node(s));
          bl = std::max(bl, lhs / rhs);
        }
      }
      worst_lower = std::max(worst_lower, lower);
      worst_upper = std::max(worst_upper, upper);
      worst_bl = std::max(worst_bl, bl);
      ok = ok && lower <= 0.01 && upper <= 0.01 && bl <= 1.0;
    }
    r.passed = ok;
    r.detail = "max FR/W-1=" + fmt(worst_lower) + ", max W/W_E-1=" + fmt(worst_upper) +
               ", max BL ratio=" + fmt(worst_bl);
  }

  void kappa_limits(CriterionResult& r) {
    const Network net = y_graph();
    const GridSpec grid = GridSpec::uniform(net, opt_.quick ? 16 : 32, opt_.quick ? 8 : 16);
    const std::vector<double> kappas = {0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0};
    std::mt19937 rng(3000);
    const NetworkMeasure a = random_measure(net, grid, rng);
    NetworkMeasure b = random_measure(net, grid, rng);
    const NetworkMeasure c = b;
    b.vertex_masses = a.vertex_masses;
    normalize_edges(b, net);

    auto sweep = [&](const std::string& tag, const Endpoints& ep, bool reference) {
      KappaSweep sw = sweep_kappa(net, grid, ep, kappas, params_, reference);
      for (std::size_t k = 0; k < kappas.size(); ++k) {
        solves_.push_back({tag + " kappa=" + fmt(kappas[k]), sw.converged[k], sw.values[k], sw.gaps[k], 0.0, 0.0, 0});
      }
      return sw;
    };
    auto monotone = [&](const KappaSweep& sw) {
      bool ok = true;
      for (std::size_t k = 0; k + 1 < kappas.size(); ++k) {
        const double slack = std::abs(sw.gaps[k]) + std::abs(sw.gaps[k + 1]) + 1e-5 * (sw.values[k] + sw.values[k + 1]);
        ok = ok && sw.monotonicity_defects[k] <= slack;
      }
      return ok;
    };

    const KappaSweep comp = sweep("compatible", {a, b}, true);
    const double limit_err = std::abs(comp.values.back() - comp.reference) / comp.reference;
    std::vector<double> ks, fs;
    for (std::size_t k = 0; k < kappas.size(); ++k) {
      if (kappas[k] >= 1.0) {
        ks.push_back(kappas[k]);
        fs.push_back(comp.flux_norms[k]);
      }
    }
    const double slope = loglog_slope(ks, fs);

    const KappaSweep inc = sweep("incompatible", {a, c}, false);
    bool lower_ok = true;
    double worst_ratio = 1e300;
    for (std::size_t k = 0; k < kappas.size(); ++k) {
      const double bound = kappas[k] * kappas[k] * inc.mass_gap;
      worst_ratio = std::min(worst_ratio, inc.values[k] / bound);
      lower_ok = lower_ok && inc.values[k] + std::abs(inc.gaps[k]) >= bound;
    }
    const bool mono = monotone(comp) && monotone(inc);
    r.passed = mono && limit_err <= 0.05 && slope <= -0.8 && lower_ok;
    r.detail = std::string("monotone=") + (mono ? "yes" : "no") + ", |W_16/W_E-1|=" + fmt(limit_err) +
               ", flux slope (kappa>=1)=" + fmt(slope) + ", min W/(kappa^2 mass gap)=" + fmt(worst_ratio);
  }

  void fisher_rao_check(CriterionResult& r) {
    std::mt19937 rng(4000);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double worst = 0.0;
    for (int n = 0; n < 20; ++n) {
      Eigen::VectorXd g0(1), g1(1);
      g0(0) = unit(rng);
      g1(0) = unit(rng);
      const double kappa = 0.25 + 3.75 * unit(rng);
      const double closed = fisher_rao(g0, g1, kappa);
      const double program = fisher_rao_discrete(g0, g1, kappa, 200);
      worst = std::max(worst, std::abs(closed - program) / closed);
    }
    r.passed = worst <= 1e-3;
    r.detail = "max relative difference=" + fmt(worst);
  }

  void vertex_activity(CriterionResult& r) {
    const Network net = path_graph(2);
    const GridSpec grid = GridSpec::uniform(net, opt_.quick ? 16 : 32, opt_.quick ? 8 : 16);
    NetworkMeasure a = bump_measure(net, grid, 0, 0.5, 0.15);
    NetworkMeasure b = bump_measure(net, grid, 1, 0.5, 0.15);
    a.vertex_masses.setConstant(0.1);
    b.vertex_masses.setConstant(0.1);
    normalize_edges(a, net);
    normalize_edges(b, net);
    const SolveReport rep = solve("vertex activity", net, grid, {a, b}, 1.0);
    const double fmax = rep.geodesic.exchange.cwiseAbs().maxCoeff();
    r.passed = rep.converged && fmax > 10.0 * params_.tol_ce;
    r.detail = "max |f|=" + fmt(fmax) + ", threshold=" + fmt(10.0 * params_.tol_ce) +
               ", converged=" + (rep.converged ? "yes" : "no");
  }

  void gradient_flow(CriterionResult& r) {
    // pure diffusion on one edge
    const Network one = single_edge();
    const GridSpec g1 = GridSpec::uniform(one, 50, 1);
    FlowState s;
    s.rho.push_back(bump_measure(one, g1, 0, 0.3, 0.08).edge_densities[0]);
    s.gamma = Eigen::VectorXd::Zero(2);
    const EnergySpec flat = EnergySpec::flat(one, 1.0);
    const FlowTrajectory diff = simulate(s, 10.0, 0.01, flat, one, g1, 100);
    const double uniform_err = (diff.states.back().rho[0].array() - 1.0).abs().maxCoeff();

    // two edges through a shared vertex, W_1 = 0 and W_2 = log 2
    const Network two = path_graph(2);
    const GridSpec g2 = GridSpec::uniform(two, 40, 1);
    EnergySpec e = EnergySpec::flat(two, 1.0);
    e.potential[1] = [](double) { return std::log(2.0); };
    for (auto& v : e.vertex) v.kind = VertexEnergy::Kind::Entropy;
    FlowState t;
    t.rho.push_back(bump_measure(two, g2, 0, 0.4, 0.1).edge_densities[0] * 0.8);
    t.rho.push_back(Eigen::VectorXd::Constant(40, 0.05));
    t.gamma = Eigen::VectorXd::Constant(3, 0.05);
    const FlowTrajectory tr = simulate(t, 50.0, 0.01, e, two, g2, 1000);
    const FlowState& end = tr.states.back();
    const double left = end.rho[0](39);                    // edge 1 at the shared vertex
    const double right = end.rho[1](0) * std::exp(std::log(2.0));
    const double transmission = std::abs(left - right) / std::max(left, right);
    const double ratio = end.rho[0].mean() / end.rho[1].mean();

    const double drift = std::max(diff.max_mass_drift, tr.max_mass_drift);
    r.passed = drift <= 1e-10 && diff.energy_increases == 0 && transmission <= 0.01 &&
               std::abs(ratio / 2.0 - 1.0) <= 0.01 && uniform_err <= 1e-4;
    r.detail = "max mass change per step=" + fmt(drift) + ", energy increases=" +
               std::to_string(diff.energy_increases) + ", transmission defect=" + fmt(transmission) +
               ", edge mean ratio=" + fmt(ratio, 6) + ", diffusion uniformity error=" + fmt(uniform_err);
  }

  void tiny_oracle(CriterionResult& r) {
    const Network net = single_edge();
    const GridSpec grid = GridSpec::uniform(net, 3, 3);
    NetworkMeasure a, b;
    a.edge_densities.push_back((Eigen::VectorXd(3) << 1.5, 0.9, 0.3).finished());
    a.vertex_masses = (Eigen::VectorXd(2) << 0.2, 0.1).finished();
    b.edge_densities.push_back((Eigen::VectorXd(3) << 0.3, 0.6, 1.8).finished());
    b.vertex_masses = (Eigen::VectorXd(2) << 0.05, 0.3).finished();
    normalize(a, net);
    normalize(b, net);
    const OracleResult oracle = barrier_oracle(net, grid, {a, b}, 1.0);
    SolverParams tight = params_;
    tight.tol_gap = 1e-7;
    tight.tol_consensus = 1e-7;
    const SolveReport rep = solve_geodesic(net, grid, {a, b}, 1.0, tight);
    solves_.push_back({"tiny", rep.converged, rep.value, rep.gap,
                       [&] {
                         const HJResidual hj = hj_residual(rep.duals, 1.0, net, grid);
                         return std::max(hj.edge, hj.vertex);
                       }(),
                       0.0, rep.iterations});
    const double rel = std::abs(rep.value - oracle.value) / oracle.value;
    r.passed = oracle.converged && rep.converged && rel <= 1e-3;
    r.detail = "solver=" + fmt(rep.value, 10) + " oracle=" + fmt(oracle.value, 10) + " rel.diff=" + fmt(rel) +
               " (oracle Newton steps " + std::to_string(oracle.newton_steps) + ")";
  }

  void duality(CriterionResult& r) {
    int converged = 0, failed = 0;
    double worst_gap = 0.0, worst_hj = 0.0;
    std::string bad;
    for (const auto& s : solves_) {
      if (!s.converged) {
        bad += " [" + s.label + " did not converge]";
        ++failed;
        continue;
      }
      ++converged;
      // absolute slack at the constraint tolerance, so that W = 0 instances are judged fairly
      const double gap_rel = std::max(0.0, std::abs(s.gap) - kAbsSlack) / std::max(s.value, 1e-300);
      const double hj_rel = std::max(0.0, s.hj - kAbsSlack) / std::max(s.value, 1e-300);
      worst_gap = std::max(worst_gap, gap_rel);
      worst_hj = std::max(worst_hj, hj_rel);
      if (gap_rel > 1e-4 || hj_rel > 1e-3) bad += " [" + s.label + "]";
    }
    r.passed = failed == 0 && worst_gap <= 1e-4 && worst_hj <= 1e-3;
    r.detail = std::to_string(converged) + " converged solves, max gap/value=" + fmt(worst_gap) +
               ", max HJ/value=" + fmt(worst_hj) + bad;
  }

  void mass(CriterionResult& r) {
    double worst = 0.0;
    int counted = 0;
    for (const auto& s : solves_) {
      if (s.iterations == 0) continue;  // sweep records carry no geodesic
      worst = std::max(worst, s.mass_drift);
      ++counted;
    }
    r.passed = worst <= 1e-10;
    r.detail = std::to_string(counted) + " geodesics, max slice mass deviation=" + fmt(worst);
  }
};

}  // namespace

std::vector<CriterionResult> run_acceptance(const SuiteOptions& options) {
  return Suite(options).run();
}

std::string format_result(const CriterionResult& r) {
  std::ostringstream s;
  s << (r.passed ? "PASS" : "FAIL") << "  " << (r.id < 10 ? " " : "") << r.id << "  " << r.name << "  ("
    << r.detail << "; " << fmt(r.seconds, 3) << " s)";
  return s.str();
}

}  // namespace netot::verify
