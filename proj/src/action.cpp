#include "netot/action.hpp"

#include <stdexcept>

namespace netot {

VertexPoint project_vertex_set(const VertexPoint& point, double kappa) {
  if (!(kappa > 0.0)) throw std::invalid_argument("project_vertex_set: kappa must be positive");
  const int d = static_cast<int>(point.c.size());
  if (d < 1) throw std::invalid_argument("project_vertex_set: empty incidence vector");

  const double wnorm2 = 1.0 + 1.0 / d;
  const double wnorm = std::sqrt(wnorm2);
  const double s = point.b - point.c.mean();
  const double t = s / wnorm;  // coordinate along w / |w|
  const auto [a_new, t_new] = project_paraboloid(point.a, t, kappa * kappa / wnorm2);

  // shift (b, c) along w by (t_new - t) / |w| * w
  const double step = (t_new - t) / wnorm;
  VertexPoint out;
  out.a = a_new;
  out.b = point.b + step;
  out.c = point.c.array() - step / d;
  return out;
}

ActionBreakdown action_eval(const TrajectoryField& field, double kappa, const Network& net,
                            const GridSpec& grid) {
  field.check_conforms(net, grid);
  ActionBreakdown out;
  const double dt = grid.dt;
  for (int j = 0; j < net.num_edges(); ++j) {
    const int N = grid.cells[j];
    double sum = 0.0;
    for (int k = 0; k < grid.steps; ++k) {
      for (int f = 0; f <= N; ++f) {
        const double w = (f == 0 || f == N) ? 0.5 * grid.dx[j] : grid.dx[j];
        sum += w * dt * action_density(field.face_density(j, k, f), field.flux[j](k, f));
      }
    }
    out.per_edge.push_back(sum);
    out.edge += sum;
  }
  out.per_vertex.assign(net.num_vertices(), 0.0);
  if (kappa != 0.0) {
    for (int i = 0; i < net.num_vertices(); ++i) {
      double sum = 0.0;
      for (int k = 0; k < grid.steps; ++k) {
        sum += dt * action_density(field.mid_gamma(i, k), field.exchange(k, i));
      }
      out.per_vertex[i] = kappa * kappa * sum;
      out.vertex += out.per_vertex[i];
    }
  }
  out.total = out.edge + out.vertex;
  return out;
}

}  // namespace netot
