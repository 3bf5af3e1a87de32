#include "walkplan/barrier.hpp"

#include <algorithm>
#include <cmath>

namespace walkplan {

namespace {

// ( |u|^p + |v|^p )^(1/p) without overflow for large offsets.
double p_norm(double u, double v, double p) {
  u = std::abs(u);
  v = std::abs(v);
  const double m = std::max(u, v);
  if (m == 0.0) return 0.0;
  return m * std::pow(std::pow(u / m, p) + std::pow(v / m, p), 1.0 / p);
}

}  // namespace

double barrier_value(const Obstacle& obstacle, double x, double y) {
  const double dx = x - obstacle.center_x;
  const double dy = y - obstacle.center_y;
  double u = dx;
  double v = dy;
  if (obstacle.rotation != 0.0) {
    const double c = std::cos(obstacle.rotation);
    const double s = std::sin(obstacle.rotation);
    u = c * dx + s * dy;
    v = -s * dx + c * dy;
  }
  u /= obstacle.radius_x + obstacle.buffer_x;
  v /= obstacle.radius_y + obstacle.buffer_y;
  return p_norm(u, v, obstacle.norm_p) - 1.0;
}

bool dcbf_condition(double h_k, double h_k1, double gamma) {
  return h_k1 >= (1.0 - gamma) * h_k;
}

std::vector<Obstacle> active_obstacles(const BarrierSpec& spec, double x,
                                       double y) {
  std::vector<std::pair<double, std::size_t>> keyed;
  for (std::size_t i = 0; i < spec.obstacles.size(); ++i) {
    const Obstacle& o = spec.obstacles[i];
    const double h = barrier_value(o, x, y);
    if (h <= spec.activation_radius / std::max(o.radius_x, o.radius_y)) {
      keyed.emplace_back(h, i);
    }
  }
  std::stable_sort(keyed.begin(), keyed.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<Obstacle> out;
  out.reserve(keyed.size());
  for (const auto& [h, i] : keyed) out.push_back(spec.obstacles[i]);
  return out;
}

std::vector<Obstacle> extract_obstacles(const OccupancyGrid& grid,
                                        double threshold, double buffer,
                                        double norm_p) {
  std::vector<Obstacle> out;
  std::vector<char> visited(grid.cells.size(), 0);
  std::vector<int> stack;
  std::vector<int> component;
  for (int iy = 0; iy < grid.height; ++iy) {
    for (int ix = 0; ix < grid.width; ++ix) {
      const int seed = grid.index(ix, iy);
      if (visited[seed] || grid.cells[seed] < threshold) continue;
      component.clear();
      stack.assign(1, seed);
      visited[seed] = 1;
      while (!stack.empty()) {
        const int cell = stack.back();
        stack.pop_back();
        component.push_back(cell);
        const int cx = cell % grid.width;
        const int cy = cell / grid.width;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            if (dx == 0 && dy == 0) continue;
            const int nx = cx + dx;
            const int ny = cy + dy;
            if (!grid.inside(nx, ny)) continue;
            const int n = grid.index(nx, ny);
            if (visited[n] || grid.cells[n] < threshold) continue;
            visited[n] = 1;
            stack.push_back(n);
          }
        }
      }

      int min_ix = grid.width, max_ix = -1, min_iy = grid.height, max_iy = -1;
      for (int cell : component) {
        const int cx = cell % grid.width;
        const int cy = cell / grid.width;
        min_ix = std::min(min_ix, cx);
        max_ix = std::max(max_ix, cx);
        min_iy = std::min(min_iy, cy);
        max_iy = std::max(max_iy, cy);
      }
      Obstacle o;
      o.center_x = grid.origin_x + (min_ix + max_ix + 1) * 0.5 * grid.resolution;
      o.center_y = grid.origin_y + (min_iy + max_iy + 1) * 0.5 * grid.resolution;
      o.radius_x =
          std::max((max_ix - min_ix + 1) * 0.5 * grid.resolution,
                   0.5 * grid.resolution);
      o.radius_y =
          std::max((max_iy - min_iy + 1) * 0.5 * grid.resolution,
                   0.5 * grid.resolution);
      o.buffer_x = buffer;
      o.buffer_y = buffer;
      o.norm_p = norm_p;

      double worst = 0.0;
      for (int cell : component) {
        const int cx = cell % grid.width;
        const int cy = cell / grid.width;
        const double u =
            (grid.cell_center_x(cx) - o.center_x) / o.radius_x;
        const double v =
            (grid.cell_center_y(cy) - o.center_y) / o.radius_y;
        worst = std::max(worst, p_norm(u, v, norm_p));
      }
      if (worst > 1.0) {
        o.radius_x *= worst;
        o.radius_y *= worst;
      }
      out.push_back(o);
    }
  }
  return out;
}

}  // namespace walkplan
