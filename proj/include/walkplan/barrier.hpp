#pragma once

#include <vector>

#include "walkplan/world.hpp"

namespace walkplan {

// p-norm super-ellipse barrier region. h < 0 inside, h = 0 on the inflated
// boundary, h > 0 outside. p = 2 with equal radii is a circle; p around 10
// approximates a box while staying smooth. `rotation` is applied to the
// centered offset before the per-axis scaling.
struct Obstacle {
  double center_x = 0.0;
  double center_y = 0.0;
  double radius_x = 1.0;
  double radius_y = 1.0;
  double buffer_x = 0.0;
  double buffer_y = 0.0;
  double norm_p = 10.0;
  double rotation = 0.0;
};

struct BarrierSpec {
  std::vector<Obstacle> obstacles;
  double gamma = 0.75;            // in (0, 1]
  double activation_radius = 5.0;  // m
};

// h(x, y) = ( |u/(r_x+b_x)|^p + |v/(r_y+b_y)|^p )^(1/p) - 1 with (u, v) the
// rotated offset from center.
double barrier_value(const Obstacle& obstacle, double x, double y);

// Discrete decrease condition h_k1 >= (1 - gamma) * h_k. Exact inequality;
// solver tolerance is applied by the caller. Also admits recovery from
// h_k < 0: the bound then forces h upward toward the safe set.
bool dcbf_condition(double h_k, double h_k1, double gamma);

// Obstacles close enough to matter for a local horizon, sorted by ascending
// barrier value (nearest region first, stable on ties). An obstacle is
// active when h(position) <= activation_radius / max(radius_x, radius_y).
std::vector<Obstacle> active_obstacles(const BarrierSpec& spec, double x,
                                       double y);

// One obstacle per 8-connected component of cells with occupancy >=
// threshold: centered on the component bounding box, radii = half-extents
// clamped to at least half a cell, then inflated just enough that every
// occupied cell center of the component satisfies h <= 0 at buffer 0 (a
// bounding-box corner cell can poke outside the p-norm ball for wide
// components).
std::vector<Obstacle> extract_obstacles(const OccupancyGrid& grid,
                                        double threshold, double buffer,
                                        double norm_p);

}  // namespace walkplan
