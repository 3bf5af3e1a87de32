#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "walkplan/errors.hpp"

namespace walkplan {

// Row-major probability grid. Cell (ix, iy) covers
// [origin + ix*res, origin + (ix+1)*res) x [origin + iy*res, ...): row 0 is
// the minimum-y row. Values are occupancy probabilities in [0, 1]; 0.5 marks
// unexplored space.
struct OccupancyGrid {
  int width = 0;
  int height = 0;
  double resolution = 1.0;
  double origin_x = 0.0;
  double origin_y = 0.0;
  std::vector<double> cells;

  int index(int ix, int iy) const { return iy * width + ix; }
  bool inside(int ix, int iy) const {
    return ix >= 0 && ix < width && iy >= 0 && iy < height;
  }
  double at(int ix, int iy) const { return cells[index(ix, iy)]; }
  double& at(int ix, int iy) { return cells[index(ix, iy)]; }

  // False when (x, y) falls outside the grid extent.
  bool world_to_cell(double x, double y, int& ix, int& iy) const;
  double cell_center_x(int ix) const {
    return origin_x + (ix + 0.5) * resolution;
  }
  double cell_center_y(int iy) const {
    return origin_y + (iy + 0.5) * resolution;
  }
};

// Header line "OCCGRID w h res ox oy", then h rows of w probabilities,
// bottom row first. Numbers are printed shortest-round-trip so a
// save/load/save cycle is byte identical.
// throws: ParseError (malformed content), DimensionMismatch (row/count
// disagreement), IoError (unreadable/unwritable path).
OccupancyGrid load_map(const std::string& path);
void save_map(const OccupancyGrid& grid, const std::string& path);

// Point source with exponential falloff in Mahalanobis distance:
//   strength * exp(-sqrt(d' inv(cov) d)).
struct SignalSource {
  double x = 0.0;
  double y = 0.0;
  double strength = 1.0;
  Eigen::Matrix2d covariance = Eigen::Matrix2d::Identity();
};

// Sum of all source contributions at (x, y).
double signal_strength(const std::vector<SignalSource>& sources, double x,
                       double y);

struct SensorModel {
  int num_beams = 36;
  double fov = 6.283185307179586476925286766559;  // radians, centered on heading
  double max_range = 5.0;
  // > 0 switches beam traversal from exact cell stepping to fixed-interval
  // sampling along the ray (cells deduplicated consecutively).
  double sample_stride = 0.0;
};

struct WorldModel {
  OccupancyGrid grid;
  std::vector<SignalSource> sources;
  SensorModel sensor;
  double occupied_threshold = 0.65;
  double robot_radius = 0.4;
};

// Cells visited by each beam from pose (x, y, theta), theta measured from +y
// so a beam at offset a travels along (sin(theta+a), cos(theta+a)). The pose
// cell itself is excluded; a beam stops after the first cell at or above
// occupied_threshold (that cell is included) or at max_range or the grid
// edge. Cell ids are row-major indices.
// throws: PoseOutOfMap when (x, y) is outside the grid.
std::vector<std::vector<int>> cast_beams(const OccupancyGrid& grid, double x,
                                         double y, double theta,
                                         const SensorModel& sensor,
                                         double occupied_threshold);

// Set of already-counted cells plus the information total accumulated along
// a tree branch. Immutable once built: tree nodes share ancestors' states by
// pointer, extension copies.
struct InfoState {
  std::vector<std::uint64_t> counted;  // bitset over cell ids
  double total = 0.0;

  bool contains(int cell) const {
    return (counted[static_cast<std::size_t>(cell) >> 6] >>
            (static_cast<std::size_t>(cell) & 63)) &
           1u;
  }
};

using InfoStateRef = std::shared_ptr<const InfoState>;

// Empty information state sized for the grid.
InfoStateRef make_info_root(const OccupancyGrid& grid);

// Entropy of p in bits; 0 at p in {0, 1}.
double binary_entropy(double p);

// Information total after observing from the pose: prior.total plus, for
// every beam cell not already counted, binary_entropy(p_cell) weighted by
// (1 + signal at the cell center). Submodular: recounting a cell adds 0.
// Does not allocate a new state.
double information(const InfoState& prior, double x, double y, double theta,
                   const WorldModel& world);

// Copy of `prior` with the pose's beam cells marked and total updated;
// equals information(...) on the value.
InfoStateRef extend_info(const InfoStateRef& prior, double x, double y,
                         double theta, const WorldModel& world);

// True when no grid cell with occupancy >= occupied_threshold has its center
// within robot_radius of the segment a->b (distance compare is inclusive).
// Only grid cells are tested; keeping the capsule inside the map extent is
// the caller's job.
bool no_collision(const OccupancyGrid& grid, double ax, double ay, double bx,
                  double by, double robot_radius, double occupied_threshold);

}  // namespace walkplan
