#include "walkplan/world.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

namespace walkplan {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

void append_double(std::string& out, double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

// Parses one whitespace-separated double; advances pos past it.
bool next_double(const std::string& line, std::size_t& pos, double& out) {
  while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
  if (pos >= line.size()) return false;
  const char* begin = line.data() + pos;
  const char* end = line.data() + line.size();
  const auto res = std::from_chars(begin, end, out);
  if (res.ec != std::errc()) return false;
  pos = static_cast<std::size_t>(res.ptr - line.data());
  return true;
}

}  // namespace

bool OccupancyGrid::world_to_cell(double x, double y, int& ix, int& iy) const {
  const double fx = std::floor((x - origin_x) / resolution);
  const double fy = std::floor((y - origin_y) / resolution);
  ix = static_cast<int>(fx);
  iy = static_cast<int>(fy);
  return fx >= 0.0 && fx < static_cast<double>(width) && fy >= 0.0 &&
         fy < static_cast<double>(height);
}

OccupancyGrid load_map(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("load_map: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("load_map: empty file", 1);
  if (!line.empty() && line.back() == '\r') line.pop_back();

  OccupancyGrid grid;
  {
    std::size_t pos = 0;
    const std::string magic = "OCCGRID";
    if (line.compare(0, magic.size(), magic) != 0) {
      throw ParseError("load_map: missing OCCGRID header", 1);
    }
    pos = magic.size();
    double w = 0.0, h = 0.0;
    if (!next_double(line, pos, w) || !next_double(line, pos, h) ||
        !next_double(line, pos, grid.resolution) ||
        !next_double(line, pos, grid.origin_x) ||
        !next_double(line, pos, grid.origin_y)) {
      throw ParseError("load_map: malformed header", 1);
    }
    if (w < 1.0 || h < 1.0 || w != std::floor(w) || h != std::floor(h)) {
      throw ParseError("load_map: width/height must be positive integers", 1);
    }
    if (!(grid.resolution > 0.0)) {
      throw ParseError("load_map: resolution must be > 0", 1);
    }
    grid.width = static_cast<int>(w);
    grid.height = static_cast<int>(h);
  }

  grid.cells.assign(static_cast<std::size_t>(grid.width) * grid.height, 0.0);
  for (int iy = 0; iy < grid.height; ++iy) {
    const int line_number = iy + 2;
    if (!std::getline(in, line)) {
      throw DimensionMismatch("load_map: expected " +
                              std::to_string(grid.height) + " rows, got " +
                              std::to_string(iy));
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::size_t pos = 0;
    for (int ix = 0; ix < grid.width; ++ix) {
      double v = 0.0;
      if (!next_double(line, pos, v)) {
        throw DimensionMismatch("load_map: row " + std::to_string(iy) +
                                " has fewer than " +
                                std::to_string(grid.width) + " values");
      }
      if (!(v >= 0.0 && v <= 1.0)) {
        throw ParseError("load_map: probability outside [0,1]", line_number);
      }
      grid.at(ix, iy) = v;
    }
    double extra = 0.0;
    if (next_double(line, pos, extra)) {
      throw DimensionMismatch("load_map: row " + std::to_string(iy) +
                              " has more than " + std::to_string(grid.width) +
                              " values");
    }
  }
  return grid;
}

void save_map(const OccupancyGrid& grid, const std::string& path) {
  std::string out;
  out.reserve(static_cast<std::size_t>(grid.width) * grid.height * 5 + 64);
  out += "OCCGRID ";
  append_double(out, static_cast<double>(grid.width));
  out += ' ';
  append_double(out, static_cast<double>(grid.height));
  out += ' ';
  append_double(out, grid.resolution);
  out += ' ';
  append_double(out, grid.origin_x);
  out += ' ';
  append_double(out, grid.origin_y);
  out += '\n';
  for (int iy = 0; iy < grid.height; ++iy) {
    for (int ix = 0; ix < grid.width; ++ix) {
      if (ix > 0) out += ' ';
      append_double(out, grid.at(ix, iy));
    }
    out += '\n';
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("save_map: cannot open " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("save_map: write failed for " + path);
}

double signal_strength(const std::vector<SignalSource>& sources, double x,
                       double y) {
  double total = 0.0;
  for (const SignalSource& s : sources) {
    const Eigen::Vector2d d(x - s.x, y - s.y);
    const double q = d.dot(s.covariance.inverse() * d);
    total += s.strength * std::exp(-std::sqrt(std::max(0.0, q)));
  }
  return total;
}

std::vector<std::vector<int>> cast_beams(const OccupancyGrid& grid, double x,
                                         double y, double theta,
                                         const SensorModel& sensor,
                                         double occupied_threshold) {
  int pose_ix = 0, pose_iy = 0;
  if (!grid.world_to_cell(x, y, pose_ix, pose_iy)) {
    throw PoseOutOfMap("cast_beams: pose outside grid");
  }

  std::vector<std::vector<int>> traces;
  traces.reserve(static_cast<std::size_t>(sensor.num_beams));
  const bool full_circle = sensor.fov >= kTwoPi - 1e-9;
  for (int b = 0; b < sensor.num_beams; ++b) {
    double offset = 0.0;
    if (full_circle) {
      offset = -sensor.fov / 2.0 + sensor.fov * b / sensor.num_beams;
    } else if (sensor.num_beams > 1) {
      offset = -sensor.fov / 2.0 + sensor.fov * b / (sensor.num_beams - 1);
    }
    const double a = theta + offset;
    const double dir_x = std::sin(a);
    const double dir_y = std::cos(a);

    std::vector<int> trace;
    if (sensor.sample_stride > 0.0) {
      int prev = grid.index(pose_ix, pose_iy);
      for (double t = sensor.sample_stride; t <= sensor.max_range;
           t += sensor.sample_stride) {
        int ix = 0, iy = 0;
        if (!grid.world_to_cell(x + t * dir_x, y + t * dir_y, ix, iy)) break;
        const int id = grid.index(ix, iy);
        if (id == prev) continue;
        prev = id;
        trace.push_back(id);
        if (grid.cells[id] >= occupied_threshold) break;
      }
      traces.push_back(std::move(trace));
      continue;
    }

    // Exact cell stepping: advance to whichever cell boundary the ray
    // crosses first, tracking the entry distance per axis.
    const double inf = std::numeric_limits<double>::infinity();
    int ix = pose_ix, iy = pose_iy;
    const int step_x = dir_x > 0.0 ? 1 : (dir_x < 0.0 ? -1 : 0);
    const int step_y = dir_y > 0.0 ? 1 : (dir_y < 0.0 ? -1 : 0);
    const double t_delta_x =
        step_x != 0 ? grid.resolution / std::abs(dir_x) : inf;
    const double t_delta_y =
        step_y != 0 ? grid.resolution / std::abs(dir_y) : inf;
    double t_max_x = inf;
    double t_max_y = inf;
    if (step_x > 0) {
      t_max_x = (grid.origin_x + (ix + 1) * grid.resolution - x) / dir_x;
    } else if (step_x < 0) {
      t_max_x = (grid.origin_x + ix * grid.resolution - x) / dir_x;
    }
    if (step_y > 0) {
      t_max_y = (grid.origin_y + (iy + 1) * grid.resolution - y) / dir_y;
    } else if (step_y < 0) {
      t_max_y = (grid.origin_y + iy * grid.resolution - y) / dir_y;
    }
    while (true) {
      const double t_enter = std::min(t_max_x, t_max_y);
      if (t_enter > sensor.max_range) break;
      if (t_max_x <= t_max_y) {
        ix += step_x;
        t_max_x += t_delta_x;
      } else {
        iy += step_y;
        t_max_y += t_delta_y;
      }
      if (!grid.inside(ix, iy)) break;
      const int id = grid.index(ix, iy);
      trace.push_back(id);
      if (grid.cells[id] >= occupied_threshold) break;
    }
    traces.push_back(std::move(trace));
  }
  return traces;
}

InfoStateRef make_info_root(const OccupancyGrid& grid) {
  auto state = std::make_shared<InfoState>();
  const std::size_t cells = static_cast<std::size_t>(grid.width) * grid.height;
  state->counted.assign((cells + 63) / 64, 0);
  state->total = 0.0;
  return state;
}

double binary_entropy(double p) {
  if (p <= 0.0 || p >= 1.0) return 0.0;
  return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

namespace {

// Gain of observing from the pose on top of `prior`; optionally records the
// newly counted cell ids.
double observe_gain(const InfoState& prior, double x, double y, double theta,
                    const WorldModel& world, std::vector<int>* new_cells) {
  const auto traces =
      cast_beams(world.grid, x, y, theta, world.sensor, world.occupied_threshold);
  std::vector<int> seen;
  for (const auto& trace : traces) {
    seen.insert(seen.end(), trace.begin(), trace.end());
  }
  std::sort(seen.begin(), seen.end());
  seen.erase(std::unique(seen.begin(), seen.end()), seen.end());

  double gain = 0.0;
  for (int cell : seen) {
    if (prior.contains(cell)) continue;
    const double entropy = binary_entropy(world.grid.cells[cell]);
    if (entropy > 0.0) {
      const int ix = cell % world.grid.width;
      const int iy = cell / world.grid.width;
      gain += entropy * (1.0 + signal_strength(world.sources,
                                               world.grid.cell_center_x(ix),
                                               world.grid.cell_center_y(iy)));
    }
    if (new_cells != nullptr) new_cells->push_back(cell);
  }
  return gain;
}

}  // namespace

double information(const InfoState& prior, double x, double y, double theta,
                   const WorldModel& world) {
  return prior.total + observe_gain(prior, x, y, theta, world, nullptr);
}

InfoStateRef extend_info(const InfoStateRef& prior, double x, double y,
                         double theta, const WorldModel& world) {
  std::vector<int> new_cells;
  const double gain = observe_gain(*prior, x, y, theta, world, &new_cells);
  auto next = std::make_shared<InfoState>(*prior);
  for (int cell : new_cells) {
    next->counted[static_cast<std::size_t>(cell) >> 6] |=
        std::uint64_t{1} << (static_cast<std::size_t>(cell) & 63);
  }
  next->total = prior->total + gain;
  return next;
}

bool no_collision(const OccupancyGrid& grid, double ax, double ay, double bx,
                  double by, double robot_radius, double occupied_threshold) {
  const double min_x = std::min(ax, bx) - robot_radius;
  const double max_x = std::max(ax, bx) + robot_radius;
  const double min_y = std::min(ay, by) - robot_radius;
  const double max_y = std::max(ay, by) + robot_radius;
  int ix0 = static_cast<int>(std::floor((min_x - grid.origin_x) / grid.resolution)) - 1;
  int ix1 = static_cast<int>(std::floor((max_x - grid.origin_x) / grid.resolution)) + 1;
  int iy0 = static_cast<int>(std::floor((min_y - grid.origin_y) / grid.resolution)) - 1;
  int iy1 = static_cast<int>(std::floor((max_y - grid.origin_y) / grid.resolution)) + 1;
  ix0 = std::max(ix0, 0);
  iy0 = std::max(iy0, 0);
  ix1 = std::min(ix1, grid.width - 1);
  iy1 = std::min(iy1, grid.height - 1);

  const double seg_x = bx - ax;
  const double seg_y = by - ay;
  const double seg_len_sq = seg_x * seg_x + seg_y * seg_y;
  const double r_sq = robot_radius * robot_radius;
  for (int iy = iy0; iy <= iy1; ++iy) {
    for (int ix = ix0; ix <= ix1; ++ix) {
      if (grid.at(ix, iy) < occupied_threshold) continue;
      const double cx = grid.cell_center_x(ix);
      const double cy = grid.cell_center_y(iy);
      double t = 0.0;
      if (seg_len_sq > 0.0) {
        t = ((cx - ax) * seg_x + (cy - ay) * seg_y) / seg_len_sq;
        t = std::clamp(t, 0.0, 1.0);
      }
      const double dx = cx - (ax + t * seg_x);
      const double dy = cy - (ay + t * seg_y);
      if (dx * dx + dy * dy <= r_sq) return false;
    }
  }
  return true;
}

}  // namespace walkplan
