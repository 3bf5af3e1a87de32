#include "walkplan/scenario.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string_view>
#include <variant>

#include "walkplan/rng.hpp"

namespace walkplan {

namespace {

namespace fs = std::filesystem;

void append_double(std::string& out, double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) {
    s.remove_suffix(1);
  }
  return s;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& what,
                            int line) {
  std::string msg = what;
  if (line > 0) msg += " (line " + std::to_string(line) + ")";
  throw ConfigError(key, msg);
}

template <typename T>
T parse_number(const std::string& key, std::string_view value, int line) {
  T out{};
  const char* begin = value.data();
  const char* end = value.data() + value.size();
  const auto res = std::from_chars(begin, end, out);
  if (res.ec != std::errc() || res.ptr != end) {
    bad_value(key, "cannot parse '" + std::string(value) + "' as a number",
              line);
  }
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(out)) bad_value(key, "value must be finite", line);
  }
  return out;
}

using FieldRef =
    std::variant<double Scenario::*, int Scenario::*, long Scenario::*,
                 std::uint64_t Scenario::*, std::string Scenario::*>;

struct KeyEntry {
  const char* key;
  FieldRef field;
};

// Declaration order is the echo order.
const std::array<KeyEntry, 61>& key_table() {
  static const std::array<KeyEntry, 61> table = {{
      {"map.source", &Scenario::map_source},
      {"map.cells_x", &Scenario::map_cells_x},
      {"map.cells_y", &Scenario::map_cells_y},
      {"map.resolution", &Scenario::map_resolution},
      {"map.origin_x", &Scenario::map_origin_x},
      {"map.origin_y", &Scenario::map_origin_y},
      {"map.base_occupancy", &Scenario::map_base_occupancy},
      {"map.seed", &Scenario::map_seed},
      {"world.occupied_threshold", &Scenario::world_occupied_threshold},
      {"world.robot_radius", &Scenario::world_robot_radius},
      {"sensor.num_beams", &Scenario::sensor_num_beams},
      {"sensor.fov", &Scenario::sensor_fov},
      {"sensor.max_range", &Scenario::sensor_max_range},
      {"sensor.sample_stride", &Scenario::sensor_sample_stride},
      {"lip.com_height", &Scenario::lip_com_height},
      {"lip.gravity", &Scenario::lip_gravity},
      {"lip.step_duration", &Scenario::lip_step_duration},
      {"lip.mass", &Scenario::lip_mass},
      {"bounds.lb_xb", &Scenario::bounds_lb_xb},
      {"bounds.ub_xb", &Scenario::bounds_ub_xb},
      {"bounds.lb_yb", &Scenario::bounds_lb_yb},
      {"bounds.ub_yb", &Scenario::bounds_ub_yb},
      {"limits.l_min", &Scenario::limits_l_min},
      {"limits.l_max", &Scenario::limits_l_max},
      {"mpc.n_min", &Scenario::mpc_n_min},
      {"mpc.n_max", &Scenario::mpc_n_max},
      {"mpc.w1", &Scenario::mpc_w1},
      {"mpc.w2", &Scenario::mpc_w2},
      {"mpc.feasibility_tol", &Scenario::mpc_feasibility_tol},
      {"mpc.max_iterations", &Scenario::mpc_max_iterations},
      {"mpc.max_fun_evals", &Scenario::mpc_max_fun_evals},
      {"mpc.l_nominal", &Scenario::mpc_l_nominal},
      {"mpc.fd_step", &Scenario::mpc_fd_step},
      {"barriers.gamma", &Scenario::barriers_gamma},
      {"barriers.activation_radius", &Scenario::barriers_activation_radius},
      {"obstacles.mode", &Scenario::obstacles_mode},
      {"obstacles.extract_buffer", &Scenario::obstacles_extract_buffer},
      {"obstacles.extract_norm_p", &Scenario::obstacles_extract_norm_p},
      {"obstacles.rasterize", &Scenario::obstacles_rasterize},
      {"planner.kind", &Scenario::planner_kind},
      {"planner.budget", &Scenario::planner_budget},
      {"planner.near_radius", &Scenario::planner_near_radius},
      {"planner.delta_ric", &Scenario::planner_delta_ric},
      {"planner.n_ric", &Scenario::planner_n_ric},
      {"planner.max_samples", &Scenario::planner_max_samples},
      {"planner.goal_radius", &Scenario::planner_goal_radius},
      {"planner.rng_seed", &Scenario::planner_rng_seed},
      {"planner.prune_epsilon", &Scenario::planner_prune_epsilon},
      {"planner.cost_mode", &Scenario::planner_cost_mode},
      {"start.x", &Scenario::start_x},
      {"start.y", &Scenario::start_y},
      {"start.xdot", &Scenario::start_xdot},
      {"start.ydot", &Scenario::start_ydot},
      {"start.stance", &Scenario::start_stance},
      {"goal.x", &Scenario::goal_x},
      {"goal.y", &Scenario::goal_y},
      {"tracking.mode", &Scenario::tracking_mode},
      {"tracking.position_noise", &Scenario::tracking_position_noise},
      {"tracking.momentum_noise", &Scenario::tracking_momentum_noise},
      {"tracking.seed", &Scenario::tracking_seed},
      {"output.dir", &Scenario::output_dir},
  }};
  return table;
}

struct SignalField {
  const char* name;
  double SignalEntry::*ptr;
};
constexpr SignalField kSignalFields[] = {
    {"x", &SignalEntry::x},           {"y", &SignalEntry::y},
    {"strength", &SignalEntry::strength}, {"cov_xx", &SignalEntry::cov_xx},
    {"cov_xy", &SignalEntry::cov_xy}, {"cov_yy", &SignalEntry::cov_yy},
};

struct ObstacleField {
  const char* name;
  double Obstacle::*ptr;
};
constexpr ObstacleField kObstacleFields[] = {
    {"center_x", &Obstacle::center_x}, {"center_y", &Obstacle::center_y},
    {"radius_x", &Obstacle::radius_x}, {"radius_y", &Obstacle::radius_y},
    {"buffer_x", &Obstacle::buffer_x}, {"buffer_y", &Obstacle::buffer_y},
    {"norm_p", &Obstacle::norm_p},     {"rotation", &Obstacle::rotation},
};

// "signal.2.strength" style key: parses the index and the field suffix.
// Returns false when `key` does not start with the prefix at all.
template <typename Entry, typename Field, std::size_t N>
bool assign_indexed(std::vector<Entry>& entries, const Field (&fields)[N],
                    const std::string& key, std::string_view prefix,
                    std::string_view value, int line) {
  if (key.size() <= prefix.size() ||
      key.compare(0, prefix.size(), prefix) != 0) {
    return false;
  }
  std::string_view rest(key);
  rest.remove_prefix(prefix.size());
  std::size_t index = 0;
  const char* begin = rest.data();
  const char* end = rest.data() + rest.size();
  const auto res = std::from_chars(begin, end, index);
  if (res.ec != std::errc() || res.ptr == end || *res.ptr != '.') {
    bad_value(key, "expected <index>.<field> after the prefix", line);
  }
  const std::string_view name(res.ptr + 1, end - res.ptr - 1);
  const Field* field = nullptr;
  for (const Field& f : fields) {
    if (name == f.name) field = &f;
  }
  if (field == nullptr) {
    bad_value(key, "unknown field '" + std::string(name) + "'", line);
  }
  if (index > entries.size()) {
    bad_value(key,
              "index skips ahead (" + std::to_string(entries.size()) +
                  " entries defined)",
              line);
  }
  if (index == entries.size()) entries.push_back(Entry{});
  entries[index].*(field->ptr) = parse_number<double>(key, value, line);
  return true;
}

void set_key(Scenario& sc, const std::string& key, std::string_view value,
             int line) {
  if (value.empty()) bad_value(key, "empty value", line);
  if (assign_indexed(sc.signals, kSignalFields, key, "signal.", value, line)) {
    return;
  }
  if (assign_indexed(sc.obstacles, kObstacleFields, key, "obstacle.", value,
                     line)) {
    return;
  }
  for (const KeyEntry& e : key_table()) {
    if (key != e.key) continue;
    std::visit(
        [&](auto ptr) {
          using T = std::remove_cvref_t<decltype(sc.*ptr)>;
          if constexpr (std::is_same_v<T, std::string>) {
            sc.*ptr = std::string(value);
          } else {
            sc.*ptr = parse_number<T>(key, value, line);
          }
        },
        e.field);
    return;
  }
  bad_value(key, "unknown key", line);
}

bool is_one_of(const std::string& v,
               std::initializer_list<const char*> options) {
  for (const char* o : options) {
    if (v == o) return true;
  }
  return false;
}

OccupancyGrid base_grid(const Scenario& sc) {
  OccupancyGrid g;
  g.width = sc.map_cells_x;
  g.height = sc.map_cells_y;
  g.resolution = sc.map_resolution;
  g.origin_x = sc.map_origin_x;
  g.origin_y = sc.map_origin_y;
  g.cells.assign(static_cast<std::size_t>(g.width) * g.height,
                 sc.map_base_occupancy);
  return g;
}

void fill_rect(OccupancyGrid& g, int x0, int y0, int w, int h, double value,
               bool only_free, double threshold) {
  for (int iy = y0; iy < y0 + h; ++iy) {
    for (int ix = x0; ix < x0 + w; ++ix) {
      if (!g.inside(ix, iy)) continue;
      if (only_free && g.at(ix, iy) >= threshold) continue;
      g.at(ix, iy) = value;
    }
  }
}

// Seeded blocks on a 3x3 slot grid (separated so clusters stay distinct)
// plus unknown patches biased to the upper half, standing in for a cave:
// block gaps are the corridors, patches are the unexplored rooms. The draw
// count per slot and patch is fixed, so one seed gives one map.
OccupancyGrid cave_like_grid(const Scenario& sc) {
  OccupancyGrid g = base_grid(sc);
  Rng rng(sc.map_seed);
  const int w = g.width;
  const int h = g.height;
  const int sw = std::max(3, (w - 8) / 3);
  const int sh = std::max(3, (h - 8) / 3);
  for (int sy = 0; sy < 3; ++sy) {
    for (int sx = 0; sx < 3; ++sx) {
      const bool present = rng.uniform() < 0.8;
      const int bw = 2 + static_cast<int>(rng.below(
                             static_cast<std::uint64_t>(std::max(1, sw - 3))));
      const int bh = 2 + static_cast<int>(rng.below(
                             static_cast<std::uint64_t>(std::max(1, sh - 3))));
      const int ox = static_cast<int>(rng.below(
          static_cast<std::uint64_t>(std::max(1, sw - bw + 1))));
      const int oy = static_cast<int>(rng.below(
          static_cast<std::uint64_t>(std::max(1, sh - bh + 1))));
      const double v = 0.7 + 0.25 * rng.uniform();
      if (present) {
        fill_rect(g, 4 + sx * sw + ox, 4 + sy * sh + oy, bw, bh, v, false,
                  0.0);
      }
    }
  }
  for (int p = 0; p < 4; ++p) {
    const int pw = 4 + static_cast<int>(rng.below(
                           static_cast<std::uint64_t>(std::max(1, w / 3))));
    const int ph = 3 + static_cast<int>(rng.below(
                           static_cast<std::uint64_t>(std::max(1, h / 4))));
    const int px = 1 + static_cast<int>(rng.below(
                           static_cast<std::uint64_t>(std::max(1, w - pw - 1))));
    const int py = h / 2 + static_cast<int>(rng.below(static_cast<std::uint64_t>(
                               std::max(1, h / 2 - ph))));
    fill_rect(g, px, py, pw, ph, 0.5, true, sc.world_occupied_threshold);
  }
  return g;
}

// throws: IoError / ParseError / DimensionMismatch for file sources.
OccupancyGrid build_grid(const Scenario& sc) {
  if (sc.map_source == "builtin:empty") return base_grid(sc);
  if (sc.map_source == "builtin:cave_like") return cave_like_grid(sc);
  return load_map(sc.map_source);
}

// Cells whose center lies inside the zero-buffer region become occupied:
// the grid models the physical obstacle, the buffer stays a barrier margin.
void rasterize_obstacles(OccupancyGrid& g,
                         const std::vector<Obstacle>& obstacles) {
  for (const Obstacle& o : obstacles) {
    Obstacle core = o;
    core.buffer_x = 0.0;
    core.buffer_y = 0.0;
    const double reach =
        std::max(o.radius_x + o.buffer_x, o.radius_y + o.buffer_y);
    int ix0 = 0, iy0 = 0, ix1 = 0, iy1 = 0;
    g.world_to_cell(o.center_x - reach, o.center_y - reach, ix0, iy0);
    g.world_to_cell(o.center_x + reach, o.center_y + reach, ix1, iy1);
    for (int iy = std::max(0, iy0); iy <= std::min(g.height - 1, iy1); ++iy) {
      for (int ix = std::max(0, ix0); ix <= std::min(g.width - 1, ix1);
           ++ix) {
        if (barrier_value(core, g.cell_center_x(ix), g.cell_center_y(iy)) <
            0.0) {
          g.at(ix, iy) = 0.95;
        }
      }
    }
  }
}

const char* stance_name(StanceSide s) {
  return s == StanceSide::Right ? "right" : "left";
}

const char* termination_name(PlanTermination t) {
  switch (t) {
    case PlanTermination::ReachedGoal:
      return "reached_goal";
    case PlanTermination::RicConverged:
      return "ric_converged";
    case PlanTermination::SampleBudgetExhausted:
      return "sample_budget_exhausted";
  }
  return "unknown";
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.close();
  if (!out) throw IoError("write failed: " + path);
}

std::string tree_table(const PlanTree& tree) {
  std::string out =
      "id\tparent\tx\txdot\ty\tydot\tstance\tcost\tinfo\tclosed\tpx\tpy\n";
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    const TreeNode& n = tree.nodes[i];
    out += std::to_string(i);
    out += '\t';
    out += std::to_string(n.parent);
    out += '\t';
    append_double(out, n.state.x);
    out += '\t';
    append_double(out, n.state.xdot);
    out += '\t';
    append_double(out, n.state.y);
    out += '\t';
    append_double(out, n.state.ydot);
    out += '\t';
    out += stance_name(n.stance);
    out += '\t';
    append_double(out, n.cost);
    out += '\t';
    append_double(out, n.info);
    out += '\t';
    out += n.closed ? '1' : '0';
    out += '\t';
    append_double(out, n.first_input.px);
    out += '\t';
    append_double(out, n.first_input.py);
    out += '\n';
  }
  return out;
}

std::string path_table(const std::vector<PathEntry>& path) {
  std::string out =
      "step\tx\txdot\ty\tydot\tpx\tpy\tstance\tsin_theta\tcos_theta\n";
  for (std::size_t i = 0; i < path.size(); ++i) {
    const PathEntry& e = path[i];
    out += std::to_string(i);
    out += '\t';
    append_double(out, e.state.x);
    out += '\t';
    append_double(out, e.state.xdot);
    out += '\t';
    append_double(out, e.state.y);
    out += '\t';
    append_double(out, e.state.ydot);
    out += '\t';
    append_double(out, e.input.px);
    out += '\t';
    append_double(out, e.input.py);
    out += '\t';
    out += stance_name(e.stance);
    out += '\t';
    append_double(out, e.heading.sin_theta);
    out += '\t';
    append_double(out, e.heading.cos_theta);
    out += '\n';
  }
  return out;
}

std::string tracking_table(const TrackingReport& r) {
  std::string out = "step\tx\tly\ty\tlx\tcom_error\tfoot_error\n";
  for (std::size_t i = 0; i < r.simulated.size(); ++i) {
    out += std::to_string(i);
    out += '\t';
    append_double(out, r.simulated[i].x);
    out += '\t';
    append_double(out, r.simulated[i].ly);
    out += '\t';
    append_double(out, r.simulated[i].y);
    out += '\t';
    append_double(out, r.simulated[i].lx);
    out += '\t';
    append_double(out, r.com_error[i]);
    out += '\t';
    append_double(out, i == 0 ? 0.0 : r.foot_error[i - 1]);
    out += '\n';
  }
  return out;
}

}  // namespace

Scenario parse_scenario_text(const std::string& text) {
  Scenario sc;
  int line_number = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line(text.data() + pos,
                          (nl == std::string::npos ? text.size() : nl) - pos);
    pos = (nl == std::string::npos) ? text.size() + 1 : nl + 1;
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const std::size_t hash = line.find('#');
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line_number),
                        "expected 'key = value', got '" + std::string(line) +
                            "'");
    }
    const std::string key{trim(line.substr(0, eq))};
    const std::string_view value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError("line " + std::to_string(line_number), "empty key");
    }
    set_key(sc, key, value, line_number);
  }
  return sc;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open scenario: " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return parse_scenario_text(text);
}

void apply_override(Scenario& scenario, const std::string& key,
                    const std::string& value) {
  set_key(scenario, key, trim(value), 0);
}

std::string scenario_echo(const Scenario& scenario) {
  std::string out;
  for (const KeyEntry& e : key_table()) {
    out += e.key;
    out += " = ";
    std::visit(
        [&](auto ptr) {
          using T = std::remove_cvref_t<decltype(scenario.*ptr)>;
          if constexpr (std::is_same_v<T, std::string>) {
            out += scenario.*ptr;
          } else if constexpr (std::is_same_v<T, double>) {
            append_double(out, scenario.*ptr);
          } else {
            out += std::to_string(scenario.*ptr);
          }
        },
        e.field);
    out += '\n';
  }
  for (std::size_t i = 0; i < scenario.signals.size(); ++i) {
    for (const SignalField& f : kSignalFields) {
      out += "signal." + std::to_string(i) + "." + f.name + " = ";
      append_double(out, scenario.signals[i].*(f.ptr));
      out += '\n';
    }
  }
  for (std::size_t i = 0; i < scenario.obstacles.size(); ++i) {
    for (const ObstacleField& f : kObstacleFields) {
      out += "obstacle." + std::to_string(i) + "." + f.name + " = ";
      append_double(out, scenario.obstacles[i].*(f.ptr));
      out += '\n';
    }
  }
  return out;
}

std::vector<Finding> validate_scenario(const Scenario& sc) {
  std::vector<Finding> findings;
  const auto flag = [&](const char* key, std::string msg) {
    findings.push_back(Finding{key, std::move(msg)});
  };

  const bool builtin = sc.map_source.rfind("builtin:", 0) == 0;
  if (builtin && sc.map_source != "builtin:empty" &&
      sc.map_source != "builtin:cave_like") {
    flag("map.source", "unknown generator '" + sc.map_source + "'");
  }
  if (!builtin && !fs::exists(sc.map_source)) {
    flag("map.source", "map file not found: " + sc.map_source);
  }
  if (sc.map_cells_x < 1) flag("map.cells_x", "need at least one cell");
  if (sc.map_cells_y < 1) flag("map.cells_y", "need at least one cell");
  if (!(sc.map_resolution > 0.0)) flag("map.resolution", "must be positive");
  if (sc.map_base_occupancy < 0.0 || sc.map_base_occupancy > 1.0) {
    flag("map.base_occupancy", "must lie in [0, 1]");
  }
  if (!(sc.world_occupied_threshold > 0.0) ||
      sc.world_occupied_threshold > 1.0) {
    flag("world.occupied_threshold", "must lie in (0, 1]");
  }
  if (sc.world_robot_radius < 0.0) {
    flag("world.robot_radius", "must be non-negative");
  }
  if (sc.sensor_num_beams < 1) flag("sensor.num_beams", "need at least one");
  if (!(sc.sensor_fov > 0.0) || sc.sensor_fov > 6.2831853071795872) {
    flag("sensor.fov", "must lie in (0, 2*pi]");
  }
  if (!(sc.sensor_max_range > 0.0)) flag("sensor.max_range", "must be positive");
  if (sc.sensor_sample_stride < 0.0) {
    flag("sensor.sample_stride", "must be non-negative");
  }
  for (std::size_t i = 0; i < sc.signals.size(); ++i) {
    const SignalEntry& s = sc.signals[i];
    const std::string key = "signal." + std::to_string(i);
    if (s.strength < 0.0) {
      findings.push_back(Finding{key + ".strength", "must be non-negative"});
    }
    const double det = s.cov_xx * s.cov_yy - s.cov_xy * s.cov_xy;
    if (!(s.cov_xx > 0.0) || !(s.cov_yy > 0.0) || !(det > 0.0)) {
      findings.push_back(
          Finding{key + ".cov_xx", "covariance must be positive definite"});
    }
  }
  if (!(sc.lip_com_height > 0.0)) flag("lip.com_height", "must be positive");
  if (!(sc.lip_gravity > 0.0)) flag("lip.gravity", "must be positive");
  if (!(sc.lip_step_duration > 0.0)) {
    flag("lip.step_duration", "must be positive");
  }
  if (!(sc.lip_mass > 0.0)) flag("lip.mass", "must be positive");
  if (!(sc.bounds_lb_xb < sc.bounds_ub_xb)) {
    flag("bounds.lb_xb", "sagittal bounds must satisfy lb < ub");
  }
  if (!(sc.bounds_lb_yb < sc.bounds_ub_yb)) {
    flag("bounds.lb_yb", "lateral bounds must satisfy lb < ub");
  }
  if (!(sc.limits_l_min > 0.0) || !(sc.limits_l_min < sc.limits_l_max)) {
    flag("limits.l_min", "need 0 < l_min < l_max");
  }
  if (sc.mpc_n_min < 1) flag("mpc.n_min", "must be at least 1");
  if (sc.mpc_n_max < sc.mpc_n_min) flag("mpc.n_max", "must be >= mpc.n_min");
  if (sc.mpc_w1 < 0.0) flag("mpc.w1", "must be non-negative");
  if (sc.mpc_w2 < 0.0) flag("mpc.w2", "must be non-negative");
  if (!(sc.mpc_feasibility_tol > 0.0)) {
    flag("mpc.feasibility_tol", "must be positive");
  }
  if (sc.mpc_max_iterations < 1) {
    flag("mpc.max_iterations", "must be at least 1");
  }
  if (sc.mpc_max_fun_evals < 1) {
    flag("mpc.max_fun_evals", "must be at least 1");
  }
  if (!(sc.mpc_l_nominal > 0.0)) flag("mpc.l_nominal", "must be positive");
  if (!(sc.mpc_fd_step > 0.0)) flag("mpc.fd_step", "must be positive");
  if (!(sc.barriers_gamma > 0.0) || sc.barriers_gamma > 1.0) {
    flag("barriers.gamma", "must lie in (0, 1]");
  }
  if (!(sc.barriers_activation_radius > 0.0)) {
    flag("barriers.activation_radius", "must be positive");
  }
  if (!is_one_of(sc.obstacles_mode, {"explicit", "extract"})) {
    flag("obstacles.mode", "must be 'explicit' or 'extract'");
  }
  if (sc.obstacles_extract_buffer < 0.0) {
    flag("obstacles.extract_buffer", "must be non-negative");
  }
  if (sc.obstacles_extract_norm_p < 1.0) {
    flag("obstacles.extract_norm_p", "must be at least 1");
  }
  if (sc.obstacles_rasterize != 0 && sc.obstacles_rasterize != 1) {
    flag("obstacles.rasterize", "must be 0 or 1");
  }
  for (std::size_t i = 0; i < sc.obstacles.size(); ++i) {
    const Obstacle& o = sc.obstacles[i];
    const std::string key = "obstacle." + std::to_string(i);
    if (!(o.radius_x > 0.0) || !(o.radius_y > 0.0)) {
      findings.push_back(Finding{key + ".radius_x", "radii must be positive"});
    }
    if (o.buffer_x < 0.0 || o.buffer_y < 0.0) {
      findings.push_back(
          Finding{key + ".buffer_x", "buffers must be non-negative"});
    }
    if (o.norm_p < 1.0) {
      findings.push_back(Finding{key + ".norm_p", "must be at least 1"});
    }
  }
  if (!is_one_of(sc.planner_kind, {"rrt", "safe_iig"})) {
    flag("planner.kind", "must be 'rrt' or 'safe_iig'");
  }
  if (!(sc.planner_budget > 0.0)) flag("planner.budget", "must be positive");
  if (!(sc.planner_near_radius > 0.0)) {
    flag("planner.near_radius", "must be positive");
  }
  if (!(sc.planner_delta_ric > 0.0)) {
    flag("planner.delta_ric", "must be positive");
  }
  if (sc.planner_n_ric < 1) flag("planner.n_ric", "must be at least 1");
  if (sc.planner_max_samples < 1) {
    flag("planner.max_samples", "must be at least 1");
  }
  if (!(sc.planner_goal_radius > 0.0)) {
    flag("planner.goal_radius", "must be positive");
  }
  if (sc.planner_prune_epsilon < 0.0) {
    flag("planner.prune_epsilon", "must be non-negative");
  }
  if (!is_one_of(sc.planner_cost_mode, {"euclidean", "step_count"})) {
    flag("planner.cost_mode", "must be 'euclidean' or 'step_count'");
  }
  if (!is_one_of(sc.start_stance, {"right", "left"})) {
    flag("start.stance", "must be 'right' or 'left'");
  }
  if (!is_one_of(sc.tracking_mode, {"none", "open", "closed", "both"})) {
    flag("tracking.mode", "must be none, open, closed or both");
  }
  if (sc.tracking_position_noise < 0.0) {
    flag("tracking.position_noise", "must be non-negative");
  }
  if (sc.tracking_momentum_noise < 0.0) {
    flag("tracking.momentum_noise", "must be non-negative");
  }
  if (sc.output_dir.empty()) flag("output.dir", "must not be empty");

  // From exact rest the step-0 CoM displacement is parallel to the foot
  // offset, so a lateral band excluding zero is unsatisfiable: no expansion
  // can ever succeed.
  if (sc.bounds_lb_yb > 0.0 &&
      std::hypot(sc.start_xdot, sc.start_ydot) < 1e-9) {
    flag("start.xdot",
         "standstill start cannot satisfy the one-sided lateral band; give "
         "the walker initial velocity");
  }

  // Placement checks only when the map is actually buildable.
  if (findings.empty()) {
    OccupancyGrid grid;
    bool have_grid = false;
    try {
      grid = build_grid(sc);
      have_grid = true;
    } catch (const std::exception& e) {
      flag("map.source", std::string("map failed to load: ") + e.what());
    }
    if (have_grid) {
      if (sc.obstacles_mode == "explicit" && sc.obstacles_rasterize == 1) {
        rasterize_obstacles(grid, sc.obstacles);
      }
      int ix = 0, iy = 0;
      if (!grid.world_to_cell(sc.start_x, sc.start_y, ix, iy)) {
        flag("start.x", "start lies outside the map extent");
      } else if (grid.at(ix, iy) >= sc.world_occupied_threshold) {
        flag("start.x", "start cell is occupied");
      }
      if (sc.planner_kind == "rrt" &&
          !grid.world_to_cell(sc.goal_x, sc.goal_y, ix, iy)) {
        flag("goal.x", "goal lies outside the map extent");
      }
    }
  }
  return findings;
}

RunSetup build_setup(const Scenario& sc) {
  const std::vector<Finding> findings = validate_scenario(sc);
  if (!findings.empty()) {
    throw ConfigError(findings.front().key, findings.front().message);
  }

  RunSetup setup;
  setup.world.grid = build_grid(sc);
  if (sc.obstacles_mode == "explicit" && sc.obstacles_rasterize == 1) {
    rasterize_obstacles(setup.world.grid, sc.obstacles);
  }
  setup.world.occupied_threshold = sc.world_occupied_threshold;
  setup.world.robot_radius = sc.world_robot_radius;
  setup.world.sensor.num_beams = sc.sensor_num_beams;
  setup.world.sensor.fov = sc.sensor_fov;
  setup.world.sensor.max_range = sc.sensor_max_range;
  setup.world.sensor.sample_stride = sc.sensor_sample_stride;
  for (const SignalEntry& s : sc.signals) {
    SignalSource source;
    source.x = s.x;
    source.y = s.y;
    source.strength = s.strength;
    source.covariance << s.cov_xx, s.cov_xy, s.cov_xy, s.cov_yy;
    setup.world.sources.push_back(source);
  }

  setup.barriers.gamma = sc.barriers_gamma;
  setup.barriers.activation_radius = sc.barriers_activation_radius;
  if (sc.obstacles_mode == "extract") {
    setup.barriers.obstacles = extract_obstacles(
        setup.world.grid, sc.world_occupied_threshold,
        sc.obstacles_extract_buffer, sc.obstacles_extract_norm_p);
  } else {
    setup.barriers.obstacles = sc.obstacles;
  }

  setup.walker.params = LipParams(sc.lip_com_height, sc.lip_gravity,
                                  sc.lip_step_duration, sc.lip_mass);
  setup.walker.right_stance_bounds =
      ReachableBounds{sc.bounds_lb_xb, sc.bounds_ub_xb, sc.bounds_lb_yb,
                      sc.bounds_ub_yb, StanceSide::Right};
  setup.walker.limits = KinematicLimits{sc.limits_l_min, sc.limits_l_max};
  setup.walker.initial_stance =
      sc.start_stance == "right" ? StanceSide::Right : StanceSide::Left;

  setup.mpc.n_min = sc.mpc_n_min;
  setup.mpc.n_max = sc.mpc_n_max;
  setup.mpc.w1 = sc.mpc_w1;
  setup.mpc.w2 = sc.mpc_w2;
  setup.mpc.gamma = sc.barriers_gamma;
  setup.mpc.feasibility_tol = sc.mpc_feasibility_tol;
  setup.mpc.max_iterations = sc.mpc_max_iterations;
  setup.mpc.max_fun_evals = sc.mpc_max_fun_evals;
  setup.mpc.l_nominal = sc.mpc_l_nominal;
  setup.mpc.fd_step = sc.mpc_fd_step;

  setup.planner.budget = sc.planner_budget;
  setup.planner.near_radius = sc.planner_near_radius;
  setup.planner.delta_ric = sc.planner_delta_ric;
  setup.planner.n_ric = sc.planner_n_ric;
  setup.planner.max_samples = sc.planner_max_samples;
  setup.planner.goal_radius = sc.planner_goal_radius;
  setup.planner.rng_seed = sc.planner_rng_seed;
  setup.planner.prune_epsilon = sc.planner_prune_epsilon;
  setup.planner.cost_mode = sc.planner_cost_mode == "euclidean"
                                ? CostMode::EuclideanLength
                                : CostMode::StepCount;

  setup.start = LipState{sc.start_x, sc.start_xdot, sc.start_y, sc.start_ydot};
  setup.goal_x = sc.goal_x;
  setup.goal_y = sc.goal_y;
  setup.is_rrt = sc.planner_kind == "rrt";
  setup.track_open =
      sc.tracking_mode == "open" || sc.tracking_mode == "both";
  setup.track_closed =
      sc.tracking_mode == "closed" || sc.tracking_mode == "both";
  setup.disturbance.position = sc.tracking_position_noise;
  setup.disturbance.momentum = sc.tracking_momentum_noise;
  setup.disturbance.seed = sc.tracking_seed;
  return setup;
}

RunReport run_scenario(const Scenario& sc) {
  const RunSetup setup = build_setup(sc);
  std::error_code ec;
  fs::create_directories(sc.output_dir, ec);
  if (ec) {
    throw IoError("cannot create output dir " + sc.output_dir + ": " +
                  ec.message());
  }
  const auto out_path = [&](const char* name) {
    return (fs::path(sc.output_dir) / name).string();
  };

  RunReport report;
  if (setup.is_rrt) {
    report.plan =
        rrt_plan(setup.start, setup.goal_x, setup.goal_y, setup.world,
                 setup.barriers, setup.walker, setup.mpc, setup.planner);
    report.goal_reached =
        report.plan.termination == PlanTermination::ReachedGoal;
    if (report.plan.goal_node >= 0) {
      report.selected_node = report.plan.goal_node;
    } else {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < report.plan.tree.nodes.size(); ++i) {
        const TreeNode& n = report.plan.tree.nodes[i];
        const double d =
            std::hypot(n.state.x - setup.goal_x, n.state.y - setup.goal_y);
        if (d < best) {
          best = d;
          report.selected_node = static_cast<int>(i);
        }
      }
    }
  } else {
    report.plan = safe_iig_plan(setup.start, setup.world, setup.barriers,
                                setup.walker, setup.mpc, setup.planner);
    report.selected_node = max_info_node(report.plan.tree);
    report.min_cost_node = min_cost_leaf(report.plan.tree);
  }
  const PlanTree& tree = report.plan.tree;

  write_file(out_path("scenario_used.cfg"), scenario_echo(sc));
  report.files.push_back(out_path("scenario_used.cfg"));
  save_map(setup.world.grid, out_path("map_used.txt"));
  report.files.push_back(out_path("map_used.txt"));

  std::string obstacles_out =
      "index\tcenter_x\tcenter_y\tradius_x\tradius_y\tbuffer_x\tbuffer_y\t"
      "norm_p\trotation\n";
  for (std::size_t i = 0; i < setup.barriers.obstacles.size(); ++i) {
    const Obstacle& o = setup.barriers.obstacles[i];
    obstacles_out += std::to_string(i);
    for (double v : {o.center_x, o.center_y, o.radius_x, o.radius_y,
                     o.buffer_x, o.buffer_y, o.norm_p, o.rotation}) {
      obstacles_out += '\t';
      append_double(obstacles_out, v);
    }
    obstacles_out += '\n';
  }
  write_file(out_path("obstacles.tsv"), obstacles_out);
  report.files.push_back(out_path("obstacles.tsv"));

  write_file(out_path("tree.tsv"), tree_table(tree));
  report.files.push_back(out_path("tree.tsv"));

  std::string ric_out = "index\tric\n";
  for (std::size_t i = 0; i < tree.ric_history.size(); ++i) {
    ric_out += std::to_string(i);
    ric_out += '\t';
    append_double(ric_out, tree.ric_history[i]);
    ric_out += '\n';
  }
  write_file(out_path("ric.tsv"), ric_out);
  report.files.push_back(out_path("ric.tsv"));

  std::string guard_out = "check\taverage\n";
  for (std::size_t i = 0; i < report.plan.guard_averages.size(); ++i) {
    guard_out += std::to_string(i);
    guard_out += '\t';
    append_double(guard_out, report.plan.guard_averages[i]);
    guard_out += '\n';
  }
  write_file(out_path("guard.tsv"), guard_out);
  report.files.push_back(out_path("guard.tsv"));

  // Selected paths: the tracked path first so the tracking block below can
  // reuse it.
  std::vector<std::pair<std::string, std::vector<PathEntry>>> paths;
  if (setup.is_rrt) {
    paths.emplace_back("path_selected",
                       extract_path(tree, report.selected_node));
  } else {
    paths.emplace_back("path_max_info",
                       extract_path(tree, report.selected_node));
    paths.emplace_back("path_min_cost",
                       extract_path(tree, report.min_cost_node));
  }
  for (const auto& [name, path] : paths) {
    write_file(out_path((name + ".tsv").c_str()), path_table(path));
    report.files.push_back(out_path((name + ".tsv").c_str()));
  }

  std::string barrier_out = "path\tstep\tobstacle\th\n";
  for (const auto& [name, path] : paths) {
    for (std::size_t s = 0; s < path.size(); ++s) {
      for (std::size_t o = 0; o < setup.barriers.obstacles.size(); ++o) {
        barrier_out += name;
        barrier_out += '\t';
        barrier_out += std::to_string(s);
        barrier_out += '\t';
        barrier_out += std::to_string(o);
        barrier_out += '\t';
        append_double(barrier_out,
                      barrier_value(setup.barriers.obstacles[o],
                                    path[s].state.x, path[s].state.y));
        barrier_out += '\n';
      }
    }
  }
  write_file(out_path("barriers.tsv"), barrier_out);
  report.files.push_back(out_path("barriers.tsv"));

  std::string summary = "key\tvalue\n";
  const auto summarize = [&summary](const std::string& key,
                                    const std::string& value) {
    summary += key;
    summary += '\t';
    summary += value;
    summary += '\n';
  };
  const auto summarize_double = [&summarize](const std::string& key,
                                             double v) {
    std::string s;
    append_double(s, v);
    summarize(key, s);
  };

  const std::vector<PathEntry>& tracked = paths.front().second;
  bool tracking_skipped = false;
  if (setup.track_open) {
    if (tracked.size() >= 2) {
      const TrackingReport r =
          track_open_loop(tracked, setup.walker.params, setup.disturbance);
      write_file(out_path("tracking_open.tsv"), tracking_table(r));
      report.files.push_back(out_path("tracking_open.tsv"));
      summarize_double("tracking_open_max_com_error", r.max_com_error);
      summarize_double("tracking_open_max_foot_error", r.max_foot_error);
    } else {
      tracking_skipped = true;
    }
  }
  if (setup.track_closed) {
    if (tracked.size() >= 3) {
      const TrackingReport r =
          track_closed_loop(tracked, setup.walker.params, setup.disturbance);
      write_file(out_path("tracking_closed.tsv"), tracking_table(r));
      report.files.push_back(out_path("tracking_closed.tsv"));
      summarize_double("tracking_closed_max_com_error", r.max_com_error);
      summarize_double("tracking_closed_max_foot_error", r.max_foot_error);
    } else {
      tracking_skipped = true;
    }
  }

  summarize("termination", termination_name(report.plan.termination));
  summarize("samples_used", std::to_string(report.plan.samples_used));
  summarize("node_count", std::to_string(tree.nodes.size()));
  summarize("edge_count", std::to_string(tree.edges.size()));
  summarize("goal_reached", report.goal_reached ? "1" : "0");
  summarize("goal_node", std::to_string(report.plan.goal_node));
  summarize("selected_node", std::to_string(report.selected_node));
  summarize("min_cost_node", std::to_string(report.min_cost_node));
  if (report.selected_node >= 0) {
    summarize_double("selected_cost", tree.nodes[report.selected_node].cost);
    summarize_double("selected_info", tree.nodes[report.selected_node].info);
  }
  if (report.min_cost_node >= 0) {
    summarize_double("min_cost_cost", tree.nodes[report.min_cost_node].cost);
    summarize_double("min_cost_info", tree.nodes[report.min_cost_node].info);
  }
  if (tracking_skipped) summarize("tracking_skipped", "path_too_short");
  write_file(out_path("summary.tsv"), summary);
  report.files.push_back(out_path("summary.tsv"));
  return report;
}

}  // namespace walkplan
