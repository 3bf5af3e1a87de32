#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "walkplan/planner.hpp"
#include "walkplan/tracking.hpp"

namespace walkplan {

// One entry of the signal field, covariance spelled out per component so the
// whole scenario stays flat key/value text.
struct SignalEntry {
  double x = 0.0;
  double y = 0.0;
  double strength = 1.0;
  double cov_xx = 1.0;
  double cov_xy = 0.0;
  double cov_yy = 1.0;
};

// Every knob of a planning run, defaults matching the owning modules.
// Parsed from flat dotted-key text (`planner.near_radius = 2.5`, `#`
// comments). Indexed entries (`obstacle.<i>.*`, `signal.<i>.*`) must appear
// in index order without gaps; assigning index i when i entries exist
// appends a default-constructed entry first.
struct Scenario {
  // map.*: "builtin:empty" fills cells with base_occupancy,
  // "builtin:cave_like" adds a border, seeded blocks and unknown patches;
  // any other source is a map file path.
  std::string map_source = "builtin:empty";
  int map_cells_x = 50;
  int map_cells_y = 50;
  double map_resolution = 0.25;
  double map_origin_x = 0.0;
  double map_origin_y = 0.0;
  double map_base_occupancy = 0.1;
  std::uint64_t map_seed = 0;

  double world_occupied_threshold = 0.65;
  double world_robot_radius = 0.4;

  int sensor_num_beams = 36;
  double sensor_fov = 6.283185307179586476925286766559;
  double sensor_max_range = 5.0;
  double sensor_sample_stride = 0.0;
  std::vector<SignalEntry> signals;

  double lip_com_height = 0.6;
  double lip_gravity = 9.81;
  double lip_step_duration = 0.4;
  double lip_mass = 32.0;

  double bounds_lb_xb = -0.2;
  double bounds_ub_xb = 0.3;
  double bounds_lb_yb = 0.05;
  double bounds_ub_yb = 0.25;
  double limits_l_min = 0.05;
  double limits_l_max = 0.5;

  int mpc_n_min = 2;
  int mpc_n_max = 3;
  double mpc_w1 = 1.0;
  double mpc_w2 = 10.0;
  double mpc_feasibility_tol = 1e-6;
  int mpc_max_iterations = 200;
  long mpc_max_fun_evals = 5000;
  double mpc_l_nominal = 0.3;
  double mpc_fd_step = 1e-7;

  // barriers.gamma drives both the barrier spec and the MPC decrease
  // condition; there is deliberately no separate key for the latter.
  double barriers_gamma = 0.75;
  double barriers_activation_radius = 5.0;

  // obstacles.mode: "explicit" uses the obstacle.<i>.* list, "extract"
  // clusters occupied grid cells. obstacles.rasterize additionally paints
  // explicit obstacles into the grid so sampling and collision checks see
  // them (extract mode ignores it; the cells are already there).
  std::string obstacles_mode = "explicit";
  double obstacles_extract_buffer = 0.5;
  double obstacles_extract_norm_p = 10.0;
  int obstacles_rasterize = 0;
  std::vector<Obstacle> obstacles;

  std::string planner_kind = "rrt";  // "rrt" | "safe_iig"
  double planner_budget = 1e9;
  double planner_near_radius = 2.5;
  double planner_delta_ric = 5e-3;
  int planner_n_ric = 20;
  int planner_max_samples = 50000;
  double planner_goal_radius = 0.5;
  std::uint64_t planner_rng_seed = 1;
  double planner_prune_epsilon = 0.25;
  std::string planner_cost_mode = "euclidean";  // | "step_count"

  double start_x = 0.0;
  double start_y = 0.0;
  double start_xdot = 0.0;
  double start_ydot = 0.0;
  std::string start_stance = "right";  // | "left"
  double goal_x = 0.0;
  double goal_y = 0.0;

  std::string tracking_mode = "none";  // | "open" | "closed" | "both"
  double tracking_position_noise = 0.0;
  double tracking_momentum_noise = 0.0;
  std::uint64_t tracking_seed = 0;

  std::string output_dir = "out";
};

// throws: ConfigError on unknown key, malformed line, bad value, or an
// indexed entry that skips ahead. Later assignments win.
Scenario parse_scenario_text(const std::string& text);

// throws: IoError when unreadable, plus everything parse_scenario_text does.
Scenario load_scenario(const std::string& path);

// One `key = value` assignment, same rules as a config line (used for
// command-line overrides).
void apply_override(Scenario& scenario, const std::string& key,
                    const std::string& value);

// Canonical full dump: every effective key in fixed order, numbers printed
// shortest-round-trip. Parsing the echo reproduces the scenario exactly.
std::string scenario_echo(const Scenario& scenario);

struct Finding {
  std::string key;
  std::string message;
};

// All violated invariants, empty when the scenario is runnable. Does not
// plan; builds the map when it can so start/goal placement gets checked.
std::vector<Finding> validate_scenario(const Scenario& scenario);

// Scenario resolved into module inputs.
struct RunSetup {
  WorldModel world;
  BarrierSpec barriers;
  WalkerModel walker;
  MpcConfig mpc;
  PlannerConfig planner;
  LipState start;
  double goal_x = 0.0;
  double goal_y = 0.0;
  bool is_rrt = true;
  bool track_open = false;
  bool track_closed = false;
  Disturbance disturbance;
};

// throws: ConfigError carrying the first validation finding; IoError from a
// map file.
RunSetup build_setup(const Scenario& scenario);

struct RunReport {
  PlanResult plan;
  bool goal_reached = false;
  int selected_node = -1;  // rrt: goal or closest-to-goal; iig: max info
  int min_cost_node = -1;  // iig only
  std::vector<std::string> files;  // artifact paths, in written order
};

// Plans, optionally tracks, and writes all artifacts into
// scenario.output_dir (created if missing): scenario echo, map, tree dump,
// RIC history and guard averages, selected path(s), per-path barrier
// traces, obstacle list, tracking reports, run summary.
// throws: ConfigError, IoError, and planner/tracking errors verbatim.
RunReport run_scenario(const Scenario& scenario);

}  // namespace walkplan
