#include "walkplan/scenario.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <string>

#include "walkplan/errors.hpp"
#include "walkplan/world.hpp"

namespace walkplan {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  EXPECT_TRUE(in.good()) << path;
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("walkplan_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

TEST(ScenarioParse, EchoOfDefaultsRoundTrips) {
  const Scenario defaults;
  const std::string echo = scenario_echo(defaults);
  const Scenario reparsed = parse_scenario_text(echo);
  EXPECT_EQ(scenario_echo(reparsed), echo);
  EXPECT_EQ(reparsed.lip_com_height, 0.6);
  EXPECT_EQ(reparsed.planner_kind, "rrt");
  EXPECT_EQ(reparsed.mpc_max_fun_evals, 5000);
}

TEST(ScenarioParse, CommentsWhitespaceAndLastAssignmentWins) {
  const Scenario sc = parse_scenario_text(
      "# full-line comment\n"
      "\n"
      "  lip.com_height = 0.8   # trailing comment\r\n"
      "lip.com_height=0.7\n"
      "planner.kind = safe_iig\n"
      "planner.rng_seed = 42\n");
  EXPECT_EQ(sc.lip_com_height, 0.7);
  EXPECT_EQ(sc.planner_kind, "safe_iig");
  EXPECT_EQ(sc.planner_rng_seed, 42u);
}

TEST(ScenarioParse, IndexedEntriesAppendInOrder) {
  const Scenario sc = parse_scenario_text(
      "signal.0.x = 1\n"
      "signal.0.strength = 2\n"
      "signal.1.x = 3\n"
      "obstacle.0.center_x = 4\n"
      "obstacle.0.radius_y = 5\n");
  ASSERT_EQ(sc.signals.size(), 2u);
  EXPECT_EQ(sc.signals[0].x, 1.0);
  EXPECT_EQ(sc.signals[0].strength, 2.0);
  EXPECT_EQ(sc.signals[1].x, 3.0);
  EXPECT_EQ(sc.signals[1].strength, 1.0);  // untouched fields keep defaults
  ASSERT_EQ(sc.obstacles.size(), 1u);
  EXPECT_EQ(sc.obstacles[0].center_x, 4.0);
  EXPECT_EQ(sc.obstacles[0].radius_y, 5.0);
}

TEST(ScenarioParse, EchoRoundTripsIndexedEntries) {
  Scenario sc;
  sc.signals.push_back(SignalEntry{1.5, 2.5, 0.75, 4.0, 0.5, 2.0});
  sc.obstacles.push_back(Obstacle{3.0, 4.0, 1.0, 2.0, 0.25, 0.25, 10.0, 0.0});
  const std::string echo = scenario_echo(sc);
  EXPECT_EQ(scenario_echo(parse_scenario_text(echo)), echo);
}

TEST(ScenarioParse, RejectsMalformedInput) {
  const auto key_of = [](const std::string& text) {
    try {
      parse_scenario_text(text);
    } catch (const ConfigError& e) {
      return e.key;
    }
    return std::string("no error");
  };
  EXPECT_EQ(key_of("no.such.key = 1\n"), "no.such.key");
  EXPECT_EQ(key_of("lip.com_height = tall\n"), "lip.com_height");
  EXPECT_EQ(key_of("lip.com_height =\n"), "lip.com_height");
  EXPECT_EQ(key_of("lip.com_height 0.6\n"), "line 1");
  EXPECT_EQ(key_of("\n\njust words\n"), "line 3");
  EXPECT_EQ(key_of("signal.1.x = 1\n"), "signal.1.x");    // index gap
  EXPECT_EQ(key_of("signal.0.power = 1\n"), "signal.0.power");
  EXPECT_EQ(key_of("obstacle.x = 1\n"), "obstacle.x");    // no index
  EXPECT_EQ(key_of("planner.n_ric = 2.5\n"), "planner.n_ric");
  EXPECT_EQ(key_of("planner.rng_seed = -3\n"), "planner.rng_seed");
  EXPECT_EQ(key_of("lip.com_height = inf\n"), "lip.com_height");
}

TEST(ScenarioParse, OverrideMatchesParsePath) {
  Scenario sc;
  apply_override(sc, "planner.rng_seed", " 99 ");
  apply_override(sc, "output.dir", "elsewhere");
  EXPECT_EQ(sc.planner_rng_seed, 99u);
  EXPECT_EQ(sc.output_dir, "elsewhere");
  EXPECT_THROW(apply_override(sc, "bogus", "1"), ConfigError);
}

TEST(ScenarioValidate, StandstillStartIsCalledOut) {
  Scenario sc;  // defaults: zero velocity, one-sided lateral band
  const std::vector<Finding> findings = validate_scenario(sc);
  ASSERT_EQ(findings.size(), 1u);
  EXPECT_EQ(findings[0].key, "start.xdot");
  sc.start_xdot = 0.3;
  EXPECT_TRUE(validate_scenario(sc).empty());
}

TEST(ScenarioValidate, FlagsBadValuesWithTheirKeys) {
  Scenario sc;
  sc.start_xdot = 0.3;
  sc.lip_com_height = -1.0;
  sc.planner_kind = "astar";
  sc.barriers_gamma = 1.5;
  sc.sensor_fov = 7.0;
  const std::vector<Finding> findings = validate_scenario(sc);
  std::vector<std::string> keys;
  for (const Finding& f : findings) keys.push_back(f.key);
  EXPECT_NE(std::find(keys.begin(), keys.end(), "lip.com_height"), keys.end());
  EXPECT_NE(std::find(keys.begin(), keys.end(), "planner.kind"), keys.end());
  EXPECT_NE(std::find(keys.begin(), keys.end(), "barriers.gamma"), keys.end());
  EXPECT_NE(std::find(keys.begin(), keys.end(), "sensor.fov"), keys.end());
}

TEST(ScenarioValidate, MissingMapFileIsAFindingNotAThrow) {
  Scenario sc;
  sc.start_xdot = 0.3;
  sc.map_source = "/nonexistent/map.txt";
  const std::vector<Finding> findings = validate_scenario(sc);
  ASSERT_EQ(findings.size(), 1u);
  EXPECT_EQ(findings[0].key, "map.source");
}

TEST(ScenarioValidate, StartInsideRasterizedObstacleIsOccupied) {
  Scenario sc;
  sc.start_xdot = 0.3;
  sc.start_x = 5.0;
  sc.start_y = 5.0;
  sc.obstacles_rasterize = 1;
  sc.obstacles.push_back(Obstacle{5.0, 5.0, 1.0, 1.0, 0.0, 0.0, 2.0, 0.0});
  const std::vector<Finding> findings = validate_scenario(sc);
  ASSERT_EQ(findings.size(), 1u);
  EXPECT_EQ(findings[0].key, "start.x");
  EXPECT_NE(findings[0].message.find("occupied"), std::string::npos);
}

TEST(ScenarioValidate, StartOutsideMapExtent) {
  Scenario sc;
  sc.start_xdot = 0.3;
  sc.start_x = -1.0;
  const std::vector<Finding> findings = validate_scenario(sc);
  ASSERT_EQ(findings.size(), 1u);
  EXPECT_EQ(findings[0].key, "start.x");
  EXPECT_NE(findings[0].message.find("outside"), std::string::npos);
}

TEST(ScenarioSetup, BuildWiresModulesFromKeys) {
  Scenario sc;
  sc.start_xdot = 0.3;
  sc.barriers_gamma = 0.4;
  sc.start_stance = "left";
  sc.planner_cost_mode = "step_count";
  sc.lip_mass = 40.0;
  sc.signals.push_back(SignalEntry{2.0, 3.0, 1.5, 4.0, 1.0, 2.0});
  const RunSetup setup = build_setup(sc);
  // One gamma key drives both the barrier chain and the solver condition.
  EXPECT_EQ(setup.barriers.gamma, 0.4);
  EXPECT_EQ(setup.mpc.gamma, 0.4);
  EXPECT_EQ(setup.walker.initial_stance, StanceSide::Left);
  EXPECT_EQ(setup.planner.cost_mode, CostMode::StepCount);
  EXPECT_EQ(setup.walker.params.mass, 40.0);
  ASSERT_EQ(setup.world.sources.size(), 1u);
  EXPECT_EQ(setup.world.sources[0].covariance(0, 0), 4.0);
  EXPECT_EQ(setup.world.sources[0].covariance(0, 1), 1.0);
  EXPECT_EQ(setup.world.sources[0].covariance(1, 0), 1.0);
  EXPECT_EQ(setup.world.sources[0].covariance(1, 1), 2.0);
}

TEST(ScenarioSetup, BuildThrowsConfigErrorOnFirstFinding) {
  Scenario sc;  // standstill finding
  try {
    build_setup(sc);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key, "start.xdot");
  }
}

TEST(ScenarioSetup, RasterizePaintsObstacleCoreOnly) {
  Scenario sc;
  sc.start_xdot = 0.3;
  sc.obstacles_rasterize = 1;
  // Buffer regions stay free: only the physical core becomes occupied.
  sc.obstacles.push_back(Obstacle{5.0, 5.0, 1.0, 2.0, 0.5, 0.5, 2.0, 0.0});
  const RunSetup setup = build_setup(sc);
  const OccupancyGrid& g = setup.world.grid;
  int ix = 0, iy = 0;
  ASSERT_TRUE(g.world_to_cell(5.0, 5.0, ix, iy));
  EXPECT_EQ(g.at(ix, iy), 0.95);
  ASSERT_TRUE(g.world_to_cell(5.0, 6.9, ix, iy));  // inside core, tall axis
  EXPECT_EQ(g.at(ix, iy), 0.95);
  ASSERT_TRUE(g.world_to_cell(6.2, 5.0, ix, iy));  // inside buffer, not core
  EXPECT_EQ(g.at(ix, iy), 0.1);
  ASSERT_TRUE(g.world_to_cell(3.0, 3.0, ix, iy));
  EXPECT_EQ(g.at(ix, iy), 0.1);
}

TEST(ScenarioSetup, ExtractModeBuildsObstaclesFromTheGrid) {
  const fs::path dir = fresh_dir("extract_mode");
  OccupancyGrid grid;
  grid.width = 40;
  grid.height = 40;
  grid.resolution = 0.25;
  grid.cells.assign(1600, 0.1);
  for (int iy = 12; iy < 20; ++iy) {
    for (int ix = 16; ix < 24; ++ix) grid.at(ix, iy) = 0.9;
  }
  const std::string map_path = (dir / "map.txt").string();
  save_map(grid, map_path);

  Scenario sc;
  sc.start_xdot = 0.3;
  sc.map_source = map_path;
  sc.obstacles_mode = "extract";
  sc.obstacles_extract_buffer = 0.25;
  sc.obstacles.push_back(Obstacle{});  // explicit list ignored in extract mode
  const RunSetup setup = build_setup(sc);
  ASSERT_EQ(setup.barriers.obstacles.size(), 1u);
  EXPECT_NEAR(setup.barriers.obstacles[0].center_x, 5.0, 1e-12);
  EXPECT_NEAR(setup.barriers.obstacles[0].center_y, 4.0, 1e-12);
  EXPECT_EQ(setup.barriers.obstacles[0].buffer_x, 0.25);
}

TEST(ScenarioSetup, CaveGeneratorIsSeededAndLayered) {
  Scenario sc;
  sc.start_xdot = 0.3;
  sc.map_source = "builtin:cave_like";
  sc.map_cells_x = 104;
  sc.map_cells_y = 88;
  sc.map_seed = 7;
  const OccupancyGrid a = build_setup(sc).world.grid;
  const OccupancyGrid b = build_setup(sc).world.grid;
  EXPECT_EQ(a.cells, b.cells);
  sc.map_seed = 8;
  const OccupancyGrid c = build_setup(sc).world.grid;
  EXPECT_NE(a.cells, c.cells);

  int blocks = 0, patches = 0, base = 0;
  for (double v : a.cells) {
    if (v == 0.1) {
      ++base;
    } else if (v == 0.5) {
      ++patches;
    } else {
      // Block cells land in [0.7, 0.95]; nothing else is ever written.
      EXPECT_GE(v, 0.7);
      EXPECT_LE(v, 0.95);
      ++blocks;
    }
  }
  EXPECT_GT(base, 0);
  EXPECT_GT(patches, 0);
  EXPECT_GT(blocks, 0);
}

TEST(ScenarioRun, WritesArtifactsAndRerunsBitIdentically) {
  const fs::path dir_a = fresh_dir("run_a");
  const fs::path dir_b = fresh_dir("run_b");
  Scenario sc;
  sc.map_cells_x = 40;
  sc.map_cells_y = 40;
  sc.start_x = 2.0;
  sc.start_y = 2.0;
  sc.start_xdot = 0.25;
  sc.start_ydot = 0.25;
  sc.goal_x = 7.0;
  sc.goal_y = 7.0;
  sc.planner_goal_radius = 0.6;
  sc.planner_max_samples = 300;
  sc.tracking_mode = "both";
  sc.tracking_position_noise = 0.01;
  sc.output_dir = dir_a.string();
  const RunReport report = run_scenario(sc);
  EXPECT_EQ(report.plan.termination, PlanTermination::ReachedGoal);
  for (const std::string& file : report.files) {
    EXPECT_TRUE(fs::exists(file)) << file;
  }

  // The echoed config is the whole run: replaying it reproduces every
  // artifact byte for byte, the echo itself differing only in output.dir.
  Scenario replay = parse_scenario_text(slurp(dir_a / "scenario_used.cfg"));
  replay.output_dir = dir_b.string();
  const RunReport replayed = run_scenario(replay);
  ASSERT_EQ(replayed.files.size(), report.files.size());
  for (std::size_t i = 0; i < report.files.size(); ++i) {
    const fs::path a(report.files[i]);
    const fs::path b(replayed.files[i]);
    EXPECT_EQ(a.filename(), b.filename());
    if (a.filename() == "scenario_used.cfg") continue;
    EXPECT_EQ(slurp(a), slurp(b)) << a.filename();
  }

  const std::string summary = slurp(dir_a / "summary.tsv");
  EXPECT_NE(summary.find("termination\treached_goal"), std::string::npos);
  EXPECT_NE(summary.find("tracking_open_max_com_error"), std::string::npos);
  EXPECT_NE(summary.find("tracking_closed_max_com_error"), std::string::npos);
  const std::string tree = slurp(dir_a / "tree.tsv");
  EXPECT_NE(
      tree.find("id\tparent\tx\txdot\ty\tydot\tstance\tcost\tinfo\tclosed"),
      std::string::npos);
}

TEST(ScenarioRun, LoadScenarioMissingFileThrowsIo) {
  EXPECT_THROW(load_scenario("/nonexistent/scenario.cfg"), IoError);
}

}  // namespace
}  // namespace walkplan
