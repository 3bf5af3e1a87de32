#include "walkplan/planner.hpp"

#include <cmath>

#include <gtest/gtest.h>

namespace walkplan {
namespace {

const WalkerModel kWalker;

OccupancyGrid make_grid(int width, int height, double resolution,
                        double fill = 0.0) {
  OccupancyGrid g;
  g.width = width;
  g.height = height;
  g.resolution = resolution;
  g.origin_x = 0.0;
  g.origin_y = 0.0;
  g.cells.assign(static_cast<std::size_t>(width) * height, fill);
  return g;
}

TreeNode make_node(double x, double y, double cost, double info, int parent,
                   bool closed = false) {
  TreeNode n;
  n.state = LipState{x, 0.0, y, 0.0};
  n.cost = cost;
  n.info = info;
  n.parent = parent;
  n.closed = closed;
  return n;
}

TEST(CostEdge, Modes) {
  EXPECT_DOUBLE_EQ(cost_edge(0, 0, 3, 4, CostMode::EuclideanLength), 5.0);
  EXPECT_DOUBLE_EQ(cost_edge(0, 0, 3, 4, CostMode::StepCount), 1.0);
}

TEST(AverageRic, InfiniteUntilWindowFills) {
  std::vector<double> h = {0.4, 0.2};
  EXPECT_TRUE(std::isinf(average_ric(h, 3)));
  h.push_back(0.3);
  EXPECT_NEAR(average_ric(h, 3), 0.3, 1e-15);
  h.push_back(0.1);  // window slides: mean of {0.2, 0.3, 0.1}
  EXPECT_NEAR(average_ric(h, 3), 0.2, 1e-15);
}

TEST(Nearest, PicksClosestAndHonorsExclusion) {
  PlanTree tree;
  tree.nodes.push_back(make_node(0, 0, 0, 0, -1));
  tree.nodes.push_back(make_node(2, 0, 2, 0, 0));
  tree.nodes.push_back(make_node(2, 0.5, 2.5, 0, 0, true));  // closed
  EXPECT_EQ(nearest(tree, 2.1, 0.4, false), 2);
  EXPECT_EQ(nearest(tree, 2.1, 0.4, true), 1);
  tree.nodes[0].closed = true;
  tree.nodes[1].closed = true;
  EXPECT_THROW(nearest(tree, 0, 0, true), AllNodesClosed);
}

TEST(Nearest, TiesBreakByInsertionOrder) {
  PlanTree tree;
  tree.nodes.push_back(make_node(-1, 0, 0, 0, -1));
  tree.nodes.push_back(make_node(1, 0, 0, 0, 0));
  EXPECT_EQ(nearest(tree, 0, 0, false), 0);
}

TEST(Near, BoundaryInclusive) {
  PlanTree tree;
  tree.nodes.push_back(make_node(0, 0, 0, 0, -1));
  tree.nodes.push_back(make_node(3, 0, 3, 0, 0));
  tree.nodes.push_back(make_node(5, 0, 5, 0, 0, true));
  const auto ids = near(tree, 0, 0, 3.0, false);
  EXPECT_EQ(ids, (std::vector<int>{0, 1}));
  // Node 2 sits 0.5 away but is closed; nothing else is in range.
  EXPECT_EQ(near(tree, 4.5, 0, 0.6, true), std::vector<int>{});
  EXPECT_EQ(near(tree, 4.5, 0, 0.6, false), std::vector<int>{2});
}

TEST(Prune, DominatedCandidateDropped) {
  PlanTree tree;
  tree.nodes.push_back(make_node(1, 1, 2.0, 5.0, -1));
  // Same spot, worse info, same cost: dominated.
  EXPECT_TRUE(prune(tree, 1.05, 1.0, 2.0, 4.0, 0.25));
  // Strictly better info: kept.
  EXPECT_FALSE(prune(tree, 1.05, 1.0, 2.0, 6.0, 0.25));
  // Cheaper with equal info: kept.
  EXPECT_FALSE(prune(tree, 1.05, 1.0, 1.5, 5.0, 0.25));
  // Outside the co-location radius: kept.
  EXPECT_FALSE(prune(tree, 2.0, 1.0, 2.0, 4.0, 0.25));
  // Equal on both axes: kept, domination needs one strict improvement.
  EXPECT_FALSE(prune(tree, 1.0, 1.0, 2.0, 5.0, 0.25));
}

TEST(Prune, ClosedNodesDoNotDominate) {
  PlanTree tree;
  tree.nodes.push_back(make_node(1, 1, 2.0, 5.0, -1, true));
  EXPECT_FALSE(prune(tree, 1.0, 1.0, 3.0, 4.0, 0.25));
}

TEST(SampleFree, ThreeDrawsInsideFreeCell) {
  WorldModel world;
  world.grid = make_grid(10, 10, 0.5);
  for (int iy = 0; iy < 10; ++iy) {
    for (int ix = 0; ix < 5; ++ix) world.grid.at(ix, iy) = 0.9;  // left half
  }
  Rng rng(42);
  Rng shadow(42);
  for (int i = 0; i < 200; ++i) {
    const auto [x, y] = sample_free(world, rng);
    for (int k = 0; k < 3; ++k) shadow.raw();
    EXPECT_EQ(rng.raw(), shadow.raw());  // consumes the pair together
    int ix = -1, iy = -1;
    ASSERT_TRUE(world.grid.world_to_cell(x, y, ix, iy));
    EXPECT_LT(world.grid.at(ix, iy), world.occupied_threshold);
    EXPECT_GE(ix, 5);
  }
}

TEST(SampleFree, ThrowsWithoutFreeSpace) {
  WorldModel world;
  world.grid = make_grid(4, 4, 0.5, 0.9);
  Rng rng(1);
  EXPECT_THROW(sample_free(world, rng), NoFreeSpace);
}

TEST(ExtractPath, ChainAndSentinels) {
  PlanTree tree;
  tree.nodes.push_back(make_node(0, 0, 0, 0, -1));
  tree.nodes.push_back(make_node(0.0, 0.4, 0.4, 0, 0));
  tree.nodes.push_back(make_node(0.3, 0.8, 0.9, 0, 1));
  const auto path = extract_path(tree, 2);
  ASSERT_EQ(path.size(), 3u);
  EXPECT_DOUBLE_EQ(path[0].state.x, 0.0);
  EXPECT_DOUBLE_EQ(path[2].state.x, 0.3);
  // Headings follow consecutive displacements; the final entry repeats.
  EXPECT_DOUBLE_EQ(path[0].heading.sin_theta, 0.0);
  EXPECT_DOUBLE_EQ(path[0].heading.cos_theta, 1.0);
  EXPECT_NEAR(path[1].heading.sin_theta, 0.3 / 0.5, 1e-12);
  EXPECT_NEAR(path[1].heading.cos_theta, 0.4 / 0.5, 1e-12);
  EXPECT_DOUBLE_EQ(path[2].heading.sin_theta, path[1].heading.sin_theta);
  EXPECT_DOUBLE_EQ(path[2].heading.cos_theta, path[1].heading.cos_theta);

  const auto single = extract_path(tree, 0);
  ASSERT_EQ(single.size(), 1u);
  EXPECT_DOUBLE_EQ(single[0].heading.sin_theta, 0.0);
  EXPECT_DOUBLE_EQ(single[0].heading.cos_theta, 0.0);

  EXPECT_THROW(extract_path(tree, 17), NodeNotInTree);
  EXPECT_THROW(extract_path(tree, -1), NodeNotInTree);
}

TEST(Selection, MaxInfoPrefersInfoThenCost) {
  PlanTree tree;
  tree.nodes.push_back(make_node(0, 0, 0, 1, -1));
  tree.nodes.push_back(make_node(1, 0, 3, 7, 0));
  tree.nodes.push_back(make_node(2, 0, 2, 7, 0));  // same info, cheaper
  tree.nodes.push_back(make_node(3, 0, 9, 5, 0));
  EXPECT_EQ(max_info_node(tree), 2);
  EXPECT_EQ(max_info_node(PlanTree{}), -1);
}

TEST(Selection, MinCostLeafIgnoresInteriorNodes) {
  PlanTree tree;
  tree.nodes.push_back(make_node(0, 0, 0, 0, -1));
  tree.nodes.push_back(make_node(1, 0, 1.0, 0, 0));
  tree.nodes.push_back(make_node(2, 0, 2.0, 0, 1));
  tree.nodes.push_back(make_node(3, 0, 5.0, 0, 1));
  // Node 1 has children; leaves are 2 and 3.
  EXPECT_EQ(min_cost_leaf(tree), 2);
  PlanTree root_only;
  root_only.nodes.push_back(make_node(0, 0, 0, 0, -1));
  EXPECT_EQ(min_cost_leaf(root_only), 0);
}

WorldModel empty_world(int cells = 16) {
  WorldModel world;
  world.grid = make_grid(cells, cells, 0.5, 0.1);
  world.sensor.max_range = 3.0;
  return world;
}

PlannerConfig fast_config() {
  PlannerConfig config;
  config.goal_radius = 0.5;
  config.max_samples = 600;
  config.rng_seed = 7;
  return config;
}

TEST(RrtPlan, ReachesGoalInOpenSpace) {
  const WorldModel world = empty_world();
  const BarrierSpec barriers;
  const WalkerModel walker;
  const LipState start{2.0, 0.28, 2.0, 0.28};
  const PlanResult result = rrt_plan(start, 5.0, 5.0, world, barriers, walker,
                                     MpcConfig{}, fast_config());
  ASSERT_EQ(result.termination, PlanTermination::ReachedGoal);
  ASSERT_GE(result.goal_node, 0);
  const TreeNode& goal = result.tree.nodes[result.goal_node];
  EXPECT_LE(std::hypot(goal.state.x - 5.0, goal.state.y - 5.0), 0.5);

  const auto path = extract_path(result.tree, result.goal_node);
  ASSERT_GE(path.size(), 2u);
  const KinematicLimits limits;
  for (std::size_t i = 1; i < path.size(); ++i) {
    const double dx = path[i].state.x - path[i - 1].state.x;
    const double dy = path[i].state.y - path[i - 1].state.y;
    const double len = std::hypot(dx, dy);
    EXPECT_GE(len, limits.l_min - 1e-6);
    EXPECT_LE(len, limits.l_max + 1e-6);
    EXPECT_NEAR(std::hypot(path[i].heading.sin_theta,
                           path[i].heading.cos_theta), 1.0, 1e-9);
  }
  // Tree invariants: parents precede children, costs accumulate.
  for (std::size_t i = 1; i < result.tree.nodes.size(); ++i) {
    const TreeNode& n = result.tree.nodes[i];
    ASSERT_GE(n.parent, 0);
    ASSERT_LT(n.parent, static_cast<int>(i));
    EXPECT_GE(n.cost, result.tree.nodes[n.parent].cost);
    EXPECT_GE(n.info, result.tree.nodes[n.parent].info);
  }
}

TEST(RrtPlan, DeterministicForSeed) {
  const WorldModel world = empty_world();
  const BarrierSpec barriers;
  const WalkerModel walker;
  const LipState start{2.0, 0.28, 2.0, 0.28};
  const PlanResult a = rrt_plan(start, 5.0, 5.0, world, barriers, walker,
                                MpcConfig{}, fast_config());
  const PlanResult b = rrt_plan(start, 5.0, 5.0, world, barriers, walker,
                                MpcConfig{}, fast_config());
  ASSERT_EQ(a.tree.nodes.size(), b.tree.nodes.size());
  for (std::size_t i = 0; i < a.tree.nodes.size(); ++i) {
    EXPECT_EQ(a.tree.nodes[i].state.x, b.tree.nodes[i].state.x);
    EXPECT_EQ(a.tree.nodes[i].state.y, b.tree.nodes[i].state.y);
    EXPECT_EQ(a.tree.nodes[i].cost, b.tree.nodes[i].cost);
  }
  PlannerConfig other = fast_config();
  other.rng_seed = 8;
  const PlanResult c = rrt_plan(start, 5.0, 5.0, world, barriers, walker,
                                MpcConfig{}, other);
  bool differs = a.tree.nodes.size() != c.tree.nodes.size();
  for (std::size_t i = 0; !differs && i < a.tree.nodes.size(); ++i) {
    differs = a.tree.nodes[i].state.x != c.tree.nodes[i].state.x;
  }
  EXPECT_TRUE(differs);
}

TEST(RrtPlan, AvoidsExtractedObstacle) {
  WorldModel world = empty_world(20);  // 10 m square
  for (int iy = 8; iy < 12; ++iy) {
    for (int ix = 8; ix < 12; ++ix) world.grid.at(ix, iy) = 0.95;
  }
  BarrierSpec barriers;
  barriers.obstacles = extract_obstacles(world.grid, world.occupied_threshold,
                                         0.0, 10.0);
  ASSERT_EQ(barriers.obstacles.size(), 1u);
  const WalkerModel walker;
  const LipState start{2.0, 0.2, 5.0, 0.05};
  PlannerConfig config = fast_config();
  config.max_samples = 1500;
  const PlanResult result = rrt_plan(start, 8.0, 5.0, world, barriers, walker,
                                     MpcConfig{}, config);
  ASSERT_GT(result.tree.nodes.size(), 1u);
  // The solver meets the decrease chain to feasibility_tol, so node values
  // can sit a hair below zero but never meaningfully inside.
  for (const TreeNode& n : result.tree.nodes) {
    for (const Obstacle& o : barriers.obstacles) {
      EXPECT_GE(barrier_value(o, n.state.x, n.state.y), -1e-4);
    }
  }
  for (const auto& [parent, child] : result.tree.edges) {
    const TreeNode& a = result.tree.nodes[parent];
    const TreeNode& b = result.tree.nodes[child];
    EXPECT_TRUE(no_collision(world.grid, a.state.x, a.state.y, b.state.x,
                             b.state.y, world.robot_radius,
                             world.occupied_threshold));
  }
}

TEST(RrtPlan, StartOutsideMapThrows) {
  const WorldModel world = empty_world();
  EXPECT_THROW(rrt_plan(LipState{-3, 0.2, 2, 0.2}, 5, 5, world, BarrierSpec{},
                        kWalker, MpcConfig{}, fast_config()),
               PoseOutOfMap);
}

WorldModel info_world() {
  WorldModel world;
  world.grid = make_grid(16, 16, 0.5, 0.1);
  // Unknown patch in the top half worth observing.
  for (int iy = 10; iy < 15; ++iy) {
    for (int ix = 3; ix < 13; ++ix) world.grid.at(ix, iy) = 0.5;
  }
  world.sensor.max_range = 2.5;
  SignalSource s;
  s.x = 4.0;
  s.y = 6.5;
  s.strength = 1.5;
  world.sources = {s};
  return world;
}

PlannerConfig iig_config() {
  PlannerConfig config;
  config.rng_seed = 11;
  config.n_ric = 8;
  config.delta_ric = 0.01;
  config.near_radius = 1.5;
  config.max_samples = 400;
  config.budget = 40.0;
  return config;
}

TEST(SafeIigPlan, ConvergesWithSingleGuardCrossing) {
  const WorldModel world = info_world();
  const PlanResult result =
      safe_iig_plan(LipState{4.0, 0.0, 2.0, 0.35}, world, BarrierSpec{},
                    kWalker, MpcConfig{}, iig_config());
  ASSERT_EQ(result.termination, PlanTermination::RicConverged);
  // The threshold should be earned, not met on the first finite average.
  EXPECT_GT(result.samples_used, 20);
  EXPECT_GT(result.tree.nodes.size(), 100u);
  ASSERT_FALSE(result.guard_averages.empty());
  // Every check before the terminating one stays above the threshold.
  for (std::size_t i = 0; i + 1 < result.guard_averages.size(); ++i) {
    EXPECT_GT(result.guard_averages[i], 0.01);
  }
  EXPECT_LE(result.guard_averages.back(), 0.01);
  ASSERT_GT(result.tree.nodes.size(), 1u);
  // Information accumulates along every branch.
  for (std::size_t i = 1; i < result.tree.nodes.size(); ++i) {
    const TreeNode& n = result.tree.nodes[i];
    EXPECT_GE(n.info, result.tree.nodes[n.parent].info);
    EXPECT_GT(n.info, 0.0);
  }
}

TEST(SafeIigPlan, NodeInfoMatchesReplay) {
  const WorldModel world = info_world();
  const PlanResult result =
      safe_iig_plan(LipState{4.0, 0.0, 2.0, 0.35}, world, BarrierSpec{},
                    kWalker, MpcConfig{}, iig_config());
  // Rebuild each node's information state from its parent chain and compare.
  const std::size_t check = std::min<std::size_t>(result.tree.nodes.size(), 8);
  for (std::size_t i = 0; i < check; ++i) {
    std::vector<int> chain;
    for (int v = static_cast<int>(i); v != -1; v = result.tree.nodes[v].parent) {
      chain.push_back(v);
    }
    InfoStateRef acc = make_info_root(world.grid);
    for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
      const TreeNode& n = result.tree.nodes[*it];
      const double theta =
          (*it == 0) ? 0.0
                     : std::atan2(n.heading.sin_theta, n.heading.cos_theta);
      acc = extend_info(acc, n.state.x, n.state.y, theta, world);
    }
    EXPECT_NEAR(result.tree.nodes[i].info, acc->total, 1e-9) << "node " << i;
  }
}

TEST(SafeIigPlan, BudgetClosesExpensiveNodes) {
  const WorldModel world = info_world();
  PlannerConfig config = iig_config();
  config.budget = 1.2;       // a few steps' worth
  config.delta_ric = 1e-9;   // keep sampling so branches outgrow the budget
  config.max_samples = 60;
  const PlanResult result =
      safe_iig_plan(LipState{4.0, 0.0, 2.0, 0.35}, world, BarrierSpec{},
                    kWalker, MpcConfig{}, config);
  bool saw_closed = false;
  for (const TreeNode& n : result.tree.nodes) {
    if (n.closed) {
      saw_closed = true;
      EXPECT_GT(n.cost, config.budget);
    }
  }
  EXPECT_TRUE(saw_closed);
}

TEST(SafeIigPlan, DeterministicForSeed) {
  const WorldModel world = info_world();
  const PlanResult a =
      safe_iig_plan(LipState{4.0, 0.0, 2.0, 0.35}, world, BarrierSpec{},
                    kWalker, MpcConfig{}, iig_config());
  const PlanResult b =
      safe_iig_plan(LipState{4.0, 0.0, 2.0, 0.35}, world, BarrierSpec{},
                    kWalker, MpcConfig{}, iig_config());
  ASSERT_EQ(a.tree.nodes.size(), b.tree.nodes.size());
  ASSERT_EQ(a.guard_averages.size(), b.guard_averages.size());
  for (std::size_t i = 0; i < a.tree.nodes.size(); ++i) {
    EXPECT_EQ(a.tree.nodes[i].state.x, b.tree.nodes[i].state.x);
    EXPECT_EQ(a.tree.nodes[i].info, b.tree.nodes[i].info);
  }
  for (std::size_t i = 0; i < a.guard_averages.size(); ++i) {
    EXPECT_EQ(a.guard_averages[i], b.guard_averages[i]);
  }
}

}  // namespace
}  // namespace walkplan
