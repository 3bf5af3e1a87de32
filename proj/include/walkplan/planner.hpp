#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "walkplan/mpc.hpp"
#include "walkplan/rng.hpp"
#include "walkplan/world.hpp"

namespace walkplan {

enum class CostMode { EuclideanLength, StepCount };

struct PlannerConfig {
  double budget = 1e9;         // cost units; nodes beyond it are closed
  double near_radius = 2.5;    // m
  double delta_ric = 5e-3;     // stopping threshold on the RIC average
  int n_ric = 20;              // RIC averaging window
  int max_samples = 50000;     // hard cap for both loops
  double goal_radius = 0.5;    // m
  std::uint64_t rng_seed = 1;
  double prune_epsilon = 0.25;  // m, co-location radius for pruning
  CostMode cost_mode = CostMode::EuclideanLength;
};

struct TreeNode {
  LipState state;
  StanceSide stance = StanceSide::Right;  // parity for the next expansion
  double cost = 0.0;
  double info = 0.0;
  InfoStateRef info_state;
  FootPlacement first_input;  // input that created this node; zero at root
  int parent = -1;
  bool closed = false;
  Heading heading;  // observation heading; zero sentinel at root
};

struct PlanTree {
  std::vector<TreeNode> nodes;
  std::vector<std::pair<int, int>> edges;  // (parent, child)
  std::vector<double> ric_history;
  int n_sample = 0;  // samples since the last accepted node
};

// Per-accepted-node and per-RIC-append telemetry for the CLI to serialize.
struct NodeTelemetry {
  int id = -1;
  int parent = -1;
  double x = 0.0, y = 0.0;
  double cost = 0.0, info = 0.0;
  std::vector<double> h_values;  // barrier value per obstacle, spec order
};
struct PlannerTelemetry {
  std::function<void(const NodeTelemetry&)> on_node;
  std::function<void(double)> on_ric;
};

// Euclidean-nearest eligible node on (x, y); ties by insertion order.
// throws: AllNodesClosed when exclusion empties the tree.
int nearest(const PlanTree& tree, double x, double y, bool exclude_closed);

// Eligible nodes within `radius` (boundary inclusive), insertion order.
std::vector<int> near(const PlanTree& tree, double x, double y, double radius,
                      bool exclude_closed);

double cost_edge(double ax, double ay, double bx, double by, CostMode mode);

// True when an existing open node within prune_epsilon of (x, y) has
// cost <= cand_cost and info >= cand_info with at least one strict: the
// candidate is dominated and should be dropped.
bool prune(const PlanTree& tree, double x, double y, double cand_cost,
           double cand_info, double prune_epsilon);

// Mean of the trailing n_ric entries; +infinity until the history holds
// n_ric of them (the planning loop must keep going).
double average_ric(const std::vector<double>& history, int n_ric);

// Uniform over cells with occupancy < occupied_threshold, jittered within
// the cell. Consumes exactly three rng draws.
// throws: NoFreeSpace.
std::pair<double, double> sample_free(const WorldModel& world, Rng& rng);

struct PathEntry {
  LipState state;
  FootPlacement input;
  StanceSide stance;
  Heading heading;
};

// Root-to-leaf chain. Headings come from consecutive positions; the last
// entry repeats the previous heading, a single-node path carries the zero
// sentinel.
// throws: NodeNotInTree.
std::vector<PathEntry> extract_path(const PlanTree& tree, int leaf);

// Node whose root path maximizes information (ties: lower cost, then
// insertion order). -1 on an empty tree.
int max_info_node(const PlanTree& tree);

// Childless node of minimum cost (ties by insertion order); the root when
// the tree has no other leaf. -1 on an empty tree.
int min_cost_leaf(const PlanTree& tree);

enum class PlanTermination { ReachedGoal, RicConverged, SampleBudgetExhausted };

struct PlanResult {
  PlanTree tree;
  PlanTermination termination = PlanTermination::SampleBudgetExhausted;
  int goal_node = -1;  // first node inside the goal ball (goal-seeking only)
  int samples_used = 0;
  // RIC guard value at each loop check, terminating check included.
  std::vector<double> guard_averages;
};

// Goal-seeking tree growth: sample free space, expand the nearest node with
// the receding-horizon step toward the sample, keep feasible collision-free
// children, stop inside the goal ball or at max_samples.
PlanResult rrt_plan(const LipState& start, double goal_x, double goal_y,
                    const WorldModel& world, const BarrierSpec& barriers,
                    const WalkerModel& walker, const MpcConfig& mpc,
                    const PlannerConfig& config,
                    const PlannerTelemetry* telemetry = nullptr);

// Information-gathering growth with budget closing, domination pruning and
// the relative-information-contribution stopping rule: each sample expands
// the nearest open node toward the sample to get a feasible anchor point,
// then extends every open near-node toward that anchor, appending nodes
// (with RIC bookkeeping) that survive feasibility, collision and pruning.
PlanResult safe_iig_plan(const LipState& start, const WorldModel& world,
                         const BarrierSpec& barriers,
                         const WalkerModel& walker, const MpcConfig& mpc,
                         const PlannerConfig& config,
                         const PlannerTelemetry* telemetry = nullptr);

}  // namespace walkplan
