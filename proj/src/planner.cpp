#include "walkplan/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace walkplan {

int nearest(const PlanTree& tree, double x, double y, bool exclude_closed) {
  int best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    const TreeNode& n = tree.nodes[i];
    if (exclude_closed && n.closed) continue;
    const double dx = n.state.x - x;
    const double dy = n.state.y - y;
    const double d = dx * dx + dy * dy;
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(i);
    }
  }
  if (best < 0) throw AllNodesClosed("nearest: no eligible node");
  return best;
}

std::vector<int> near(const PlanTree& tree, double x, double y, double radius,
                      bool exclude_closed) {
  std::vector<int> out;
  const double r_sq = radius * radius;
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    const TreeNode& n = tree.nodes[i];
    if (exclude_closed && n.closed) continue;
    const double dx = n.state.x - x;
    const double dy = n.state.y - y;
    if (dx * dx + dy * dy <= r_sq) out.push_back(static_cast<int>(i));
  }
  return out;
}

double cost_edge(double ax, double ay, double bx, double by, CostMode mode) {
  if (mode == CostMode::StepCount) return 1.0;
  return std::hypot(bx - ax, by - ay);
}

bool prune(const PlanTree& tree, double x, double y, double cand_cost,
           double cand_info, double prune_epsilon) {
  const double eps_sq = prune_epsilon * prune_epsilon;
  for (const TreeNode& n : tree.nodes) {
    if (n.closed) continue;
    const double dx = n.state.x - x;
    const double dy = n.state.y - y;
    if (dx * dx + dy * dy > eps_sq) continue;
    const bool no_worse = n.cost <= cand_cost && n.info >= cand_info;
    const bool strict = n.cost < cand_cost || n.info > cand_info;
    if (no_worse && strict) return true;
  }
  return false;
}

double average_ric(const std::vector<double>& history, int n_ric) {
  if (static_cast<int>(history.size()) < n_ric) {
    return std::numeric_limits<double>::infinity();
  }
  double sum = 0.0;
  for (std::size_t i = history.size() - n_ric; i < history.size(); ++i) {
    sum += history[i];
  }
  return sum / n_ric;
}

namespace {

// Free-cell index built once per planning run; draw() matches sample_free's
// rng consumption exactly.
class FreeSampler {
 public:
  FreeSampler(const OccupancyGrid& grid, double occupied_threshold)
      : grid_(grid) {
    for (std::size_t i = 0; i < grid.cells.size(); ++i) {
      if (grid.cells[i] < occupied_threshold) {
        free_cells_.push_back(static_cast<int>(i));
      }
    }
    if (free_cells_.empty()) throw NoFreeSpace("sample_free: no free cells");
  }

  std::pair<double, double> draw(Rng& rng) const {
    const int cell =
        free_cells_[rng.below(static_cast<std::uint64_t>(free_cells_.size()))];
    const int ix = cell % grid_.width;
    const int iy = cell / grid_.width;
    const double x =
        grid_.origin_x + (ix + rng.uniform()) * grid_.resolution;
    const double y =
        grid_.origin_y + (iy + rng.uniform()) * grid_.resolution;
    return {x, y};
  }

 private:
  const OccupancyGrid& grid_;
  std::vector<int> free_cells_;
};

bool inside_grid(const OccupancyGrid& grid, double x, double y) {
  int ix = 0, iy = 0;
  return grid.world_to_cell(x, y, ix, iy);
}

void emit_node(const PlannerTelemetry* telemetry, const PlanTree& tree,
               int id, const BarrierSpec& barriers) {
  if (telemetry == nullptr || !telemetry->on_node) return;
  const TreeNode& n = tree.nodes[id];
  NodeTelemetry t;
  t.id = id;
  t.parent = n.parent;
  t.x = n.state.x;
  t.y = n.state.y;
  t.cost = n.cost;
  t.info = n.info;
  t.h_values.reserve(barriers.obstacles.size());
  for (const Obstacle& o : barriers.obstacles) {
    t.h_values.push_back(barrier_value(o, n.state.x, n.state.y));
  }
  telemetry->on_node(t);
}

// Root node shared by both loops. The root observes along +y (no incoming
// edge to define a heading).
PlanTree make_tree(const LipState& start, const WorldModel& world,
                   StanceSide stance) {
  if (!inside_grid(world.grid, start.x, start.y)) {
    throw PoseOutOfMap("planner: start outside grid");
  }
  PlanTree tree;
  TreeNode root;
  root.state = start;
  root.stance = stance;
  root.cost = 0.0;
  root.info_state =
      extend_info(make_info_root(world.grid), start.x, start.y, 0.0, world);
  root.info = root.info_state->total;
  tree.nodes.push_back(std::move(root));
  return tree;
}

}  // namespace

std::pair<double, double> sample_free(const WorldModel& world, Rng& rng) {
  FreeSampler sampler(world.grid, world.occupied_threshold);
  return sampler.draw(rng);
}

std::vector<PathEntry> extract_path(const PlanTree& tree, int leaf) {
  if (leaf < 0 || leaf >= static_cast<int>(tree.nodes.size())) {
    throw NodeNotInTree("extract_path: node id out of range");
  }
  std::vector<int> chain;
  for (int i = leaf; i >= 0; i = tree.nodes[i].parent) chain.push_back(i);
  std::reverse(chain.begin(), chain.end());

  std::vector<PathEntry> path;
  path.reserve(chain.size());
  for (int id : chain) {
    const TreeNode& n = tree.nodes[id];
    path.push_back(PathEntry{n.state, n.first_input, n.stance, Heading{}});
  }
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    path[i].heading = heading_from_delta(path[i + 1].state.x - path[i].state.x,
                                         path[i + 1].state.y - path[i].state.y);
  }
  if (path.size() > 1) path.back().heading = path[path.size() - 2].heading;
  return path;
}

int max_info_node(const PlanTree& tree) {
  int best = -1;
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    if (best < 0 || tree.nodes[i].info > tree.nodes[best].info ||
        (tree.nodes[i].info == tree.nodes[best].info &&
         tree.nodes[i].cost < tree.nodes[best].cost)) {
      best = static_cast<int>(i);
    }
  }
  return best;
}

int min_cost_leaf(const PlanTree& tree) {
  if (tree.nodes.empty()) return -1;
  std::vector<char> has_child(tree.nodes.size(), 0);
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    const int p = tree.nodes[i].parent;
    if (p >= 0) has_child[p] = 1;
  }
  int best = -1;
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    if (has_child[i]) continue;
    if (tree.nodes.size() > 1 && tree.nodes[i].parent < 0) continue;
    if (best < 0 || tree.nodes[i].cost < tree.nodes[best].cost) {
      best = static_cast<int>(i);
    }
  }
  return best >= 0 ? best : 0;
}

PlanResult rrt_plan(const LipState& start, double goal_x, double goal_y,
                    const WorldModel& world, const BarrierSpec& barriers,
                    const WalkerModel& walker, const MpcConfig& mpc,
                    const PlannerConfig& config,
                    const PlannerTelemetry* telemetry) {
  PlanResult result;
  result.tree = make_tree(start, world, walker.initial_stance);
  emit_node(telemetry, result.tree, 0, barriers);
  FreeSampler sampler(world.grid, world.occupied_threshold);
  Rng rng(config.rng_seed);

  while (result.samples_used < config.max_samples) {
    ++result.samples_used;
    const auto [sx, sy] = sampler.draw(rng);
    const int near_id = nearest(result.tree, sx, sy, false);
    const TreeNode& from = result.tree.nodes[near_id];
    const ExpandResult exp =
        dcbf_mpc_expand(from.state, from.stance, sx, sy, barriers, walker, mpc);
    if (!exp.is_feasible) continue;
    if (!inside_grid(world.grid, exp.state.x, exp.state.y)) continue;
    if (!no_collision(world.grid, from.state.x, from.state.y, exp.state.x,
                      exp.state.y, world.robot_radius,
                      world.occupied_threshold)) {
      continue;
    }

    TreeNode child;
    child.state = exp.state;
    child.stance = exp.stance;
    child.cost = from.cost + cost_edge(from.state.x, from.state.y, exp.state.x,
                                       exp.state.y, config.cost_mode);
    child.heading = heading_from_delta(exp.state.x - from.state.x,
                                       exp.state.y - from.state.y);
    const double theta = std::atan2(child.heading.sin_theta, child.heading.cos_theta);
    child.info_state =
        extend_info(from.info_state, exp.state.x, exp.state.y, theta, world);
    child.info = child.info_state->total;
    child.first_input = exp.input;
    child.parent = near_id;
    const int id = static_cast<int>(result.tree.nodes.size());
    result.tree.nodes.push_back(std::move(child));
    result.tree.edges.emplace_back(near_id, id);
    emit_node(telemetry, result.tree, id, barriers);

    if (std::hypot(exp.state.x - goal_x, exp.state.y - goal_y) <=
        config.goal_radius) {
      result.goal_node = id;
      result.termination = PlanTermination::ReachedGoal;
      return result;
    }
  }
  result.termination = PlanTermination::SampleBudgetExhausted;
  return result;
}

PlanResult safe_iig_plan(const LipState& start, const WorldModel& world,
                         const BarrierSpec& barriers,
                         const WalkerModel& walker, const MpcConfig& mpc,
                         const PlannerConfig& config,
                         const PlannerTelemetry* telemetry) {
  PlanResult result;
  result.tree = make_tree(start, world, walker.initial_stance);
  emit_node(telemetry, result.tree, 0, barriers);
  FreeSampler sampler(world.grid, world.occupied_threshold);
  Rng rng(config.rng_seed);
  PlanTree& tree = result.tree;

  bool converged = false;
  while (result.samples_used < config.max_samples) {
    const double guard = average_ric(tree.ric_history, config.n_ric);
    result.guard_averages.push_back(guard);
    if (guard <= config.delta_ric) {
      converged = true;
      break;
    }

    ++result.samples_used;
    ++tree.n_sample;
    const auto [sx, sy] = sampler.draw(rng);
    const int nearest_id = nearest(tree, sx, sy, true);
    const TreeNode& nearest_node = tree.nodes[nearest_id];
    const ExpandResult anchor = dcbf_mpc_expand(
        nearest_node.state, nearest_node.stance, sx, sy, barriers, walker, mpc);
    if (!anchor.is_feasible) continue;
    const double ax = anchor.state.x;
    const double ay = anchor.state.y;

    const std::vector<int> near_ids =
        near(tree, ax, ay, config.near_radius, true);
    for (int nid : near_ids) {
      // Candidate step: the near node toward the feasible anchor point.
      const LipState from_state = tree.nodes[nid].state;
      const StanceSide from_stance = tree.nodes[nid].stance;
      const double from_cost = tree.nodes[nid].cost;
      const InfoStateRef from_info = tree.nodes[nid].info_state;
      const double from_info_total = tree.nodes[nid].info;

      const ExpandResult e = dcbf_mpc_expand(from_state, from_stance, ax, ay,
                                             barriers, walker, mpc);
      if (!e.is_feasible) continue;
      if (!inside_grid(world.grid, e.state.x, e.state.y)) continue;
      if (!no_collision(world.grid, from_state.x, from_state.y, e.state.x,
                        e.state.y, world.robot_radius,
                        world.occupied_threshold)) {
        continue;
      }

      const Heading heading = heading_from_delta(e.state.x - from_state.x,
                                                 e.state.y - from_state.y);
      const double theta = std::atan2(heading.sin_theta, heading.cos_theta);
      const double info_new =
          information(*from_info, e.state.x, e.state.y, theta, world);
      const double cost_new =
          from_cost + cost_edge(from_state.x, from_state.y, e.state.x,
                                e.state.y, config.cost_mode);
      if (prune(tree, e.state.x, e.state.y, cost_new, info_new,
                config.prune_epsilon)) {
        continue;
      }

      TreeNode child;
      child.state = e.state;
      child.stance = e.stance;
      child.cost = cost_new;
      child.info = info_new;
      child.info_state =
          extend_info(from_info, e.state.x, e.state.y, theta, world);
      child.first_input = e.input;
      child.parent = nid;
      child.heading = heading;
      child.closed = cost_new > config.budget;
      const int id = static_cast<int>(tree.nodes.size());
      tree.nodes.push_back(std::move(child));
      tree.edges.emplace_back(nid, id);
      emit_node(telemetry, tree, id, barriers);

      // Relative information contribution of this acceptance. The near
      // node's total is floored (a zero-entropy world would divide by 0)
      // and the sample counter has already been reset when several nodes
      // land in one sample round.
      const double ric = (info_new / std::max(from_info_total, 1e-9) - 1.0) /
                         std::max(1, tree.n_sample);
      tree.ric_history.push_back(ric);
      if (telemetry != nullptr && telemetry->on_ric) telemetry->on_ric(ric);
      tree.n_sample = 0;
    }
  }
  result.termination = converged ? PlanTermination::RicConverged
                                 : PlanTermination::SampleBudgetExhausted;
  return result;
}

}  // namespace walkplan
