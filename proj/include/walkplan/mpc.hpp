#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "walkplan/barrier.hpp"
#include "walkplan/lip.hpp"

namespace walkplan {

struct MpcConfig {
  int n_min = 2;
  int n_max = 3;
  double w1 = 1.0;   // terminal velocity weight
  double w2 = 10.0;  // terminal position weight
  double gamma = 0.75;
  double feasibility_tol = 1e-6;
  int max_iterations = 200;  // inner iterations, all outer rounds combined
  long max_fun_evals = 5000;
  double l_nominal = 0.3;  // m, horizon estimation and initial-guess spacing
  double fd_step = 1e-7;   // finite-difference step for constraint Jacobians
};

struct MpcProblem {
  LipState initial_state;
  double goal_x = 0.0;
  double goal_y = 0.0;
  int horizon = 2;
  // Per-step reachability box; stance alternates element to element.
  std::vector<ReachableBounds> bounds_sequence;
  KinematicLimits limits;
  std::vector<Obstacle> barriers;  // active set only
  double gamma = 0.75;
  LipParams params;
};

struct MpcSolution {
  std::vector<LipState> states;       // x_1 .. x_N
  std::vector<FootPlacement> inputs;  // u_0 .. u_{N-1}
  bool is_feasible = false;
  double terminal_cost = 0.0;
  double max_violation = 0.0;  // max over constraints of max(0, g_i)
};

struct MpcTraceRecord {
  int outer = 0;
  double cost = 0.0;
  double max_violation = 0.0;
};
using MpcTraceSink = std::function<void(const MpcTraceRecord&)>;

// Horizon estimate: ceil(distance / l_nominal) clamped to [n_min, n_max].
int compute_steps(double from_x, double from_y, double to_x, double to_y,
                  const MpcConfig& config);

// Placements that walk the CoM down the straight segment to the goal at
// l_nominal spacing, with the lateral offset at each step's band midpoint.
// Layout: (px_0, py_0, px_1, py_1, ...).
Eigen::VectorXd default_initial_guess(const MpcProblem& problem,
                                      const MpcConfig& config);

// Minimizes the terminal cost
//   w1 (xdot_N^2 + ydot_N^2) + w2 ((x_N - x_f)^2 + (y_N - y_f)^2)
// over foot placements, subject to the stride dynamics, per-step
// reachability in the heading frame of the step's own CoM displacement,
// the squared step-length band on that displacement, and the barrier
// decrease condition for every obstacle in problem.barriers.
//
// Augmented-Lagrangian outer loop around a damped BFGS inner loop on the
// single-shooting merit; all constraint Jacobians by central differences.
// Deterministic: identical problem, config and guess give a bitwise
// identical solution. Infeasible geometry is reported via
// is_feasible=false / max_violation, never thrown.
// throws: NonFiniteIterate if the iterate leaves the reals.
MpcSolution solve_mpc(const MpcProblem& problem, const MpcConfig& config,
                      const Eigen::VectorXd* initial_guess = nullptr,
                      const MpcTraceSink& trace = nullptr);

// One receding-horizon expansion: solve toward the target over a
// compute_steps horizon, keep only the first planned step.
struct ExpandResult {
  LipState state;       // x_1
  FootPlacement input;  // u_0
  StanceSide stance;    // parity for the next expansion from the new state
  bool is_feasible = false;
  int horizon = 0;
  MpcSolution solution;
};

ExpandResult dcbf_mpc_expand(const LipState& from, StanceSide stance,
                             double target_x, double target_y,
                             const BarrierSpec& barriers,
                             const WalkerModel& walker,
                             const MpcConfig& config);

}  // namespace walkplan
