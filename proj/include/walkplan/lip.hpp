#pragma once

#include <utility>

#include <Eigen/Dense>

#include "walkplan/errors.hpp"

namespace walkplan {

// Displacements below this have no defined heading.
inline constexpr double kHeadingEps = 1e-9;

// Linear inverted pendulum with the center of mass held at constant height.
// Between footstep transitions the sagittal and frontal axes decouple and the
// stride-to-stride map is linear, so one step of duration T is a closed-form
// 2x2 update per axis.
struct LipParams {
  double com_height;
  double gravity;
  double step_duration;
  double mass;
  double beta;  // sqrt(gravity / com_height), cached at construction

  explicit LipParams(double com_height_in = 0.6, double gravity_in = 9.81,
                     double step_duration_in = 0.4, double mass_in = 32.0);
};

// Center-of-mass state sampled at a step transition.
struct LipState {
  double x = 0.0;
  double xdot = 0.0;
  double y = 0.0;
  double ydot = 0.0;
};

// Stance-foot offset from the CoM at the start of the step, world frame.
// The dynamics place the foot at (x_k + px, y_k + py).
struct FootPlacement {
  double px = 0.0;
  double py = 0.0;
};

// Center of mass position paired with angular momentum about the contact
// point, evaluated about the y axis for sagittal motion (ly) and the x axis
// for frontal motion (lx).
struct AmState {
  double x = 0.0;
  double ly = 0.0;
  double y = 0.0;
  double lx = 0.0;
};

enum class StanceSide { Left, Right };

// Reachability box for the next footstep expressed in the heading frame:
// lb_xb/ub_xb bound the component along the heading, lb_yb/ub_yb the lateral
// component. The lateral band is one-sided and depends on which leg swings.
struct ReachableBounds {
  double lb_xb = -0.2;
  double ub_xb = 0.3;
  double lb_yb = 0.05;
  double ub_yb = 0.25;
  StanceSide stance = StanceSide::Right;
};

// Same sagittal bounds, lateral band reflected for the other leg.
ReachableBounds mirrored(const ReachableBounds& b);

struct KinematicLimits {
  double l_min = 0.05;
  double l_max = 0.5;
};

// Heading is measured from the +y axis, so the unit direction vector of a
// displacement (dx, dy) is (sin_theta, cos_theta) = (dx, dy) / |(dx, dy)|.
struct Heading {
  double sin_theta = 0.0;
  double cos_theta = 0.0;
};

struct StepMatrices {
  Eigen::Matrix2d A;
  Eigen::Vector2d B;
};

// Per-axis stride map for the (position, velocity) state:
//   [x; xdot]_{k+1} = A [x; xdot]_k + B p_k
// A = [[1, sinh(bT)/b], [0, cosh(bT)]], B = [1 - cosh(bT); -b sinh(bT)].
StepMatrices step_matrices(const LipParams& params);

// Applies one stride to both axes with foot placement u.
LipState lip_step(const LipState& s, const FootPlacement& u,
                  const LipParams& params);

// throws: DegenerateStep when |(dx, dy)| < kHeadingEps.
Heading heading_from_delta(double dx, double dy);

// True when the foot offset u, rotated into the heading frame of the CoM
// displacement to - from, lies in the reachability box, and the CoM
// displacement length lies in [l_min, l_max].
// throws: DegenerateStep via heading_from_delta.
bool check_reachability(const LipState& from, const LipState& to,
                        const FootPlacement& u, const ReachableBounds& bounds,
                        const KinematicLimits& limits);

// Stride map for the (position, angular momentum) state. Same hyperbolic
// structure as step_matrices with the velocity row rescaled by m*H:
//   A_L = [[1, sinh(bT)/(m H b)], [0, cosh(bT)]]
//   B_L = [1 - cosh(bT); -m H b sinh(bT)]
StepMatrices am_step_matrices(const LipParams& params);

// One stride of the angular-momentum form on both axes.
AmState am_step(const AmState& s, const FootPlacement& u,
                const LipParams& params);

// Foot placement (relative to current CoM position, along one axis) that
// transfers the current momentum l_k to a desired momentum at the end of the
// next step:
//   p = (-l_des_next + cosh(bT) l_k) / (m H b sinh(bT))
double desired_foot_placement(double l_k, double l_des_next,
                              const LipParams& params);

// Two consecutive placements driving the single-axis (position, momentum)
// state exactly to `target` in two strides: solves
//   [A_L B_L, B_L] [p_k; p_{k+1}] = target - A_L^2 state.
// throws: SingularSystem when the 2x2 system is ill conditioned.
std::pair<double, double> deadbeat_placements(const Eigen::Vector2d& state,
                                              const Eigen::Vector2d& target,
                                              const LipParams& params);

// Everything kinematic about one robot: pendulum parameters plus the
// right-stance reachability box (the left-stance box is its mirror).
struct WalkerModel {
  LipParams params;
  ReachableBounds right_stance_bounds;  // stance must be Right
  KinematicLimits limits;
  StanceSide initial_stance = StanceSide::Right;
};

inline StanceSide other_side(StanceSide s) {
  return s == StanceSide::Right ? StanceSide::Left : StanceSide::Right;
}

inline ReachableBounds bounds_for(const WalkerModel& w, StanceSide s) {
  return s == StanceSide::Right ? w.right_stance_bounds
                                : mirrored(w.right_stance_bounds);
}

}  // namespace walkplan
