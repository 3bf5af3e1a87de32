#include "walkplan/lip.hpp"

#include <cmath>

namespace walkplan {

LipParams::LipParams(double com_height_in, double gravity_in,
                     double step_duration_in, double mass_in)
    : com_height(com_height_in),
      gravity(gravity_in),
      step_duration(step_duration_in),
      mass(mass_in),
      beta(0.0) {
  if (!(com_height > 0.0) || !(gravity > 0.0) || !(step_duration > 0.0) ||
      !(mass > 0.0)) {
    throw std::invalid_argument(
        "LipParams: com_height, gravity, step_duration, mass must be > 0");
  }
  beta = std::sqrt(gravity / com_height);
}

ReachableBounds mirrored(const ReachableBounds& b) {
  ReachableBounds out = b;
  out.lb_yb = -b.ub_yb;
  out.ub_yb = -b.lb_yb;
  out.stance =
      b.stance == StanceSide::Right ? StanceSide::Left : StanceSide::Right;
  return out;
}

StepMatrices step_matrices(const LipParams& params) {
  const double bt = params.beta * params.step_duration;
  const double ch = std::cosh(bt);
  const double sh = std::sinh(bt);
  StepMatrices m;
  m.A << 1.0, sh / params.beta, 0.0, ch;
  m.B << 1.0 - ch, -params.beta * sh;
  return m;
}

LipState lip_step(const LipState& s, const FootPlacement& u,
                  const LipParams& params) {
  const StepMatrices m = step_matrices(params);
  LipState out;
  out.x = m.A(0, 0) * s.x + m.A(0, 1) * s.xdot + m.B(0) * u.px;
  out.xdot = m.A(1, 0) * s.x + m.A(1, 1) * s.xdot + m.B(1) * u.px;
  out.y = m.A(0, 0) * s.y + m.A(0, 1) * s.ydot + m.B(0) * u.py;
  out.ydot = m.A(1, 0) * s.y + m.A(1, 1) * s.ydot + m.B(1) * u.py;
  return out;
}

Heading heading_from_delta(double dx, double dy) {
  const double norm = std::sqrt(dx * dx + dy * dy);
  if (norm < kHeadingEps) {
    throw DegenerateStep("heading_from_delta: displacement below threshold");
  }
  return Heading{dx / norm, dy / norm};
}

bool check_reachability(const LipState& from, const LipState& to,
                        const FootPlacement& u, const ReachableBounds& bounds,
                        const KinematicLimits& limits) {
  const Heading h = heading_from_delta(to.x - from.x, to.y - from.y);
  // Heading-frame components of the offset: longitudinal along (sin, cos),
  // lateral along (-cos, sin).
  const double lon = h.sin_theta * u.px + h.cos_theta * u.py;
  const double lat = -h.cos_theta * u.px + h.sin_theta * u.py;
  if (lon < bounds.lb_xb || lon > bounds.ub_xb) return false;
  if (lat < bounds.lb_yb || lat > bounds.ub_yb) return false;
  const double dx = to.x - from.x;
  const double dy = to.y - from.y;
  const double len_sq = dx * dx + dy * dy;
  if (len_sq < limits.l_min * limits.l_min) return false;
  if (len_sq > limits.l_max * limits.l_max) return false;
  return true;
}

StepMatrices am_step_matrices(const LipParams& params) {
  const double mh = params.mass * params.com_height;
  const double bt = params.beta * params.step_duration;
  const double ch = std::cosh(bt);
  const double sh = std::sinh(bt);
  StepMatrices m;
  m.A << 1.0, sh / (mh * params.beta), 0.0, ch;
  m.B << 1.0 - ch, -mh * params.beta * sh;
  return m;
}

AmState am_step(const AmState& s, const FootPlacement& u,
                const LipParams& params) {
  const StepMatrices m = am_step_matrices(params);
  AmState out;
  out.x = m.A(0, 0) * s.x + m.A(0, 1) * s.ly + m.B(0) * u.px;
  out.ly = m.A(1, 0) * s.x + m.A(1, 1) * s.ly + m.B(1) * u.px;
  out.y = m.A(0, 0) * s.y + m.A(0, 1) * s.lx + m.B(0) * u.py;
  out.lx = m.A(1, 0) * s.y + m.A(1, 1) * s.lx + m.B(1) * u.py;
  return out;
}

double desired_foot_placement(double l_k, double l_des_next,
                              const LipParams& params) {
  const double mhb = params.mass * params.com_height * params.beta;
  const double bt = params.beta * params.step_duration;
  return (-l_des_next + std::cosh(bt) * l_k) / (mhb * std::sinh(bt));
}

std::pair<double, double> deadbeat_placements(const Eigen::Vector2d& state,
                                              const Eigen::Vector2d& target,
                                              const LipParams& params) {
  const StepMatrices m = am_step_matrices(params);
  Eigen::Matrix2d M;
  M.col(0) = m.A * m.B;
  M.col(1) = m.B;
  const Eigen::Vector2d rhs = target - m.A * m.A * state;
  const double det = M.determinant();
  if (std::abs(det) < 1e-12 * M.norm() * M.norm()) {
    throw SingularSystem("deadbeat_placements: placement system singular");
  }
  const Eigen::Vector2d p = M.partialPivLu().solve(rhs);
  return {p(0), p(1)};
}

}  // namespace walkplan
