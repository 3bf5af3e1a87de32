#include "walkplan/tracking.hpp"

#include <cmath>

#include "walkplan/rng.hpp"

namespace walkplan {

namespace {

// Planned waypoints in angular-momentum coordinates, L = m H v.
std::vector<AmState> to_am(const std::vector<PathEntry>& path,
                           const LipParams& params) {
  const double mh = params.mass * params.com_height;
  std::vector<AmState> wp;
  wp.reserve(path.size());
  for (const PathEntry& e : path) {
    wp.push_back(AmState{e.state.x, mh * e.state.xdot, e.state.y,
                         mh * e.state.ydot});
  }
  return wp;
}

void apply_noise(AmState& s, const Disturbance& d, Rng& rng) {
  const double nx = rng.uniform(-d.position, d.position);
  const double nly = rng.uniform(-d.momentum, d.momentum);
  const double ny = rng.uniform(-d.position, d.position);
  const double nlx = rng.uniform(-d.momentum, d.momentum);
  s.x += nx;
  s.ly += nly;
  s.y += ny;
  s.lx += nlx;
}

// Shared rollout skeleton; `placement(k, sim)` picks the step-k input.
template <typename PlacementFn>
TrackingReport roll(const std::vector<PathEntry>& path,
                    const LipParams& params, const Disturbance& disturbance,
                    PlacementFn placement) {
  const std::vector<AmState> wp = to_am(path, params);
  Rng rng(disturbance.seed);
  TrackingReport report;
  report.simulated.reserve(wp.size());
  report.com_error.reserve(wp.size());

  AmState sim = wp.front();
  report.simulated.push_back(sim);
  report.com_error.push_back(0.0);
  for (std::size_t k = 0; k + 1 < wp.size(); ++k) {
    const FootPlacement u = placement(k, sim);
    // Absolute foot error against the planned step: the input stored on
    // waypoint k+1 is the offset from the planned waypoint k.
    const FootPlacement planned = path[k + 1].input;
    const double fx = (sim.x + u.px) - (wp[k].x + planned.px);
    const double fy = (sim.y + u.py) - (wp[k].y + planned.py);
    report.foot_error.push_back(std::hypot(fx, fy));

    sim = am_step(sim, u, params);
    apply_noise(sim, disturbance, rng);
    report.simulated.push_back(sim);
    report.com_error.push_back(
        std::hypot(sim.x - wp[k + 1].x, sim.y - wp[k + 1].y));
  }
  for (double e : report.com_error) {
    report.max_com_error = std::max(report.max_com_error, e);
  }
  for (double e : report.foot_error) {
    report.max_foot_error = std::max(report.max_foot_error, e);
  }
  return report;
}

}  // namespace

TrackingReport track_open_loop(const std::vector<PathEntry>& path,
                               const LipParams& params,
                               const Disturbance& disturbance) {
  if (path.size() < 2) throw PathTooShort("track_open_loop: need >= 2 waypoints");
  const std::vector<AmState> wp = to_am(path, params);
  return roll(path, params, disturbance,
              [&](std::size_t k, const AmState& sim) {
                return FootPlacement{
                    desired_foot_placement(sim.ly, wp[k + 1].ly, params),
                    desired_foot_placement(sim.lx, wp[k + 1].lx, params)};
              });
}

TrackingReport track_closed_loop(const std::vector<PathEntry>& path,
                                 const LipParams& params,
                                 const Disturbance& disturbance) {
  if (path.size() < 3) {
    throw PathTooShort("track_closed_loop: need >= 3 waypoints");
  }
  const std::vector<AmState> wp = to_am(path, params);
  return roll(path, params, disturbance,
              [&](std::size_t k, const AmState& sim) {
                if (k + 2 >= wp.size()) {
                  // Last step: no target two ahead, track momentum only.
                  return FootPlacement{
                      desired_foot_placement(sim.ly, wp[k + 1].ly, params),
                      desired_foot_placement(sim.lx, wp[k + 1].lx, params)};
                }
                const auto [px, px1] = deadbeat_placements(
                    Eigen::Vector2d(sim.x, sim.ly),
                    Eigen::Vector2d(wp[k + 2].x, wp[k + 2].ly), params);
                const auto [py, py1] = deadbeat_placements(
                    Eigen::Vector2d(sim.y, sim.lx),
                    Eigen::Vector2d(wp[k + 2].y, wp[k + 2].lx), params);
                return FootPlacement{px, py};
              });
}

}  // namespace walkplan
