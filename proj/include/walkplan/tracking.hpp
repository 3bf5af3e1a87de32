#pragma once

#include <cstdint>
#include <vector>

#include "walkplan/lip.hpp"
#include "walkplan/planner.hpp"

namespace walkplan {

// Zero-mean uniform additive state noise applied after each simulated step.
// Per step, four draws are consumed in a fixed order (x, Ly, y, Lx) whatever
// the magnitudes, so open- and closed-loop runs with one seed see the same
// noise sequence.
struct Disturbance {
  double position = 0.0;  // m, bound on the per-axis position perturbation
  double momentum = 0.0;  // kg m^2/s, bound on the momentum perturbation
  std::uint64_t seed = 0;
};

struct TrackingReport {
  std::vector<AmState> simulated;  // index-aligned with the waypoints
  std::vector<double> com_error;   // per waypoint, Euclidean (m)
  std::vector<double> foot_error;  // per executed step, absolute foot (m)
  double max_com_error = 0.0;
  double max_foot_error = 0.0;
};

// Momentum-only tracking: each step inverts the momentum row toward the
// planned momentum of the next waypoint, reading simulated momentum but
// never simulated position. Needs >= 2 waypoints.
// throws: PathTooShort.
TrackingReport track_open_loop(const std::vector<PathEntry>& path,
                               const LipParams& params,
                               const Disturbance& disturbance = {});

// Receding-horizon deadbeat: each step solves the two-step placement pair
// toward the waypoint two ahead (position and momentum, both axes) and
// applies only the first placement; the final step falls back to the
// momentum law (no waypoint two ahead exists). Needs >= 3 waypoints.
// throws: PathTooShort; SingularSystem from deadbeat_placements.
TrackingReport track_closed_loop(const std::vector<PathEntry>& path,
                                 const LipParams& params,
                                 const Disturbance& disturbance = {});

}  // namespace walkplan
