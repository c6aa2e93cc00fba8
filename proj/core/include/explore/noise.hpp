#pragma once

#include <numbers>

#include "explore/rng.hpp"

namespace explore::mapping {

// Reading of one step of ego motion: (dx, dy) in the frame the agent was
// facing when the action was taken (meters), dtheta in radians.
struct OdometryReading {
  double dx = 0.0;
  double dy = 0.0;
  double dtheta = 0.0;
};

// Truncated-Gaussian actuation noise: per step one perturbation with
// sigma = eta * Delta_a, truncated to +-eta * Delta_a, where Delta_a is the
// magnitude of the motion component the action drives.
struct OdometryNoiseModel {
  double eta = 0.0;
  double forward_magnitude = 0.25;                      // meters
  double rotation_magnitude = std::numbers::pi / 6.0;   // radians

  double sample(double magnitude, Rng& rng) const {
    if (eta <= 0.0) return 0.0;
    const double bound = eta * magnitude;
    return rng.truncated_normal(bound, bound);
  }
};

}  // namespace explore::mapping
