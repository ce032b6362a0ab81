#pragma once

#include <span>
#include <string>
#include <vector>

#include "colat/geometry.hpp"

namespace colat {

enum class Phase { Standalone, Collaborative, Fused };

std::string to_string(Phase p);
Phase phase_from_string(std::string_view s);

/// One ranging input to the solver: a reference point (fixed anchor, or a
/// neighbor device standing in as one), the measured/predicted distance to
/// it, and its weight in the squared-error sum.
struct RangingObservation {
    Anchor anchor;
    double distance = 0.0;  // meters, > 0
    double weight = 0.0;    // >= 0
};

struct SolverConfig {
    int max_iterations = 100;
    double step_tolerance = 1e-8;   // meters
    double initial_damping = 1e-3;
    double damping_factor = 10.0;
};

struct PositionEstimate {
    Point2D position;
    Phase phase = Phase::Standalone;
    double residual_rms = 0.0;  // sqrt(sum w_i r_i^2 / sum w_i), meters
    int iterations = 0;
    bool converged = false;
};

/// Standard ranging weights: w_i = 1 / d_i^2. Throws std::domain_error when
/// any distance is not positive.
std::vector<RangingObservation> default_weights(std::vector<RangingObservation> observations);

/// Levenberg-Marquardt weighted nonlinear least squares over the planar
/// range equations: finds x minimizing sum_i w_i (|x - a_i| - d_i)^2.
///
/// Damping starts at cfg.initial_damping and is divided/multiplied by
/// cfg.damping_factor on accepted/rejected steps. The first start is the
/// weighted centroid of the observation anchors; because the objective is
/// multimodal, the solve is repeated from a few deterministic extra starts
/// (mirror images across the weighted anchor principal line, then the anchor
/// positions) and the lowest local minimum wins. Collinear anchors are
/// accepted but may converge to either mirror solution (GDOP hazard).
///
/// Throws InsufficientAnchors with fewer than 3 positively weighted
/// observations (or all-identical anchor positions) and NumericalFailure if
/// the iteration produces non-finite values.
PositionEstimate laterate(std::span<const RangingObservation> observations,
                          const SolverConfig& cfg = {});

}  // namespace colat
