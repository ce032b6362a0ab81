#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "colat/geometry.hpp"
#include "colat/preprocessing.hpp"

namespace colat {

/// A thin attenuating segment (wall, shelf, pillar face). A link loses
/// attenuation_db whenever the TX-RX segment crosses it.
struct Obstacle {
    Point2D a;
    Point2D b;
    double attenuation_db = 0.0;
};

/// Path-loss shape per link class; the 1 m reference level itself is the
/// receiving device's rss_at_1m, which carries all hardware heterogeneity.
struct LinkModel {
    double eta = 2.1;
    double d0 = 1.0;
};

struct ChannelModel {
    LinkModel anchor_link;         // anchor -> device
    LinkModel device_link;         // device -> device
    double shadowing_sigma = 0.0;  // dB, i.i.d. Gaussian per sample
};

struct Scenario {
    double width = 0.0;   // meters
    double height = 0.0;
    AnchorSet anchors;
    std::vector<DeviceProfile> devices;  // true_position set; rss_at_1m is the true base value
    std::vector<Obstacle> obstacles;
    ChannelModel channel;
    double anchor_tx_period = 0.25;  // seconds
    double device_tx_period = 0.1;
    double duration = 60.0;
    std::uint64_t seed = 0;
};

/// Throws std::invalid_argument naming the violated constraint.
void validate(const Scenario& scenario);

bool segments_intersect(const Point2D& p1, const Point2D& p2,
                        const Point2D& q1, const Point2D& q2);

/// Total obstacle loss on the straight path between two points.
double obstacle_loss_db(const Scenario& scenario, const Point2D& tx, const Point2D& rx);

/// Simulate the registration procedure: n samples at exactly 1 m line of
/// sight from the reference anchor, shadowing included; returns their mean.
/// Deterministic given the scenario seed and the device's position in the
/// device list.
double register_device(const Scenario& scenario, const std::string& device_id,
                       const std::string& reference_anchor_id, int n_samples = 100);

/// Every transmitter (anchors and devices) heard by every device at the
/// transmitter's period: rss = ldpl(d_true) - obstacle losses + N(0, sigma).
/// Sorted by (t, tx, rx); bitwise deterministic given the scenario.
std::vector<RssSample> generate_log(const Scenario& scenario);

/// Builtin seven-anchor office deployment (16.7 x 10.8 m) with five device
/// placements per configuration id (1..7) and heterogeneous per-device
/// calibration presets. Shadowing defaults to 4 dB; no obstacles.
Scenario preset_scenario(int configuration);

/// Fixed set of four 6 dB interior partitions used by the adverse-conditions
/// experiment preset.
std::vector<Obstacle> adverse_obstacles();

// Scenario file: JSON document with area, anchors, devices, obstacles,
// channel, periods, duration and seed (schema in the README).
Scenario load_scenario(const std::filesystem::path& path);
void save_scenario(const std::filesystem::path& path, const Scenario& scenario);

}  // namespace colat
