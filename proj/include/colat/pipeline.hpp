#pragma once

#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>

#include "colat/geometry.hpp"
#include "colat/lateration.hpp"
#include "colat/mlp.hpp"
#include "colat/preprocessing.hpp"

namespace colat {

struct PipelineConfig {
    double tw = 60.0;            // seconds
    double threshold_dbm = -83.0;
    double eta = 2.1;
    double d0 = 1.0;             // meters
    SolverConfig solver;
    int min_neighbors = 3;
    double min_predicted_distance = 0.01;  // floor for model-predicted ranges, meters
};

/// What one device publishes after its stand-alone fix: the estimate, its
/// calibration value and when it was published.
struct SharedEntry {
    PositionEstimate standalone;
    double rss_at_1m = 0.0;
    double updated_at = 0.0;
};

/// Registry of the latest stand-alone estimate per device. Single writer per
/// device, any number of readers; readers work on immutable snapshots.
class SharedState {
  public:
    void publish(const std::string& device_id, const PositionEstimate& standalone,
                 double rss_at_1m, double t);

    /// Entries no older than tw at time `now`, minus `exclude`.
    std::map<std::string, SharedEntry> snapshot(double now, double tw,
                                                const std::string& exclude = {}) const;

    std::optional<SharedEntry> find(const std::string& device_id) const;
    void clear();

  private:
    std::map<std::string, SharedEntry> entries_;
    mutable std::mutex mutex_;
};

/// Stand-alone fix from fixed anchors: group by anchor, drop interquartile
/// outliers, average, keep anchors at or above the threshold, convert RSS to
/// range through the log-distance model with the device's own 1 m value, and
/// solve with inverse-square-distance weights. Samples from transmitters that
/// are not deployed anchors are discarded. Throws InsufficientAnchors when
/// fewer than 3 anchors pass the threshold.
PositionEstimate standalone_position(const MeasurementWindow& window, const AnchorSet& anchors,
                                     const DeviceProfile& profile, const PipelineConfig& cfg);

/// Pairwise distance backend for the collaborative phase; normally the MLP's
/// forward pass, replaceable for testing.
using DistancePredictor = std::function<double(const MlpFeatureVector&)>;

/// Collaborative fix from neighbor devices: same aggregation over
/// device-to-device readings, pairwise distances predicted from (rss, both
/// stand-alone estimates, the receiver's 1 m value), then the same weighted
/// solver with neighbors' stand-alone estimates as anchor positions.
/// `neighbors` is a SharedState snapshot that must not contain the target.
/// Throws InsufficientNeighbors when fewer than cfg.min_neighbors neighbors
/// are usable.
PositionEstimate collaborative_position(const MeasurementWindow& window,
                                        const std::map<std::string, SharedEntry>& neighbors,
                                        const PositionEstimate& target_standalone,
                                        const DistancePredictor& predict,
                                        const DeviceProfile& target, const PipelineConfig& cfg);

PositionEstimate collaborative_position(const MeasurementWindow& window,
                                        const std::map<std::string, SharedEntry>& neighbors,
                                        const PositionEstimate& target_standalone,
                                        const MlpModel& model, const DeviceProfile& target,
                                        const PipelineConfig& cfg);

/// Coordinate-wise mean of the two phase estimates.
PositionEstimate fuse_midpoint(const PositionEstimate& standalone,
                               const PositionEstimate& collaborative);

/// End-to-end fix for one device and one window: stand-alone first (published
/// into `shared`), then collaborative + midpoint fusion when a model is given
/// and enough neighbors are available, otherwise the stand-alone estimate.
/// Propagates InsufficientAnchors when even the stand-alone fix fails.
PositionEstimate position_device(const MeasurementWindow& window, const AnchorSet& anchors,
                                 SharedState& shared, const MlpModel* model,
                                 const DeviceProfile& profile, const PipelineConfig& cfg);

}  // namespace colat
