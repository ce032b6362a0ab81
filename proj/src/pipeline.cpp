#include "colat/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "colat/errors.hpp"
#include "colat/rss_model.hpp"

namespace colat {

void SharedState::publish(const std::string& device_id, const PositionEstimate& standalone,
                          double rss_at_1m, double t) {
    const std::lock_guard<std::mutex> lock(mutex_);
    entries_[device_id] = SharedEntry{standalone, rss_at_1m, t};
}

std::map<std::string, SharedEntry> SharedState::snapshot(double now, double tw,
                                                         const std::string& exclude) const {
    const std::lock_guard<std::mutex> lock(mutex_);
    std::map<std::string, SharedEntry> out;
    for (const auto& [id, entry] : entries_) {
        if (id == exclude) continue;
        if (now - entry.updated_at > tw) continue;  // stale
        out.emplace(id, entry);
    }
    return out;
}

std::optional<SharedEntry> SharedState::find(const std::string& device_id) const {
    const std::lock_guard<std::mutex> lock(mutex_);
    const auto it = entries_.find(device_id);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

void SharedState::clear() {
    const std::lock_guard<std::mutex> lock(mutex_);
    entries_.clear();
}

namespace {

// Group -> IQR filter -> average, keeping only transmitters accepted by
// `known`. Shared by both phases.
template <typename Pred>
std::vector<AggregatedRss> aggregate_window(const MeasurementWindow& window, Pred known) {
    MeasurementWindow filtered{window.rx, window.tw, window.t_end, {}};
    for (const auto& s : window.samples)
        if (known(s.tx)) filtered.samples.push_back(s);

    std::map<std::string, std::vector<double>> groups = group_by_transmitter(filtered);
    std::map<std::string, std::vector<double>> cleaned;
    for (auto& [tx, values] : groups) cleaned[tx] = iqr_filter(values);
    return aggregate(cleaned);
}

}  // namespace

PositionEstimate standalone_position(const MeasurementWindow& window, const AnchorSet& anchors,
                                     const DeviceProfile& profile, const PipelineConfig& cfg) {
    if (window.rx != profile.id)
        throw std::invalid_argument("standalone_position: window belongs to " + window.rx +
                                    ", not " + profile.id);

    const auto agg = aggregate_window(window, [&](const std::string& tx) {
        return anchors.find(tx) != nullptr;
    });
    const auto strong = select_strong(agg, cfg.threshold_dbm);
    if (strong.size() < 3)
        throw InsufficientAnchors("standalone_position: " + std::to_string(strong.size()) +
                                  " anchors at or above threshold, need 3");

    const LdplParams ldpl{cfg.eta, cfg.d0, profile.rss_at_1m};
    std::vector<RangingObservation> obs;
    obs.reserve(strong.size());
    for (const auto& a : strong)
        obs.push_back({*anchors.find(a.tx), ldpl_distance(ldpl, a.mean_rss), 0.0});
    obs = default_weights(std::move(obs));

    PositionEstimate est = laterate(obs, cfg.solver);
    est.phase = Phase::Standalone;
    return est;
}

PositionEstimate collaborative_position(const MeasurementWindow& window,
                                        const std::map<std::string, SharedEntry>& neighbors,
                                        const PositionEstimate& target_standalone,
                                        const DistancePredictor& predict,
                                        const DeviceProfile& target, const PipelineConfig& cfg) {
    if (window.rx != target.id)
        throw std::invalid_argument("collaborative_position: window belongs to " + window.rx +
                                    ", not " + target.id);
    if (neighbors.contains(target.id))
        throw std::invalid_argument("collaborative_position: target present in neighbor snapshot");

    const auto agg = aggregate_window(window, [&](const std::string& tx) {
        return neighbors.contains(tx);
    });

    std::vector<RangingObservation> obs;
    for (const auto& a : agg) {
        const SharedEntry& neighbor = neighbors.at(a.tx);
        MlpFeatureVector f;
        f.rss = a.mean_rss;
        f.tx_x = neighbor.standalone.position.x;
        f.tx_y = neighbor.standalone.position.y;
        f.rx_x = target_standalone.position.x;
        f.rx_y = target_standalone.position.y;
        f.rss_1m_rx = target.rss_at_1m;
        const double predicted = std::max(predict(f), cfg.min_predicted_distance);
        obs.push_back({Anchor{a.tx, neighbor.standalone.position}, predicted, 0.0});
    }
    if (obs.size() < static_cast<std::size_t>(cfg.min_neighbors))
        throw InsufficientNeighbors("collaborative_position: " + std::to_string(obs.size()) +
                                    " usable neighbors, need " +
                                    std::to_string(cfg.min_neighbors));
    obs = default_weights(std::move(obs));

    PositionEstimate est = laterate(obs, cfg.solver);
    est.phase = Phase::Collaborative;
    return est;
}

PositionEstimate collaborative_position(const MeasurementWindow& window,
                                        const std::map<std::string, SharedEntry>& neighbors,
                                        const PositionEstimate& target_standalone,
                                        const MlpModel& model, const DeviceProfile& target,
                                        const PipelineConfig& cfg) {
    return collaborative_position(
        window, neighbors, target_standalone,
        [&model](const MlpFeatureVector& f) { return forward(model, f); }, target, cfg);
}

PositionEstimate fuse_midpoint(const PositionEstimate& standalone,
                               const PositionEstimate& collaborative) {
    PositionEstimate fused;
    fused.position = {(standalone.position.x + collaborative.position.x) / 2.0,
                      (standalone.position.y + collaborative.position.y) / 2.0};
    fused.phase = Phase::Fused;
    fused.residual_rms = 0.0;  // not meaningful for a fused point
    fused.iterations = 0;
    fused.converged = standalone.converged && collaborative.converged;
    return fused;
}

PositionEstimate position_device(const MeasurementWindow& window, const AnchorSet& anchors,
                                 SharedState& shared, const MlpModel* model,
                                 const DeviceProfile& profile, const PipelineConfig& cfg) {
    const PositionEstimate standalone = standalone_position(window, anchors, profile, cfg);
    shared.publish(profile.id, standalone, profile.rss_at_1m, window.t_end);
    if (!model) return standalone;

    const auto neighbors = shared.snapshot(window.t_end, cfg.tw, profile.id);
    try {
        const PositionEstimate collaborative =
            collaborative_position(window, neighbors, standalone, *model, profile, cfg);
        return fuse_midpoint(standalone, collaborative);
    } catch (const InsufficientNeighbors&) {
        return standalone;
    } catch (const NumericalFailure&) {
        return standalone;
    }
}

}  // namespace colat
