#include "colat/evaluation.hpp"

#include <algorithm>
#include <cmath>

#include "colat/errors.hpp"
#include "colat/rng.hpp"
#include "colat/stats.hpp"

namespace colat {

namespace {

// Per-receiver sample lists, each sorted by time.
std::map<std::string, std::vector<RssSample>> split_by_receiver(std::span<const RssSample> log) {
    std::map<std::string, std::vector<RssSample>> out;
    for (const auto& s : log) out[s.rx].push_back(s);
    for (auto& [rx, samples] : out)
        std::stable_sort(samples.begin(), samples.end(),
                         [](const RssSample& a, const RssSample& b) { return a.t < b.t; });
    return out;
}

MeasurementWindow window_slice(const std::vector<RssSample>& sorted, const std::string& rx,
                               double t_end, double tw) {
    MeasurementWindow w{rx, tw, t_end, {}};
    const auto lo = std::partition_point(sorted.begin(), sorted.end(),
                                         [&](const RssSample& s) { return s.t <= t_end - tw; });
    const auto hi = std::partition_point(lo, sorted.end(),
                                         [&](const RssSample& s) { return s.t <= t_end; });
    w.samples.assign(lo, hi);
    return w;
}

int count_windows(std::span<const RssSample> log, double tw) {
    double t_max = 0.0;
    for (const auto& s : log) t_max = std::max(t_max, s.t);
    return static_cast<int>(std::floor(t_max / tw + 1e-9));
}

}  // namespace

std::vector<DeviceProfile> registered_profiles(const Scenario& scenario,
                                               const EvaluationOptions& opt) {
    if (scenario.anchors.anchors.empty())
        throw std::invalid_argument("registered_profiles: scenario has no anchors");
    const std::string ref =
        opt.reference_anchor.empty() ? scenario.anchors.anchors.front().id : opt.reference_anchor;
    std::vector<DeviceProfile> out;
    out.reserve(scenario.devices.size());
    for (const auto& d : scenario.devices) {
        DeviceProfile p = d;
        p.rss_at_1m = register_device(scenario, d.id, ref, opt.registration_samples);
        out.push_back(std::move(p));
    }
    return out;
}

EvaluationResult evaluate_log(std::span<const RssSample> log, const Scenario& scenario,
                              const MlpModel* model, const EvaluationOptions& opt) {
    EvaluationResult result;
    const auto profiles = registered_profiles(scenario, opt);
    const auto by_rx = split_by_receiver(log);

    for (const auto& [rx, _] : by_rx) {
        bool known = false;
        for (const auto& p : profiles) known = known || p.id == rx;
        if (!known)
            result.device_failures.emplace(rx, "receiver not in scenario; no registration value");
    }

    result.windows = count_windows(log, opt.pipeline.tw);
    SharedState shared;

    for (int k = 1; k <= result.windows; ++k) {
        const double t_end = static_cast<double>(k) * opt.pipeline.tw;

        // All stand-alone fixes first, so collaboration sees one consistent
        // snapshot for the window.
        std::map<std::string, PositionEstimate> fixes;
        std::map<std::string, MeasurementWindow> windows;
        for (const auto& profile : profiles) {
            const auto it = by_rx.find(profile.id);
            if (it == by_rx.end()) continue;
            MeasurementWindow w = window_slice(it->second, profile.id, t_end, opt.pipeline.tw);
            if (w.samples.empty()) continue;
            try {
                PositionEstimate fix =
                    standalone_position(w, scenario.anchors, profile, opt.pipeline);
                shared.publish(profile.id, fix, profile.rss_at_1m, t_end);
                fixes.emplace(profile.id, fix);
            } catch (const InsufficientAnchors&) {
                ++result.skipped_fixes;
            } catch (const NumericalFailure&) {
                ++result.skipped_fixes;
            }
            windows.emplace(profile.id, std::move(w));
        }

        for (const auto& profile : profiles) {
            const auto fix = fixes.find(profile.id);
            if (fix == fixes.end()) continue;
            const PositionEstimate& standalone = fix->second;

            PositionEstimate fused = standalone;
            std::optional<PositionEstimate> collaborative;
            if (model) {
                const auto neighbors = shared.snapshot(t_end, opt.pipeline.tw, profile.id);
                try {
                    collaborative = collaborative_position(windows.at(profile.id), neighbors,
                                                           standalone, *model, profile,
                                                           opt.pipeline);
                    fused = fuse_midpoint(standalone, *collaborative);
                } catch (const InsufficientNeighbors&) {
                } catch (const NumericalFailure&) {
                }
            }

            if (!profile.true_position) continue;
            const Point2D truth = *profile.true_position;
            auto record = [&](Phase phase, const PositionEstimate& est) {
                const double err = euclidean_distance(est.position, truth);
                result.errors.push_back({profile.id, k, phase, err});
                result.errors_by_phase[phase].push_back(err);
            };
            record(Phase::Standalone, standalone);
            if (collaborative) record(Phase::Collaborative, *collaborative);
            PositionEstimate fused_tagged = fused;
            fused_tagged.phase = Phase::Fused;
            record(Phase::Fused, fused_tagged);
        }
    }
    return result;
}

TrainingSet build_training_set(std::span<const RssSample> log, const Scenario& scenario,
                               const EvaluationOptions& opt) {
    TrainingSet set;
    const auto profiles = registered_profiles(scenario, opt);
    const auto by_rx = split_by_receiver(log);
    const int windows = count_windows(log, opt.pipeline.tw);

    std::map<std::string, const DeviceProfile*> profile_by_id;
    for (const auto& p : profiles) profile_by_id.emplace(p.id, &p);

    for (int k = 1; k <= windows; ++k) {
        const double t_end = static_cast<double>(k) * opt.pipeline.tw;

        std::map<std::string, PositionEstimate> fixes;
        std::map<std::string, MeasurementWindow> dev_windows;
        for (const auto& profile : profiles) {
            const auto it = by_rx.find(profile.id);
            if (it == by_rx.end()) continue;
            MeasurementWindow w = window_slice(it->second, profile.id, t_end, opt.pipeline.tw);
            if (w.samples.empty()) continue;
            try {
                fixes.emplace(profile.id,
                              standalone_position(w, scenario.anchors, profile, opt.pipeline));
            } catch (const InsufficientAnchors&) {
            } catch (const NumericalFailure&) {
            }
            dev_windows.emplace(profile.id, std::move(w));
        }

        for (const auto& [rx_id, rx_fix] : fixes) {
            const DeviceProfile& rx_profile = *profile_by_id.at(rx_id);

            // Aggregate the device-to-device readings this receiver heard.
            std::map<std::string, std::vector<double>> groups;
            for (const auto& s : dev_windows.at(rx_id).samples) {
                if (s.tx == rx_id) continue;
                if (!profile_by_id.contains(s.tx)) continue;
                groups[s.tx].push_back(s.rss);
            }

            for (auto& [tx_id, values] : groups) {
                const auto tx_fix = fixes.find(tx_id);
                if (tx_fix == fixes.end()) continue;
                const auto cleaned = iqr_filter(values);
                const double mean_rss = mean(cleaned);

                MlpFeatureVector f;
                f.rss = mean_rss;
                f.tx_x = tx_fix->second.position.x;
                f.tx_y = tx_fix->second.position.y;
                f.rx_x = rx_fix.position.x;
                f.rx_y = rx_fix.position.y;
                f.rss_1m_rx = rx_profile.rss_at_1m;

                const DeviceProfile& tx_profile = *profile_by_id.at(tx_id);
                set.features.push_back(f);
                set.targets.push_back(euclidean_distance(*rx_profile.true_position,
                                                         *tx_profile.true_position));
            }
        }
    }
    return set;
}

std::pair<TrainingSet, TrainingSet> split_training_set(const TrainingSet& all,
                                                       double train_fraction,
                                                       std::uint64_t seed) {
    if (all.features.size() != all.targets.size())
        throw std::invalid_argument("split_training_set: feature/target size mismatch");
    if (!(train_fraction > 0.0 && train_fraction <= 1.0))
        throw std::invalid_argument("split_training_set: fraction outside (0, 1]");

    std::vector<std::size_t> order(all.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(derive_seed(seed, 0x5917));  // split substream
    for (std::size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[rng.below(i)]);

    const auto n_train = static_cast<std::size_t>(
        std::round(train_fraction * static_cast<double>(all.size())));
    std::pair<TrainingSet, TrainingSet> out;
    for (std::size_t i = 0; i < order.size(); ++i) {
        auto& side = i < n_train ? out.first : out.second;
        side.features.push_back(all.features[order[i]]);
        side.targets.push_back(all.targets[order[i]]);
    }
    return out;
}

}  // namespace colat
