#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace colat {

/// Planar coordinate in meters.
struct Point2D {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point2D&, const Point2D&) = default;
};

inline double euclidean_distance(const Point2D& a, const Point2D& b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

/// A fixed transmitter at a surveyed position.
struct Anchor {
    std::string id;
    Point2D position;
};

struct AnchorSet {
    std::vector<Anchor> anchors;  // ids unique

    const Anchor* find(std::string_view id) const {
        for (const auto& a : anchors)
            if (a.id == id) return &a;
        return nullptr;
    }
    std::size_t size() const { return anchors.size(); }
};

/// A mobile receiver. rss_at_1m is the calibration value recorded when the
/// device is registered (dBm at 1 m from a reference anchor); true_position
/// is available in simulation only.
struct DeviceProfile {
    std::string id;
    double rss_at_1m = 0.0;
    std::optional<Point2D> true_position;
};

// Calibration values outside this range usually indicate a bad registration.
inline bool rss_at_1m_plausible(double rss_dbm) {
    return rss_dbm >= -100.0 && rss_dbm <= -30.0;
}

/// Weighted mean of points; weights must be nonnegative with at least one
/// positive. Throws std::invalid_argument otherwise.
inline Point2D weighted_centroid(std::span<const Point2D> points,
                                 std::span<const double> weights) {
    if (points.size() != weights.size())
        throw std::invalid_argument("weighted_centroid: size mismatch");
    if (points.empty())
        throw std::invalid_argument("weighted_centroid: no points");
    double sx = 0.0, sy = 0.0, sw = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const double w = weights[i];
        if (!(w >= 0.0))
            throw std::invalid_argument("weighted_centroid: negative weight");
        sx += w * points[i].x;
        sy += w * points[i].y;
        sw += w;
    }
    if (sw <= 0.0)
        throw std::invalid_argument("weighted_centroid: all weights zero");
    return {sx / sw, sy / sw};
}

inline Point2D weighted_centroid(const AnchorSet& anchors,
                                 std::span<const double> weights) {
    std::vector<Point2D> pts;
    pts.reserve(anchors.anchors.size());
    for (const auto& a : anchors.anchors) pts.push_back(a.position);
    return weighted_centroid(std::span<const Point2D>(pts), weights);
}

}  // namespace colat
