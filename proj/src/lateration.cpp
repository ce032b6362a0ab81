#include "colat/lateration.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "colat/errors.hpp"

namespace colat {

std::string to_string(Phase p) {
    switch (p) {
        case Phase::Standalone: return "standalone";
        case Phase::Collaborative: return "collaborative";
        case Phase::Fused: return "fused";
    }
    throw std::invalid_argument("unknown phase");
}

Phase phase_from_string(std::string_view s) {
    if (s == "standalone") return Phase::Standalone;
    if (s == "collaborative") return Phase::Collaborative;
    if (s == "fused") return Phase::Fused;
    throw std::invalid_argument("unknown phase: " + std::string(s));
}

std::vector<RangingObservation> default_weights(std::vector<RangingObservation> observations) {
    for (auto& o : observations) {
        if (!(o.distance > 0.0))
            throw std::domain_error("default_weights: distance must be > 0");
        o.weight = 1.0 / (o.distance * o.distance);
    }
    return observations;
}

namespace {

// Range from the iterate to an anchor, floored away from zero so the
// Jacobian row stays defined when the iterate sits on the anchor.
constexpr double kMinRange = 1e-9;

struct Objective {
    std::span<const RangingObservation> obs;
    std::span<const double> weights;  // normalized

    double sse(const Point2D& x) const {
        double f = 0.0;
        for (std::size_t i = 0; i < obs.size(); ++i) {
            const double r = euclidean_distance(x, obs[i].anchor.position) - obs[i].distance;
            f += weights[i] * r * r;
        }
        return f;
    }

    // Normal equations at x: A = J^T W J (2x2, symmetric), g = J^T W r.
    void normal_equations(const Point2D& x, double& a11, double& a12, double& a22,
                          double& g1, double& g2) const {
        a11 = a12 = a22 = g1 = g2 = 0.0;
        for (std::size_t i = 0; i < obs.size(); ++i) {
            const auto& p = obs[i].anchor.position;
            const double range = euclidean_distance(x, p);
            const double r = range - obs[i].distance;
            const double inv = 1.0 / std::max(range, kMinRange);
            const double jx = (x.x - p.x) * inv;
            const double jy = (x.y - p.y) * inv;
            const double w = weights[i];
            a11 += w * jx * jx;
            a12 += w * jx * jy;
            a22 += w * jy * jy;
            g1 += w * jx * r;
            g2 += w * jy * r;
        }
    }
};

}  // namespace

PositionEstimate laterate(std::span<const RangingObservation> observations,
                          const SolverConfig& cfg) {
    if (!(cfg.step_tolerance > 0.0))
        throw std::invalid_argument("laterate: step_tolerance must be > 0");
    if (cfg.max_iterations < 1)
        throw std::invalid_argument("laterate: max_iterations must be >= 1");
    if (!(cfg.initial_damping > 0.0) || !(cfg.damping_factor > 1.0))
        throw std::invalid_argument("laterate: bad damping configuration");

    std::size_t usable = 0;
    for (const auto& o : observations) {
        if (!(o.distance > 0.0))
            throw std::domain_error("laterate: distance must be > 0");
        if (o.weight < 0.0)
            throw std::invalid_argument("laterate: negative weight");
        if (o.weight > 0.0) ++usable;
    }
    if (usable < 3)
        throw InsufficientAnchors("laterate: need at least 3 positively weighted observations, have " +
                                  std::to_string(usable));

    bool all_identical = true;
    const Point2D first = observations.front().anchor.position;
    for (const auto& o : observations)
        if (o.weight > 0.0 && !(o.anchor.position == first)) all_identical = false;
    if (all_identical)
        throw InsufficientAnchors("laterate: anchor positions are all identical");

    // Normalizing the weights by their mean makes the iteration (and hence
    // the returned argmin) independent of the overall weight scale.
    std::vector<double> weights(observations.size());
    double wsum = 0.0;
    for (const auto& o : observations) wsum += o.weight;
    const double wmean = wsum / static_cast<double>(observations.size());
    for (std::size_t i = 0; i < observations.size(); ++i)
        weights[i] = observations[i].weight / wmean;

    std::vector<Point2D> pts(observations.size());
    std::vector<double> raw_w(observations.size());
    for (std::size_t i = 0; i < observations.size(); ++i) {
        pts[i] = observations[i].anchor.position;
        raw_w[i] = observations[i].weight;
    }
    const Point2D centroid = weighted_centroid(std::span<const Point2D>(pts), raw_w);

    const Objective obj{observations, weights};

    struct RunResult {
        Point2D position;
        double f = 0.0;
        int iterations = 0;
        bool converged = false;
    };

    // One iteration is one accepted update; rejected trials retry inside it
    // with increased damping. The damping floor keeps an accepted streak from
    // driving lambda so low that recovering from the next overshoot costs
    // many retries.
    constexpr double kMinDamping = 1e-12;

    auto run = [&](Point2D x) -> RunResult {
        double f = obj.sse(x);
        if (!std::isfinite(f)) throw NumericalFailure("laterate: non-finite objective");
        Point2D best = x;
        double best_f = f;
        double damping = cfg.initial_damping;
        bool converged = false;
        int iter = 0;
        for (; iter < cfg.max_iterations && !converged; ++iter) {
            double a11, a12, a22, g1, g2;
            obj.normal_equations(x, a11, a12, a22, g1, g2);

            while (true) {
                const double d11 = a11 + damping;
                const double d22 = a22 + damping;
                const double det = d11 * d22 - a12 * a12;
                if (!std::isfinite(det) || det == 0.0)
                    throw NumericalFailure("laterate: singular damped system");
                const double dx = (-g1 * d22 + g2 * a12) / det;
                const double dy = (-g2 * d11 + g1 * a12) / det;
                if (!std::isfinite(dx) || !std::isfinite(dy))
                    throw NumericalFailure("laterate: non-finite step");

                const double step_norm = std::hypot(dx, dy);
                const Point2D trial{x.x + dx, x.y + dy};
                const double f_trial = obj.sse(trial);
                if (!std::isfinite(f_trial))
                    throw NumericalFailure("laterate: non-finite objective at trial point");

                if (f_trial <= f) {
                    x = trial;
                    f = f_trial;
                    damping = std::max(damping / cfg.damping_factor, kMinDamping);
                    if (f < best_f) {
                        best = x;
                        best_f = f;
                    }
                    converged = step_norm < cfg.step_tolerance;
                    break;
                }
                damping *= cfg.damping_factor;
                // As damping grows the step shrinks toward zero; once it is
                // below tolerance there is no improving direction left.
                if (step_norm < cfg.step_tolerance) {
                    converged = true;
                    break;
                }
            }
        }
        return {best, best_f, iter, converged};
    };

    // The weighted range SSE is multimodal: near-collinear (dominant) anchors
    // produce a mirror-image basin across the anchor line, and the centroid
    // start can sit exactly on that line with a vanishing cross-line
    // gradient. Re-run from a few deterministic extra starts and keep the
    // lowest local minimum.
    double wsum_n = 0.0;
    Point2D mu{0.0, 0.0};
    for (std::size_t i = 0; i < observations.size(); ++i) {
        mu.x += weights[i] * pts[i].x;
        mu.y += weights[i] * pts[i].y;
        wsum_n += weights[i];
    }
    mu.x /= wsum_n;
    mu.y /= wsum_n;
    double cxx = 0.0, cxy = 0.0, cyy = 0.0;
    for (std::size_t i = 0; i < observations.size(); ++i) {
        cxx += weights[i] * (pts[i].x - mu.x) * (pts[i].x - mu.x);
        cxy += weights[i] * (pts[i].x - mu.x) * (pts[i].y - mu.y);
        cyy += weights[i] * (pts[i].y - mu.y) * (pts[i].y - mu.y);
    }
    const double theta = 0.5 * std::atan2(2.0 * cxy, cxx - cyy);
    const double ux = std::cos(theta), uy = std::sin(theta);
    auto mirror = [&](const Point2D& p) -> Point2D {
        const double vx = p.x - mu.x, vy = p.y - mu.y;
        const double along = vx * ux + vy * uy;
        return {mu.x + 2.0 * along * ux - vx, mu.y + 2.0 * along * uy - vy};
    };

    RunResult winner = run(centroid);
    auto consider = [&](const Point2D& start) {
        const RunResult r = run(start);
        if (r.f < winner.f) winner = r;
    };
    consider(mirror(centroid));
    consider(mirror(winner.position));
    // Off-line starts at the typical measured range break the symmetry when
    // every anchor (and hence every start above) sits on one line.
    {
        std::vector<double> ds;
        ds.reserve(observations.size());
        for (const auto& o : observations) ds.push_back(o.distance);
        std::nth_element(ds.begin(), ds.begin() + ds.size() / 2, ds.end());
        const double offset = std::max(1.0, ds[ds.size() / 2]);
        const double nx = -uy, ny = ux;
        consider({centroid.x + offset * nx, centroid.y + offset * ny});
        consider({centroid.x - offset * nx, centroid.y - offset * ny});
    }
    for (const auto& p : pts) consider(p);

    double wr2 = 0.0;
    for (std::size_t i = 0; i < observations.size(); ++i) {
        const double r = euclidean_distance(winner.position, observations[i].anchor.position) -
                         observations[i].distance;
        wr2 += raw_w[i] * r * r;
    }

    PositionEstimate est;
    est.position = winner.position;
    est.phase = Phase::Standalone;
    est.residual_rms = std::sqrt(wr2 / wsum);
    est.iterations = winner.iterations;
    est.converged = winner.converged;
    return est;
}

}  // namespace colat
