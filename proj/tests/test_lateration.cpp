#include <doctest.h>

#include <cmath>
#include <vector>

#include "colat/errors.hpp"
#include "colat/lateration.hpp"
#include "colat/rng.hpp"
#include "oracles.hpp"

using namespace colat;

namespace {

RangingObservation obs(double x, double y, double d, double w = 0.0) {
    return {Anchor{"a", {x, y}}, d, w};
}

std::vector<RangingObservation> exact_observations(const std::vector<Point2D>& anchors,
                                                   const Point2D& truth) {
    std::vector<RangingObservation> out;
    for (std::size_t i = 0; i < anchors.size(); ++i)
        out.push_back({Anchor{"a" + std::to_string(i), anchors[i]},
                       euclidean_distance(anchors[i], truth), 0.0});
    return default_weights(std::move(out));
}

}  // namespace

TEST_CASE("default_weights inverse square distance") {
    auto w = default_weights({obs(0, 0, 1.0), obs(0, 0, 2.0), obs(0, 0, 9.58)});
    CHECK(w[0].weight == doctest::Approx(1.0));
    CHECK(w[1].weight == doctest::Approx(0.25));
    CHECK(w[2].weight == doctest::Approx(0.010896).epsilon(1e-4));
    CHECK_THROWS_AS(default_weights({obs(0, 0, 0.0)}), std::domain_error);
}

TEST_CASE("laterate recovers exact pythagorean geometry") {
    const auto o = exact_observations({{0, 0}, {10, 0}, {0, 10}}, {3, 4});
    CHECK(o[0].distance == doctest::Approx(5.0));
    CHECK(o[1].distance == doctest::Approx(8.06226).epsilon(1e-6));
    CHECK(o[2].distance == doctest::Approx(6.70820).epsilon(1e-6));
    const auto est = laterate(o);
    CHECK(euclidean_distance(est.position, {3, 4}) < 1e-6);
    CHECK(est.converged);
    CHECK(est.residual_rms < 1e-6);
}

TEST_CASE("laterate recovers the deployment triple") {
    // first three anchors of the builtin deployment, ranges from (2, 5)
    const auto o = exact_observations({{0, 0}, {0, 10.68}, {3.78, 6.51}}, {2, 5});
    CHECK(o[0].distance == doctest::Approx(5.38516).epsilon(1e-6));
    CHECK(o[1].distance == doctest::Approx(6.02186).epsilon(1e-5));
    CHECK(o[2].distance == doctest::Approx(2.33420).epsilon(1e-5));
    const auto est = laterate(o);
    CHECK(euclidean_distance(est.position, {2, 5}) < 1e-6);
}

TEST_CASE("laterate matches the grid-search argmin on a perturbed instance") {
    auto o = exact_observations({{0, 0}, {0, 10.68}, {3.78, 6.51}}, {2, 5});
    o[0].distance += 0.3;
    o[1].distance -= 0.3;
    o[2].distance += 0.3;
    o = default_weights(std::move(o));

    const auto est = laterate(o);
    const auto brute = oracles::grid_search_argmin(o, -1.0, 5.78, -1.0, 11.68, 0.01);
    CHECK(euclidean_distance(est.position, brute) < 0.02);
}

TEST_CASE("laterate zero-noise recovery on random geometries") {
    Rng rng(101);
    for (int it = 0; it < 100; ++it) {
        const int m = 3 + static_cast<int>(rng.below(5));
        std::vector<Point2D> anchors;
        for (int i = 0; i < m; ++i)
            anchors.push_back({rng.uniform(0, 17), rng.uniform(0, 11)});
        // reject nearly collinear sets: farthest point from the line through
        // the two most distant anchors must clear 0.5 m
        double best = 0.0;
        std::size_t ia = 0, ib = 1;
        for (std::size_t i = 0; i < anchors.size(); ++i)
            for (std::size_t j = i + 1; j < anchors.size(); ++j)
                if (euclidean_distance(anchors[i], anchors[j]) > best) {
                    best = euclidean_distance(anchors[i], anchors[j]);
                    ia = i;
                    ib = j;
                }
        double spread = 0.0;
        for (const auto& p : anchors) {
            const double cross = std::abs((anchors[ib].x - anchors[ia].x) * (p.y - anchors[ia].y) -
                                          (anchors[ib].y - anchors[ia].y) * (p.x - anchors[ia].x));
            spread = std::max(spread, cross / best);
        }
        if (spread < 0.5 || best < 1.0) {
            --it;
            continue;
        }
        const Point2D truth{rng.uniform(1, 16), rng.uniform(1, 10)};
        const auto est = laterate(exact_observations(anchors, truth));
        CHECK(euclidean_distance(est.position, truth) < 1e-6);
    }
}

TEST_CASE("laterate decreases the objective relative to the initial centroid") {
    Rng rng(55);
    for (int it = 0; it < 50; ++it) {
        std::vector<RangingObservation> o;
        for (int i = 0; i < 4; ++i) {
            const Point2D a{rng.uniform(0, 17), rng.uniform(0, 11)};
            o.push_back({Anchor{"a" + std::to_string(i), a},
                         std::max(0.1, rng.uniform(1, 12)), 0.0});
        }
        o = default_weights(std::move(o));
        std::vector<Point2D> pts;
        std::vector<double> ws;
        for (const auto& x : o) {
            pts.push_back(x.anchor.position);
            ws.push_back(x.weight);
        }
        const Point2D start = weighted_centroid(std::span<const Point2D>(pts), ws);
        const auto est = laterate(o);
        CHECK(oracles::weighted_sse(o, est.position) <=
              oracles::weighted_sse(o, start) + 1e-12);
    }
}

TEST_CASE("laterate is invariant to weight scaling") {
    auto base = exact_observations({{0, 0}, {12, 1}, {4, 9}, {9, 8}}, {5, 4});
    base[0].distance += 0.4;
    base[2].distance -= 0.25;
    const auto est1 = laterate(base);
    auto scaled = base;
    for (auto& o : scaled) o.weight *= 7361.25;
    const auto est2 = laterate(scaled);
    CHECK(euclidean_distance(est1.position, est2.position) < 1e-9);
}

TEST_CASE("analytic jacobian of the range model matches central differences") {
    Rng rng(77);
    for (int it = 0; it < 50; ++it) {
        const Point2D a{rng.uniform(0, 17), rng.uniform(0, 11)};
        const Point2D x{rng.uniform(0, 17), rng.uniform(0, 11)};
        if (euclidean_distance(a, x) < 0.05) continue;
        const double g = euclidean_distance(x, a);
        const double jx = (x.x - a.x) / g;
        const double jy = (x.y - a.y) / g;
        const double h = 1e-6;
        const double fdx = (euclidean_distance({x.x + h, x.y}, a) -
                            euclidean_distance({x.x - h, x.y}, a)) / (2 * h);
        const double fdy = (euclidean_distance({x.x, x.y + h}, a) -
                            euclidean_distance({x.x, x.y - h}, a)) / (2 * h);
        CHECK(std::abs(jx - fdx) / std::max(1e-9, std::abs(fdx)) < 1e-5);
        CHECK(std::abs(jy - fdy) / std::max(1e-9, std::abs(fdy)) < 1e-5);
    }
}

TEST_CASE("laterate error contracts") {
    CHECK_THROWS_AS(laterate(std::vector<RangingObservation>{obs(0, 0, 1, 1), obs(1, 0, 1, 1)}),
                    InsufficientAnchors);
    // three observations but only two carry weight
    CHECK_THROWS_AS(laterate(std::vector<RangingObservation>{obs(0, 0, 1, 1), obs(1, 0, 1, 1),
                                                             obs(0, 1, 1, 0)}),
                    InsufficientAnchors);
    // all anchors in the same spot
    CHECK_THROWS_AS(laterate(std::vector<RangingObservation>{obs(2, 2, 1, 1), obs(2, 2, 2, 1),
                                                             obs(2, 2, 3, 1)}),
                    InsufficientAnchors);
    CHECK_THROWS_AS(laterate(std::vector<RangingObservation>{obs(0, 0, -1, 1), obs(1, 0, 1, 1),
                                                             obs(0, 1, 1, 1)}),
                    std::domain_error);
}

TEST_CASE("laterate flags non-finite arithmetic as a numerical failure") {
    // squaring these residuals overflows to infinity
    CHECK_THROWS_AS(laterate(std::vector<RangingObservation>{
                        obs(0, 0, 1e300, 1), obs(1, 0, 1e300, 1), obs(0, 1, 1e300, 1)}),
                    NumericalFailure);
}

TEST_CASE("laterate accepts collinear anchors (mirror ambiguity tolerated)") {
    // anchors on the x axis; either mirror solution minimizes
    const std::vector<Point2D> anchors{{0, 0}, {5, 0}, {10, 0}};
    const Point2D truth{4, 3};
    const auto est = laterate(exact_observations(anchors, truth));
    const double err_up = euclidean_distance(est.position, truth);
    const double err_down = euclidean_distance(est.position, {4, -3});
    CHECK(std::min(err_up, err_down) < 1e-5);
}
