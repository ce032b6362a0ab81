#pragma once

#include <cmath>
#include <stdexcept>

namespace colat {

/// Log-distance path-loss parameters. rss_at_d0 is the received power at the
/// reference distance d0; with d0 = 1 m it is exactly the device's
/// registration value.
struct LdplParams {
    double eta = 2.1;        // path-loss exponent, > 0
    double d0 = 1.0;         // reference distance in meters, > 0
    double rss_at_d0 = 0.0;  // dBm
};

inline void validate(const LdplParams& p) {
    if (!(p.eta > 0.0)) throw std::invalid_argument("LdplParams: eta must be > 0");
    if (!(p.d0 > 0.0)) throw std::invalid_argument("LdplParams: d0 must be > 0");
}

/// Expected RSS at distance d.
inline double ldpl_rss(const LdplParams& p, double d) {
    validate(p);
    if (!(d > 0.0)) throw std::domain_error("ldpl_rss: distance must be > 0");
    return p.rss_at_d0 - 10.0 * p.eta * std::log10(d / p.d0);
}

/// Distance implied by an RSS reading; exact inverse of ldpl_rss.
inline double ldpl_distance(const LdplParams& p, double rss) {
    validate(p);
    return p.d0 * std::pow(10.0, (p.rss_at_d0 - rss) / (10.0 * p.eta));
}

}  // namespace colat
