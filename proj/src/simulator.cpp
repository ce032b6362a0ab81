#include "colat/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <stdexcept>

#include <json.hpp>

#include "colat/errors.hpp"
#include "colat/io.hpp"
#include "colat/rng.hpp"
#include "colat/rss_model.hpp"

namespace colat {

namespace {

// Substream tags so registration draws never shift the log sequence.
constexpr std::uint64_t kRegistrationStream = 1ull << 32;
constexpr std::uint64_t kLinkStream = 2ull << 32;

// Transceivers closer than this degenerate to a 1 mm link.
constexpr double kMinLinkDistance = 1e-3;

int orientation(const Point2D& a, const Point2D& b, const Point2D& c) {
    const double cross = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
    if (cross > 0.0) return 1;
    if (cross < 0.0) return -1;
    return 0;
}

bool on_segment(const Point2D& a, const Point2D& b, const Point2D& c) {
    return std::min(a.x, b.x) <= c.x && c.x <= std::max(a.x, b.x) &&
           std::min(a.y, b.y) <= c.y && c.y <= std::max(a.y, b.y);
}

}  // namespace

bool segments_intersect(const Point2D& p1, const Point2D& p2,
                        const Point2D& q1, const Point2D& q2) {
    const int o1 = orientation(p1, p2, q1);
    const int o2 = orientation(p1, p2, q2);
    const int o3 = orientation(q1, q2, p1);
    const int o4 = orientation(q1, q2, p2);
    if (o1 != o2 && o3 != o4) return true;
    if (o1 == 0 && on_segment(p1, p2, q1)) return true;
    if (o2 == 0 && on_segment(p1, p2, q2)) return true;
    if (o3 == 0 && on_segment(q1, q2, p1)) return true;
    if (o4 == 0 && on_segment(q1, q2, p2)) return true;
    return false;
}

double obstacle_loss_db(const Scenario& scenario, const Point2D& tx, const Point2D& rx) {
    double loss = 0.0;
    for (const auto& o : scenario.obstacles)
        if (segments_intersect(tx, rx, o.a, o.b)) loss += o.attenuation_db;
    return loss;
}

void validate(const Scenario& scenario) {
    if (!(scenario.width > 0.0 && scenario.height > 0.0))
        throw std::invalid_argument("scenario: area must be positive");
    auto inside = [&](const Point2D& p) {
        return p.x >= 0.0 && p.x <= scenario.width && p.y >= 0.0 && p.y <= scenario.height;
    };
    for (const auto& a : scenario.anchors.anchors) {
        if (!inside(a.position))
            throw std::invalid_argument("scenario: anchor " + a.id + " outside area");
        for (const auto& b : scenario.anchors.anchors)
            if (&a != &b && a.id == b.id)
                throw std::invalid_argument("scenario: duplicate anchor id " + a.id);
    }
    for (const auto& d : scenario.devices) {
        if (!d.true_position)
            throw std::invalid_argument("scenario: device " + d.id + " has no position");
        if (!inside(*d.true_position))
            throw std::invalid_argument("scenario: device " + d.id + " outside area");
        if (!rss_at_1m_plausible(d.rss_at_1m))
            std::cerr << "warning: device " << d.id << " rss_at_1m " << d.rss_at_1m
                      << " dBm outside the typical -100..-30 range\n";
        for (const auto& e : scenario.devices)
            if (&d != &e && d.id == e.id)
                throw std::invalid_argument("scenario: duplicate device id " + d.id);
    }
    for (const auto& o : scenario.obstacles)
        if (!(o.attenuation_db >= 0.0))
            throw std::invalid_argument("scenario: obstacle attenuation must be >= 0");
    if (!(scenario.anchor_tx_period > 0.0) || !(scenario.device_tx_period > 0.0))
        throw std::invalid_argument("scenario: transmit periods must be > 0");
    if (!(scenario.duration > 0.0))
        throw std::invalid_argument("scenario: duration must be > 0");
    if (!(scenario.channel.shadowing_sigma >= 0.0))
        throw std::invalid_argument("scenario: shadowing_sigma must be >= 0");
    if (!(scenario.channel.anchor_link.eta > 0.0) || !(scenario.channel.device_link.eta > 0.0))
        throw std::invalid_argument("scenario: path-loss exponent must be > 0");
}

double register_device(const Scenario& scenario, const std::string& device_id,
                       const std::string& reference_anchor_id, int n_samples) {
    if (n_samples < 1) throw std::invalid_argument("register_device: n_samples must be >= 1");
    if (!scenario.anchors.find(reference_anchor_id))
        throw std::invalid_argument("register_device: unknown reference anchor " +
                                    reference_anchor_id);
    std::size_t device_index = scenario.devices.size();
    for (std::size_t i = 0; i < scenario.devices.size(); ++i)
        if (scenario.devices[i].id == device_id) device_index = i;
    if (device_index == scenario.devices.size())
        throw std::invalid_argument("register_device: unknown device " + device_id);

    const auto& device = scenario.devices[device_index];
    const LdplParams ldpl{scenario.channel.anchor_link.eta, scenario.channel.anchor_link.d0,
                          device.rss_at_1m};
    const double base = ldpl_rss(ldpl, 1.0);  // 1 m line of sight

    Rng rng(derive_seed(scenario.seed, kRegistrationStream | device_index));
    double sum = 0.0;
    for (int i = 0; i < n_samples; ++i) {
        double v = base;
        if (scenario.channel.shadowing_sigma > 0.0)
            v += rng.normal(0.0, scenario.channel.shadowing_sigma);
        sum += v;
    }
    return sum / n_samples;
}

std::vector<RssSample> generate_log(const Scenario& scenario) {
    validate(scenario);

    struct Tx {
        const std::string* id;
        Point2D position;
        double period;
        bool is_anchor;
    };
    std::vector<Tx> txs;
    for (const auto& a : scenario.anchors.anchors)
        txs.push_back({&a.id, a.position, scenario.anchor_tx_period, true});
    for (const auto& d : scenario.devices)
        txs.push_back({&d.id, *d.true_position, scenario.device_tx_period, false});

    std::vector<RssSample> log;
    std::uint64_t link_index = 0;
    for (const auto& tx : txs) {
        for (const auto& rx : scenario.devices) {
            if (*tx.id == rx.id) continue;
            const std::uint64_t stream = kLinkStream | link_index++;
            const Point2D rx_pos = *rx.true_position;
            const double d = std::max(euclidean_distance(tx.position, rx_pos), kMinLinkDistance);
            const auto& link = tx.is_anchor ? scenario.channel.anchor_link
                                            : scenario.channel.device_link;
            const LdplParams ldpl{link.eta, link.d0, rx.rss_at_1m};
            const double static_rss = ldpl_rss(ldpl, d) - obstacle_loss_db(scenario, tx.position, rx_pos);

            const auto n = static_cast<std::uint64_t>(scenario.duration / tx.period + 1e-9);
            Rng rng(derive_seed(scenario.seed, stream));
            for (std::uint64_t k = 1; k <= n; ++k) {
                RssSample s;
                s.t = static_cast<double>(k) * tx.period;
                s.rx = rx.id;
                s.tx = *tx.id;
                s.rss = static_rss;
                if (scenario.channel.shadowing_sigma > 0.0)
                    s.rss += rng.normal(0.0, scenario.channel.shadowing_sigma);
                log.push_back(std::move(s));
            }
        }
    }

    std::sort(log.begin(), log.end(), [](const RssSample& a, const RssSample& b) {
        if (a.t != b.t) return a.t < b.t;
        if (a.tx != b.tx) return a.tx < b.tx;
        return a.rx < b.rx;
    });
    return log;
}

Scenario preset_scenario(int configuration) {
    if (configuration < 1 || configuration > 7)
        throw std::invalid_argument("preset_scenario: configuration must be 1..7");

    static constexpr double kAnchors[7][2] = {
        {0.0, 0.0},  {0.0, 10.68}, {3.78, 6.51},  {6.68, 10.64},
        {9.2, 3.7},  {14.2, 6.05}, {16.65, 10.65},
    };
    static constexpr double kDevicePositions[7][5][2] = {
        {{5.05, 3.7}, {6.55, 4.55}, {8.05, 0.7}, {5.05, 0.7}, {8.05, 3.7}},
        {{1.33, 6.1}, {4.49, 3.05}, {7.66, 0.1}, {1.33, 0.1}, {7.66, 6.1}},
        {{6.93, 1.3}, {9.93, 1.3}, {12.93, 1.3}, {9.03, 0.1}, {9.03, 3.7}},
        {{7.75, 6.1}, {11.75, 2.75}, {12.75, 0.1}, {7.75, 0.1}, {12.75, 6.1}},
        {{2.05, 9.7}, {3.6, 3.3}, {16.45, 2.5}, {2.05, 2.5}, {16.45, 9.7}},
        {{2.05, 9.7}, {8.7, 6.4}, {16.45, 2.5}, {2.05, 2.5}, {16.45, 9.7}},
        {{2.05, 9.7}, {14.66, 6.45}, {16.45, 2.5}, {2.05, 2.5}, {16.4, 9.7}},
    };
    // Heterogeneous receiver calibration presets (dBm at 1 m).
    static constexpr double kDeviceRss1m[5] = {-68.88, -74.75, -62.39, -62.99, -78.79};

    Scenario s;
    s.width = 16.7;
    s.height = 10.8;
    for (int i = 0; i < 7; ++i)
        s.anchors.anchors.push_back(
            {"a" + std::to_string(i + 1), {kAnchors[i][0], kAnchors[i][1]}});
    for (int i = 0; i < 5; ++i) {
        DeviceProfile d;
        d.id = "d" + std::to_string(i + 1);
        d.rss_at_1m = kDeviceRss1m[i];
        d.true_position = Point2D{kDevicePositions[configuration - 1][i][0],
                                  kDevicePositions[configuration - 1][i][1]};
        s.devices.push_back(std::move(d));
    }
    s.channel.shadowing_sigma = 4.0;
    s.anchor_tx_period = 0.25;
    s.device_tx_period = 0.1;
    s.duration = 60.0;
    s.seed = 0;
    return s;
}

std::vector<Obstacle> adverse_obstacles() {
    // Two near-full-height partitions and two long shelves; most anchor paths
    // into the work areas cross at least one of them.
    return {
        {{5.8, 0.0}, {5.8, 9.0}, 6.0},
        {{11.0, 1.8}, {11.0, 10.8}, 6.0},
        {{2.0, 5.0}, {9.0, 5.0}, 6.0},
        {{8.0, 7.8}, {16.7, 7.8}, 6.0},
    };
}

namespace {

const nlohmann::json& field(const nlohmann::json& j, const char* name,
                            const std::string& where) {
    const auto it = j.find(name);
    if (it == j.end())
        throw ScenarioFormatError(where + ": missing field '" + name + "'");
    return *it;
}

double num_field(const nlohmann::json& j, const char* name, const std::string& where) {
    const auto& f = field(j, name, where);
    if (!f.is_number())
        throw ScenarioFormatError(where + "." + name + ": expected a number");
    return f.get<double>();
}

std::string str_field(const nlohmann::json& j, const char* name, const std::string& where) {
    const auto& f = field(j, name, where);
    if (!f.is_string())
        throw ScenarioFormatError(where + "." + name + ": expected a string");
    return f.get<std::string>();
}

LinkModel link_field(const nlohmann::json& j, const char* name, const std::string& where) {
    LinkModel m;
    if (!j.contains(name)) return m;
    const auto& f = j.at(name);
    m.eta = num_field(f, "eta", where + "." + name);
    m.d0 = f.contains("d0") ? num_field(f, "d0", where + "." + name) : 1.0;
    return m;
}

}  // namespace

Scenario load_scenario(const std::filesystem::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw ScenarioFormatError("scenario file " + path.string() + ": " + e.what());
    }
    const std::string where = "scenario";
    Scenario s;
    const auto& area = field(j, "area", where);
    s.width = num_field(area, "width", where + ".area");
    s.height = num_field(area, "height", where + ".area");

    const auto& anchors = field(j, "anchors", where);
    if (!anchors.is_array())
        throw ScenarioFormatError(where + ".anchors: expected an array");
    for (std::size_t i = 0; i < anchors.size(); ++i) {
        const std::string aw = where + ".anchors[" + std::to_string(i) + "]";
        s.anchors.anchors.push_back({str_field(anchors[i], "id", aw),
                                     {num_field(anchors[i], "x", aw),
                                      num_field(anchors[i], "y", aw)}});
    }

    const auto& devices = field(j, "devices", where);
    if (!devices.is_array())
        throw ScenarioFormatError(where + ".devices: expected an array");
    for (std::size_t i = 0; i < devices.size(); ++i) {
        const std::string dw = where + ".devices[" + std::to_string(i) + "]";
        DeviceProfile d;
        d.id = str_field(devices[i], "id", dw);
        d.rss_at_1m = num_field(devices[i], "rss_at_1m", dw);
        d.true_position = Point2D{num_field(devices[i], "x", dw), num_field(devices[i], "y", dw)};
        s.devices.push_back(std::move(d));
    }

    if (j.contains("obstacles")) {
        const auto& obstacles = j.at("obstacles");
        if (!obstacles.is_array())
            throw ScenarioFormatError(where + ".obstacles: expected an array");
        for (std::size_t i = 0; i < obstacles.size(); ++i) {
            const std::string ow = where + ".obstacles[" + std::to_string(i) + "]";
            s.obstacles.push_back({{num_field(obstacles[i], "x1", ow), num_field(obstacles[i], "y1", ow)},
                                   {num_field(obstacles[i], "x2", ow), num_field(obstacles[i], "y2", ow)},
                                   num_field(obstacles[i], "attenuation_db", ow)});
        }
    }

    if (j.contains("channel")) {
        const auto& c = j.at("channel");
        s.channel.anchor_link = link_field(c, "anchor_link", where + ".channel");
        s.channel.device_link = link_field(c, "device_link", where + ".channel");
        s.channel.shadowing_sigma =
            c.contains("shadowing_sigma") ? num_field(c, "shadowing_sigma", where + ".channel") : 0.0;
    }

    if (j.contains("anchor_tx_period"))
        s.anchor_tx_period = num_field(j, "anchor_tx_period", where);
    if (j.contains("device_tx_period"))
        s.device_tx_period = num_field(j, "device_tx_period", where);
    if (j.contains("duration")) s.duration = num_field(j, "duration", where);
    if (j.contains("seed")) {
        if (!j.at("seed").is_number_unsigned() && !j.at("seed").is_number_integer())
            throw ScenarioFormatError(where + ".seed: expected an integer");
        s.seed = j.at("seed").get<std::uint64_t>();
    }

    try {
        validate(s);
    } catch (const std::invalid_argument& e) {
        throw ScenarioFormatError("scenario file " + path.string() + ": " + e.what());
    }
    return s;
}

void save_scenario(const std::filesystem::path& path, const Scenario& s) {
    validate(s);
    nlohmann::json j;
    j["area"] = {{"width", s.width}, {"height", s.height}};
    auto anchors = nlohmann::json::array();
    for (const auto& a : s.anchors.anchors)
        anchors.push_back({{"id", a.id}, {"x", a.position.x}, {"y", a.position.y}});
    j["anchors"] = std::move(anchors);
    auto devices = nlohmann::json::array();
    for (const auto& d : s.devices)
        devices.push_back({{"id", d.id},
                           {"rss_at_1m", d.rss_at_1m},
                           {"x", d.true_position->x},
                           {"y", d.true_position->y}});
    j["devices"] = std::move(devices);
    auto obstacles = nlohmann::json::array();
    for (const auto& o : s.obstacles)
        obstacles.push_back({{"x1", o.a.x},
                             {"y1", o.a.y},
                             {"x2", o.b.x},
                             {"y2", o.b.y},
                             {"attenuation_db", o.attenuation_db}});
    j["obstacles"] = std::move(obstacles);
    j["channel"] = {
        {"anchor_link", {{"eta", s.channel.anchor_link.eta}, {"d0", s.channel.anchor_link.d0}}},
        {"device_link", {{"eta", s.channel.device_link.eta}, {"d0", s.channel.device_link.d0}}},
        {"shadowing_sigma", s.channel.shadowing_sigma},
    };
    j["anchor_tx_period"] = s.anchor_tx_period;
    j["device_tx_period"] = s.device_tx_period;
    j["duration"] = s.duration;
    j["seed"] = s.seed;
    write_file_atomic(path, j.dump(2) + "\n");
}

}  // namespace colat
