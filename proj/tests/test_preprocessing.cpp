#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <vector>

#include "colat/errors.hpp"
#include "colat/preprocessing.hpp"
#include "colat/rng.hpp"
#include "oracles.hpp"

using namespace colat;

namespace {

MeasurementWindow window_of(std::vector<RssSample> samples) {
    MeasurementWindow w{"dev", 60.0, 60.0, std::move(samples)};
    return w;
}

}  // namespace

TEST_CASE("group_by_transmitter partitions samples") {
    const auto groups = group_by_transmitter(window_of({
        {1.0, "dev", "B1", -70},
        {2.0, "dev", "B2", -80},
        {3.0, "dev", "B1", -72},
    }));
    REQUIRE(groups.size() == 2);
    CHECK(groups.at("B1") == std::vector<double>{-70, -72});
    CHECK(groups.at("B2") == std::vector<double>{-80});
}

TEST_CASE("group_by_transmitter of empty window is empty") {
    CHECK(group_by_transmitter(window_of({})).empty());
}

TEST_CASE("group_by_transmitter conserves sample count") {
    Rng rng(11);
    std::vector<RssSample> samples;
    for (int i = 0; i < 1000; ++i)
        samples.push_back({static_cast<double>(i) * 0.01, "dev",
                           "B" + std::to_string(rng.below(17)), rng.uniform(-100, -40)});
    const auto groups = group_by_transmitter(window_of(samples));
    std::size_t total = 0;
    for (const auto& [tx, values] : groups) total += values.size();
    CHECK(total == 1000);
}

TEST_CASE("iqr_filter keeps constant lists intact") {
    const std::vector<double> v{-70, -70, -70, -70};
    CHECK(iqr_filter(v) == v);
}

TEST_CASE("iqr_filter drops the far outlier") {
    const std::vector<double> v{-60, -61, -62, -63, -100};
    const auto kept = iqr_filter(v);
    CHECK(kept == oracles::iqr_filter(v));
    CHECK(kept == std::vector<double>{-61, -62, -63});
}

TEST_CASE("iqr_filter passes tiny lists through") {
    CHECK(iqr_filter(std::vector<double>{-55.5}) == std::vector<double>{-55.5});
    CHECK(iqr_filter(std::vector<double>{-55.5, -91.0}) == std::vector<double>{-55.5, -91.0});
    CHECK_THROWS_AS(iqr_filter(std::vector<double>{}), std::domain_error);
}

TEST_CASE("iqr_filter matches the oracle and never empties") {
    Rng rng(13);
    for (int it = 0; it < 500; ++it) {
        const std::size_t n = 1 + rng.below(40);
        std::vector<double> v;
        for (std::size_t i = 0; i < n; ++i) v.push_back(rng.uniform(-100, -40));
        const auto kept = iqr_filter(v);
        CHECK(kept == oracles::iqr_filter(v));
        CHECK(!kept.empty());

        // sub-multiset of the input
        auto rest = v;
        for (double k : kept) {
            const auto pos = std::find(rest.begin(), rest.end(), k);
            REQUIRE(pos != rest.end());
            rest.erase(pos);
        }

        // a second pass removes nothing when the filtered list's own quartile
        // band already covers it
        if (kept.size() > 2) {
            const double q25 = oracles::percentile(kept, 25.0);
            const double q75 = oracles::percentile(kept, 75.0);
            bool bracketed = true;
            for (double k : kept) bracketed = bracketed && k >= q25 && k <= q75;
            if (bracketed) CHECK(iqr_filter(kept) == kept);
        }
    }
}

TEST_CASE("aggregate means and counts") {
    std::map<std::string, std::vector<double>> groups{{"B1", {-70, -72}}};
    auto agg = aggregate(groups);
    REQUIRE(agg.size() == 1);
    CHECK(agg[0].tx == "B1");
    CHECK(agg[0].mean_rss == doctest::Approx(-71.0));
    CHECK(agg[0].sample_count == 2);

    groups = {{"B1", {-70}}};
    agg = aggregate(groups);
    CHECK(agg[0].mean_rss == doctest::Approx(-70.0));
    CHECK(agg[0].sample_count == 1);

    CHECK_THROWS_AS(aggregate({{"B1", {}}}), std::invalid_argument);
}

TEST_CASE("aggregate matches a brute-force mean") {
    Rng rng(17);
    std::map<std::string, std::vector<double>> groups;
    for (int g = 0; g < 20; ++g) {
        std::vector<double> v;
        const std::size_t n = 1 + rng.below(50);
        for (std::size_t i = 0; i < n; ++i) v.push_back(rng.uniform(-100, -40));
        groups["B" + std::to_string(g)] = v;
    }
    for (const auto& a : aggregate(groups))
        CHECK(a.mean_rss == doctest::Approx(oracles::mean(groups.at(a.tx))).epsilon(1e-12));
}

TEST_CASE("select_strong boundary is inclusive and order-preserving") {
    const std::vector<AggregatedRss> agg{{"B1", -80, 1}, {"B2", -85, 1}, {"B3", -83, 1}};
    const auto strong = select_strong(agg, -83.0);
    REQUIRE(strong.size() == 2);
    CHECK(strong[0].tx == "B1");
    CHECK(strong[1].tx == "B3");

    CHECK(select_strong(std::vector<AggregatedRss>{}, -83.0).empty());
    CHECK(select_strong(agg, 1e9).empty());
    CHECK(select_strong(agg, -1e18).size() == 3);
}

TEST_CASE("pipeline determinism: identical windows give identical aggregates") {
    Rng rng(23);
    std::vector<RssSample> samples;
    for (int i = 0; i < 400; ++i)
        samples.push_back({static_cast<double>(i) * 0.1, "dev", "B" + std::to_string(rng.below(5)),
                           rng.uniform(-95, -50)});
    auto run = [&] {
        std::map<std::string, std::vector<double>> cleaned;
        for (auto& [tx, values] : group_by_transmitter(window_of(samples)))
            cleaned[tx] = iqr_filter(values);
        return aggregate(cleaned);
    };
    const auto a = run();
    const auto b = run();
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].tx == b[i].tx);
        CHECK(a[i].mean_rss == b[i].mean_rss);
        CHECK(a[i].sample_count == b[i].sample_count);
    }
}

TEST_CASE("window slicing covers the trailing interval only") {
    std::vector<RssSample> log;
    for (int i = 0; i <= 130; ++i)
        log.push_back({static_cast<double>(i), "dev", "B1", -70.0});
    log.push_back({5.0, "other", "B1", -60.0});

    const auto w = make_window(log, "dev", 120.0, 60.0);
    CHECK(w.samples.size() == 60);  // (60, 120]
    for (const auto& s : w.samples) {
        CHECK(s.rx == "dev");
        CHECK(s.t > 60.0);
        CHECK(s.t <= 120.0);
    }

    const auto windows = split_windows(log, "dev", 60.0);
    REQUIRE(windows.size() == 2);
    CHECK(windows[0].t_end == 60.0);
    CHECK(windows[1].t_end == 120.0);
}

TEST_CASE("log CSV round trip") {
    const auto path = std::filesystem::temp_directory_path() / "colat_test_log.csv";
    const std::vector<RssSample> samples{
        {0.25, "d1", "a1", -70.25},
        {0.5, "d2", "a1", -80.123456789},
        {1.0, "d1", "d2", -65.0},
    };
    write_log_csv(path, samples);
    const auto back = read_log_csv(path);
    REQUIRE(back.size() == samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        CHECK(back[i].t == samples[i].t);
        CHECK(back[i].rx == samples[i].rx);
        CHECK(back[i].tx == samples[i].tx);
        CHECK(back[i].rss == samples[i].rss);
    }
    std::filesystem::remove(path);
}

TEST_CASE("log CSV rejects malformed input") {
    const auto path = std::filesystem::temp_directory_path() / "colat_test_bad_log.csv";
    {
        std::ofstream out(path);
        out << "t,rx,tx,rss\n1.0,d1,a1\n";
    }
    CHECK_THROWS_AS(read_log_csv(path), FormatError);
    {
        std::ofstream out(path);
        out << "wrong,header\n";
    }
    CHECK_THROWS_AS(read_log_csv(path), FormatError);
    {
        std::ofstream out(path);
        out << "t,rx,tx,rss\nnotanumber,d1,a1,-70\n";
    }
    CHECK_THROWS_AS(read_log_csv(path), FormatError);
    std::filesystem::remove(path);
}
