#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "colat/errors.hpp"
#include "colat/mlp.hpp"
#include "colat/rng.hpp"
#include "oracles.hpp"

using namespace colat;

namespace {

MlpFeatureVector feature(double rss, double tx_x = 0, double tx_y = 0, double rx_x = 0,
                         double rx_y = 0, double rss_1m = 0) {
    return {rss, tx_x, tx_y, rx_x, rx_y, rss_1m};
}

// 6-1-1 net: unit weight on the first feature, identity ranges.
MlpModel degenerate_net(Activation act) {
    MlpModel m = make_model({{1}, act, 50});
    m.weights[0][0] = 1.0;
    m.weights[1][0] = 1.0;
    return m;
}

MlpModel random_model(const MlpArchitecture& arch, std::uint64_t seed) {
    MlpModel m = make_model(arch);
    Rng rng(seed);
    for (auto& layer : m.weights)
        for (auto& w : layer) w = rng.uniform(-1, 1);
    for (auto& layer : m.biases)
        for (auto& b : layer) b = rng.uniform(-0.5, 0.5);
    return m;
}

TrainingSet random_set(std::size_t n, std::uint64_t seed) {
    TrainingSet set;
    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        set.features.push_back(feature(rng.uniform(-95, -50), rng.uniform(0, 17),
                                       rng.uniform(0, 11), rng.uniform(0, 17),
                                       rng.uniform(0, 11), rng.uniform(-80, -60)));
        set.targets.push_back(rng.uniform(0.5, 18));
    }
    return set;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("architecture presets") {
    CHECK(architecture_preset("mlp1").hidden_layer_sizes == std::vector<int>{3});
    CHECK(architecture_preset("mlp1").hidden_activation == Activation::Tansig);
    CHECK(architecture_preset("mlp2").hidden_activation == Activation::Logsig);
    CHECK(architecture_preset("mlp3").hidden_layer_sizes == std::vector<int>{6, 3});
    CHECK(architecture_preset("mlp4").hidden_layer_sizes == std::vector<int>{12, 6});
    CHECK_THROWS_WITH_AS(architecture_preset("mlp9"),
                         "unknown architecture 'mlp9'; valid: mlp1, mlp2, mlp3, mlp4",
                         std::invalid_argument);
}

TEST_CASE("normalize maps range endpoints and midpoint") {
    MlpModel m = make_model(architecture_preset("mlp1"));
    m.input_ranges[0] = {-95.0, -55.0};
    CHECK(normalize(m, feature(-95))[0] == doctest::Approx(-1.0));
    CHECK(normalize(m, feature(-75))[0] == doctest::Approx(0.0));
    CHECK(normalize(m, feature(-55))[0] == doctest::Approx(1.0));

    // affine invertibility inside the range
    const double v = -63.7;
    const double n = normalize(m, feature(v))[0];
    CHECK((n + 1.0) / 2.0 * (-55.0 - -95.0) + -95.0 == doctest::Approx(v).epsilon(1e-12));

    // out-of-range values clamp after mapping
    CHECK(normalize(m, feature(-300))[0] == doctest::Approx(-1.5));
    CHECK(normalize(m, feature(100))[0] == doctest::Approx(1.5));
}

TEST_CASE("forward of the hand-built single-unit nets") {
    CHECK(forward(degenerate_net(Activation::Tansig), feature(0.5)) ==
          doctest::Approx(0.462117).epsilon(1e-5));
    CHECK(forward(degenerate_net(Activation::Logsig), feature(0.5)) ==
          doctest::Approx(0.622459).epsilon(1e-5));
}

TEST_CASE("forward of an all-zero net is the output range midpoint") {
    MlpModel m = make_model(architecture_preset("mlp1"));
    m.output_range = {0.0, 10.0};
    CHECK(forward(m, feature(0.3, 1, 2, 3, 4, -70)) == doctest::Approx(5.0));
}

TEST_CASE("forward detects shape violations") {
    MlpModel m = make_model(architecture_preset("mlp1"));
    m.weights[0].pop_back();
    CHECK_THROWS_AS(forward(m, feature(0.0)), ModelIntegrityError);
}

TEST_CASE("forward stays finite for in-range inputs") {
    Rng rng(5);
    for (int it = 0; it < 20; ++it) {
        const auto m = random_model(architecture_preset(it % 2 ? "mlp3" : "mlp4"),
                                    1000 + static_cast<std::uint64_t>(it));
        for (int s = 0; s < 20; ++s)
            CHECK(std::isfinite(forward(
                m, feature(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1),
                           rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)))));
    }
}

TEST_CASE("analytic gradient matches central differences") {
    for (const char* name : {"mlp1", "mlp3"}) {
        MlpModel model = random_model(architecture_preset(name), 42);
        std::vector<std::array<double, 6>> inputs;
        std::vector<double> targets;
        Rng rng(43);
        for (int i = 0; i < 10; ++i) {
            std::array<double, 6> row{};
            for (auto& v : row) v = rng.uniform(-1, 1);
            inputs.push_back(row);
            targets.push_back(rng.uniform(-1, 1));
        }

        const auto analytic = normalized_mse_gradient(model, inputs, targets);
        auto cost = [&](std::span<const double> params) {
            MlpModel tmp = model;
            unpack_parameters(tmp, params);
            return normalized_mse(tmp, inputs, targets);
        };
        const auto numeric = oracles::central_difference(cost, pack_parameters(model), 1e-5);

        REQUIRE(analytic.size() == numeric.size());
        double worst = 0.0;
        for (std::size_t i = 0; i < analytic.size(); ++i) {
            const double rel = std::abs(analytic[i] - numeric[i]) /
                               std::max({std::abs(analytic[i]), std::abs(numeric[i]), 1e-8});
            worst = std::max(worst, rel);
        }
        CHECK(worst < 1e-4);
    }
}

TEST_CASE("train_scg learns a constant target through the bias") {
    TrainingSet set = random_set(80, 7);
    for (auto& t : set.targets) t = 4.2;
    const auto result = train_scg(architecture_preset("mlp1"), set, {}, 11);
    CHECK(result.train_mse_curve.size() == 50);
    CHECK(result.train_mse_curve.back() <= result.initial_train_mse);
    for (std::size_t i = 0; i < 5; ++i)
        CHECK(std::abs(forward(result.model, set.features[i]) - 4.2) < 0.1);
}

TEST_CASE("train_scg improves a noise-free linear ranging task") {
    TrainingSet set = random_set(500, 19);
    for (std::size_t i = 0; i < set.size(); ++i)
        set.targets[i] = -0.3 * set.features[i].rss - 10.0;  // rss in [-95,-50] -> 5..18.5 m
    const auto result = train_scg(architecture_preset("mlp1"), set, {}, 3);
    const double initial_rmse = std::sqrt(result.initial_train_mse);
    const double final_rmse = std::sqrt(result.train_mse_curve.back());
    CHECK(final_rmse < 0.2 * initial_rmse);
}

TEST_CASE("train_scg never increases the training error") {
    const TrainingSet set = random_set(200, 23);
    const auto result = train_scg(architecture_preset("mlp3"), set, {}, 5);
    double prev = result.initial_train_mse;
    for (double e : result.train_mse_curve) {
        CHECK(e <= prev + 1e-15);
        prev = e;
    }
}

TEST_CASE("train_scg is deterministic per seed") {
    const TrainingSet set = random_set(120, 31);
    const auto a = train_scg(architecture_preset("mlp1"), set, {}, 77);
    const auto b = train_scg(architecture_preset("mlp1"), set, {}, 77);
    CHECK(a.train_mse_curve == b.train_mse_curve);
    CHECK(pack_parameters(a.model) == pack_parameters(b.model));
    const auto c = train_scg(architecture_preset("mlp1"), set, {}, 78);
    CHECK(a.train_mse_curve != c.train_mse_curve);
}

TEST_CASE("train_scg selects the best validation weights") {
    const TrainingSet train = random_set(150, 37);
    const TrainingSet val = random_set(60, 38);
    const auto result = train_scg(architecture_preset("mlp1"), train, val, 9);
    REQUIRE(result.validation_mse_curve.size() == 50);
    double best_epoch = result.validation_mse_curve.front();
    for (double v : result.validation_mse_curve) best_epoch = std::min(best_epoch, v);
    const auto m = evaluate(result.model, val);
    // the epoch curve is in normalized units; rescale to meters to compare
    const double half_span = (result.model.output_range.max - result.model.output_range.min) / 2;
    CHECK(m.rmse <= std::sqrt(best_epoch) * half_span * (1 + 1e-9));
}

TEST_CASE("train_scg rejects bad inputs") {
    TrainingSet set = random_set(50, 41);
    MlpArchitecture arch = architecture_preset("mlp1");
    arch.epochs = 0;
    CHECK_THROWS_AS(train_scg(arch, set, {}, 1), std::invalid_argument);
    CHECK_THROWS_AS(train_scg(architecture_preset("mlp1"), {}, {}, 1), std::invalid_argument);
    for (auto& f : set.features) f.rss_1m_rx = -70.0;  // degenerate feature
    CHECK_THROWS_AS(train_scg(architecture_preset("mlp1"), set, {}, 1), TrainingDataError);
}

TEST_CASE("evaluate agrees with the independent rmse and pearson oracles") {
    const auto model = random_model(architecture_preset("mlp1"), 51);
    TrainingSet data = random_set(100, 52);
    for (auto& f : data.features)
        f = feature(std::tanh(f.rss / 100.0), std::tanh(f.tx_x), std::tanh(f.tx_y),
                    std::tanh(f.rx_x), std::tanh(f.rx_y), std::tanh(f.rss_1m_rx / 100.0));

    std::vector<double> pred;
    for (const auto& f : data.features) pred.push_back(forward(model, f));

    SUBCASE("random targets") {
        const auto m = evaluate(model, data);
        CHECK(m.rmse == doctest::Approx(oracles::rmse(pred, data.targets)).epsilon(1e-9));
        CHECK(m.r == doctest::Approx(oracles::pearson(pred, data.targets)).epsilon(1e-9));
    }
    SUBCASE("perfect predictions") {
        data.targets = pred;
        const auto m = evaluate(model, data);
        CHECK(m.rmse == doctest::Approx(0.0));
        CHECK(m.r == doctest::Approx(1.0));
    }
    SUBCASE("constant offset") {
        data.targets = pred;
        for (auto& t : data.targets) t += 1.0;
        const auto m = evaluate(model, data);
        CHECK(m.rmse == doctest::Approx(1.0));
        CHECK(m.r == doctest::Approx(1.0));
    }
    SUBCASE("zero-variance targets leave r undefined") {
        for (auto& t : data.targets) t = 3.0;
        const auto m = evaluate(model, data);
        CHECK(std::isnan(m.r));
        CHECK(m.rmse == doctest::Approx(oracles::rmse(pred, data.targets)).epsilon(1e-9));
    }
}

TEST_CASE("model save/load round trip is bit-exact") {
    const auto path = std::filesystem::temp_directory_path() / "colat_test_model.json";
    TrainingSet set = random_set(60, 61);
    const auto result = train_scg(architecture_preset("mlp3"), set, {}, 13);
    save_model(path, result.model);
    const MlpModel loaded = load_model(path);

    CHECK(pack_parameters(loaded) == pack_parameters(result.model));
    CHECK(loaded.architecture.hidden_layer_sizes ==
          result.model.architecture.hidden_layer_sizes);
    CHECK(loaded.architecture.hidden_activation == result.model.architecture.hidden_activation);
    for (std::size_t i = 0; i < 6; ++i) {
        CHECK(loaded.input_ranges[i].min == result.model.input_ranges[i].min);
        CHECK(loaded.input_ranges[i].max == result.model.input_ranges[i].max);
    }
    CHECK(loaded.output_range.min == result.model.output_range.min);
    CHECK(loaded.output_range.max == result.model.output_range.max);

    // saving the loaded model reproduces the file byte for byte
    const auto path2 = std::filesystem::temp_directory_path() / "colat_test_model2.json";
    save_model(path2, loaded);
    CHECK(slurp(path) == slurp(path2));
    std::filesystem::remove(path);
    std::filesystem::remove(path2);
}

TEST_CASE("model loading rejects broken files") {
    const auto path = std::filesystem::temp_directory_path() / "colat_test_badmodel.json";
    TrainingSet set = random_set(40, 71);
    const auto result = train_scg(architecture_preset("mlp1"), set, {}, 17);
    save_model(path, result.model);
    std::string text = slurp(path);

    SUBCASE("wrong layer shape") {
        const std::string needle = "\"epochs\": 50";
        const auto pos = text.find(needle);
        REQUIRE(pos != std::string::npos);
        // claim a wider hidden layer than the stored matrices provide
        auto hidden = text.find("3", text.find("hidden_layer_sizes"));
        REQUIRE(hidden != std::string::npos);
        text[hidden] = '4';
        std::ofstream(path) << text;
        CHECK_THROWS_AS(load_model(path), ModelIntegrityError);
    }
    SUBCASE("truncated file") {
        std::ofstream(path) << text.substr(0, text.size() / 2);
        CHECK_THROWS_AS(load_model(path), ModelFormatError);
    }
    SUBCASE("version mismatch") {
        const auto pos = text.find("\"version\": 1");
        REQUIRE(pos != std::string::npos);
        text.replace(pos, 12, "\"version\": 9");
        std::ofstream(path) << text;
        CHECK_THROWS_AS(load_model(path), ModelVersionError);
    }
    std::filesystem::remove(path);
}

TEST_CASE("rank_architectures orders presets by validation rmse") {
    TrainingSet set = random_set(220, 81);
    for (std::size_t i = 0; i < set.size(); ++i)
        set.targets[i] = -0.25 * set.features[i].rss - 8.0;
    TrainingSet train{{set.features.begin(), set.features.begin() + 150},
                      {set.targets.begin(), set.targets.begin() + 150}};
    TrainingSet val{{set.features.begin() + 150, set.features.end()},
                    {set.targets.begin() + 150, set.targets.end()}};
    const auto ranking = rank_architectures(train, val, 3);
    REQUIRE(ranking.size() == 4);
    for (std::size_t i = 1; i < ranking.size(); ++i)
        CHECK(ranking[i - 1].validation_rmse <= ranking[i].validation_rmse);
}
