#include "colat/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "colat/errors.hpp"
#include "colat/io.hpp"
#include "colat/rng.hpp"
#include "colat/stats.hpp"

namespace colat {

namespace {

constexpr int kInputs = 6;

double activate(Activation a, double x) {
    return a == Activation::Tansig ? std::tanh(x) : 1.0 / (1.0 + std::exp(-x));
}

// Derivative expressed through the activation value.
double activate_prime(Activation a, double value) {
    return a == Activation::Tansig ? 1.0 - value * value : value * (1.0 - value);
}

double normalize_value(const ValueRange& r, double v) {
    return 2.0 * (v - r.min) / (r.max - r.min) - 1.0;
}

double denormalize_value(const ValueRange& r, double y) {
    return (y + 1.0) * 0.5 * (r.max - r.min) + r.min;
}

}  // namespace

std::string to_string(Activation a) {
    return a == Activation::Tansig ? "tansig" : "logsig";
}

Activation activation_from_string(std::string_view s) {
    if (s == "tansig") return Activation::Tansig;
    if (s == "logsig") return Activation::Logsig;
    throw std::invalid_argument("unknown activation: " + std::string(s));
}

MlpArchitecture architecture_preset(std::string_view name) {
    if (name == "mlp1") return {{3}, Activation::Tansig, 50};
    if (name == "mlp2") return {{3}, Activation::Logsig, 50};
    if (name == "mlp3") return {{6, 3}, Activation::Tansig, 50};
    if (name == "mlp4") return {{12, 6}, Activation::Tansig, 50};
    throw std::invalid_argument("unknown architecture '" + std::string(name) +
                                "'; valid: mlp1, mlp2, mlp3, mlp4");
}

std::vector<std::string> architecture_preset_names() {
    return {"mlp1", "mlp2", "mlp3", "mlp4"};
}

std::vector<int> MlpModel::layer_sizes() const {
    std::vector<int> sizes{kInputs};
    for (int h : architecture.hidden_layer_sizes) sizes.push_back(h);
    sizes.push_back(1);
    return sizes;
}

MlpModel make_model(const MlpArchitecture& arch) {
    for (int h : arch.hidden_layer_sizes)
        if (h < 1) throw std::invalid_argument("hidden layer sizes must be positive");
    MlpModel m;
    m.architecture = arch;
    const auto sizes = m.layer_sizes();
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        m.weights.emplace_back(static_cast<std::size_t>(sizes[l + 1]) * sizes[l], 0.0);
        m.biases.emplace_back(static_cast<std::size_t>(sizes[l + 1]), 0.0);
    }
    for (auto& r : m.input_ranges) r = {-1.0, 1.0};
    m.output_range = {-1.0, 1.0};
    return m;
}

void validate_shapes(const MlpModel& model) {
    const auto sizes = model.layer_sizes();
    const std::size_t layers = sizes.size() - 1;
    if (model.weights.size() != layers || model.biases.size() != layers)
        throw ModelIntegrityError("model has " + std::to_string(model.weights.size()) +
                                  " weight layers, expected " + std::to_string(layers));
    for (std::size_t l = 0; l < layers; ++l) {
        const auto expect_w = static_cast<std::size_t>(sizes[l + 1]) * sizes[l];
        if (model.weights[l].size() != expect_w)
            throw ModelIntegrityError("layer " + std::to_string(l) + " weight count " +
                                      std::to_string(model.weights[l].size()) +
                                      " does not match shape " + std::to_string(sizes[l + 1]) +
                                      "x" + std::to_string(sizes[l]));
        if (model.biases[l].size() != static_cast<std::size_t>(sizes[l + 1]))
            throw ModelIntegrityError("layer " + std::to_string(l) + " bias count mismatch");
    }
    for (const auto& r : model.input_ranges)
        if (!(r.min < r.max))
            throw ModelIntegrityError("input range must have min < max");
    if (!(model.output_range.min < model.output_range.max))
        throw ModelIntegrityError("output range must have min < max");
}

std::array<double, 6> normalize(const MlpModel& model, const MlpFeatureVector& f) {
    const auto raw = f.as_array();
    std::array<double, 6> out{};
    for (int i = 0; i < kInputs; ++i) {
        const auto& r = model.input_ranges[static_cast<std::size_t>(i)];
        if (!(r.min < r.max))
            throw std::invalid_argument("normalize: input range not set");
        out[static_cast<std::size_t>(i)] =
            std::clamp(normalize_value(r, raw[static_cast<std::size_t>(i)]), -1.5, 1.5);
    }
    return out;
}

namespace {

// Forward pass on normalized input; activations[l] holds layer l's outputs
// (activations[0] is the input row).
double forward_normalized(const MlpModel& m, const std::array<double, 6>& x,
                          std::vector<std::vector<double>>* activations = nullptr) {
    const auto sizes = m.layer_sizes();
    std::vector<double> cur(x.begin(), x.end());
    if (activations) {
        activations->clear();
        activations->push_back(cur);
    }
    const std::size_t layers = m.weights.size();
    for (std::size_t l = 0; l < layers; ++l) {
        const int n_out = sizes[l + 1];
        const int n_in = sizes[l];
        std::vector<double> next(static_cast<std::size_t>(n_out));
        const bool output_layer = (l + 1 == layers);
        for (int o = 0; o < n_out; ++o) {
            double s = m.biases[l][static_cast<std::size_t>(o)];
            const double* wrow = m.weights[l].data() + static_cast<std::size_t>(o) * n_in;
            for (int i = 0; i < n_in; ++i) s += wrow[i] * cur[static_cast<std::size_t>(i)];
            next[static_cast<std::size_t>(o)] =
                output_layer ? s : activate(m.architecture.hidden_activation, s);
        }
        cur = std::move(next);
        if (activations) activations->push_back(cur);
    }
    return cur[0];
}

}  // namespace

double forward(const MlpModel& model, const MlpFeatureVector& f) {
    validate_shapes(model);
    const double y = forward_normalized(model, normalize(model, f));
    if (!std::isfinite(y))
        throw NumericalFailure("mlp forward produced a non-finite value");
    return denormalize_value(model.output_range, y);
}

std::vector<double> pack_parameters(const MlpModel& model) {
    std::vector<double> out;
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
        out.insert(out.end(), model.weights[l].begin(), model.weights[l].end());
        out.insert(out.end(), model.biases[l].begin(), model.biases[l].end());
    }
    return out;
}

void unpack_parameters(MlpModel& model, std::span<const double> params) {
    std::size_t pos = 0;
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
        for (auto& w : model.weights[l]) w = params[pos++];
        for (auto& b : model.biases[l]) b = params[pos++];
    }
    if (pos != params.size())
        throw std::invalid_argument("unpack_parameters: size mismatch");
}

double normalized_mse(const MlpModel& model,
                      std::span<const std::array<double, 6>> inputs,
                      std::span<const double> targets) {
    if (inputs.size() != targets.size() || inputs.empty())
        throw std::invalid_argument("normalized_mse: mismatched or empty inputs");
    double acc = 0.0;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        const double e = forward_normalized(model, inputs[i]) - targets[i];
        acc += e * e;
    }
    return acc / static_cast<double>(inputs.size());
}

std::vector<double> normalized_mse_gradient(const MlpModel& model,
                                            std::span<const std::array<double, 6>> inputs,
                                            std::span<const double> targets) {
    if (inputs.size() != targets.size() || inputs.empty())
        throw std::invalid_argument("normalized_mse_gradient: mismatched or empty inputs");
    const auto sizes = model.layer_sizes();
    const std::size_t layers = model.weights.size();

    std::vector<std::vector<double>> grad_w(layers), grad_b(layers);
    for (std::size_t l = 0; l < layers; ++l) {
        grad_w[l].assign(model.weights[l].size(), 0.0);
        grad_b[l].assign(model.biases[l].size(), 0.0);
    }

    std::vector<std::vector<double>> acts;
    for (std::size_t n = 0; n < inputs.size(); ++n) {
        const double y = forward_normalized(model, inputs[n], &acts);
        // dE/dy for E = mean of squared errors
        double scale = 2.0 * (y - targets[n]) / static_cast<double>(inputs.size());

        // delta starts at the (linear) output node and walks back through
        // the hidden stack.
        std::vector<double> delta{scale};
        for (std::size_t l = layers; l-- > 0;) {
            const int n_out = sizes[l + 1];
            const int n_in = sizes[l];
            const auto& below = acts[l];
            for (int o = 0; o < n_out; ++o) {
                const double d = delta[static_cast<std::size_t>(o)];
                grad_b[l][static_cast<std::size_t>(o)] += d;
                double* grow = grad_w[l].data() + static_cast<std::size_t>(o) * n_in;
                for (int i = 0; i < n_in; ++i) grow[i] += d * below[static_cast<std::size_t>(i)];
            }
            if (l == 0) break;
            std::vector<double> prev(static_cast<std::size_t>(n_in), 0.0);
            for (int i = 0; i < n_in; ++i) {
                double s = 0.0;
                for (int o = 0; o < n_out; ++o)
                    s += model.weights[l][static_cast<std::size_t>(o) * n_in + i] *
                         delta[static_cast<std::size_t>(o)];
                prev[static_cast<std::size_t>(i)] =
                    s * activate_prime(model.architecture.hidden_activation,
                                       below[static_cast<std::size_t>(i)]);
            }
            delta = std::move(prev);
        }
    }

    std::vector<double> out;
    for (std::size_t l = 0; l < layers; ++l) {
        out.insert(out.end(), grad_w[l].begin(), grad_w[l].end());
        out.insert(out.end(), grad_b[l].begin(), grad_b[l].end());
    }
    return out;
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

struct NormalizedData {
    std::vector<std::array<double, 6>> inputs;
    std::vector<double> targets;
};

NormalizedData normalize_set(const MlpModel& model, const TrainingSet& set) {
    NormalizedData out;
    out.inputs.reserve(set.size());
    out.targets.reserve(set.size());
    for (std::size_t i = 0; i < set.size(); ++i) {
        out.inputs.push_back(normalize(model, set.features[i]));
        out.targets.push_back(normalize_value(model.output_range, set.targets[i]));
    }
    return out;
}

}  // namespace

TrainingResult train_scg(const MlpArchitecture& arch, const TrainingSet& train,
                         const TrainingSet& validation, std::uint64_t seed) {
    if (train.features.empty())
        throw std::invalid_argument("train_scg: empty training set");
    if (train.features.size() != train.targets.size() ||
        validation.features.size() != validation.targets.size())
        throw std::invalid_argument("train_scg: feature/target size mismatch");
    if (arch.epochs < 1)
        throw std::invalid_argument("train_scg: epochs must be >= 1");

    MlpModel model = make_model(arch);

    // Ranges come from the training data.
    for (int f = 0; f < kInputs; ++f) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        for (const auto& row : train.features) {
            const double v = row.as_array()[static_cast<std::size_t>(f)];
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        if (!(lo < hi))
            throw TrainingDataError("feature " + std::to_string(f) +
                                    " is degenerate (min == max) in the training set");
        model.input_ranges[static_cast<std::size_t>(f)] = {lo, hi};
    }
    {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        for (double t : train.targets) {
            lo = std::min(lo, t);
            hi = std::max(hi, t);
        }
        // Constant targets are still learnable (bias-only); widen the range
        // so the normalization stays invertible.
        if (!(lo < hi)) {
            lo -= 0.5;
            hi += 0.5;
        }
        model.output_range = {lo, hi};
    }

    // Seeded init: uniform in [-0.5, 0.5] scaled by 1/sqrt(fan_in), zero biases.
    Rng rng(seed);
    const auto sizes = model.layer_sizes();
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
        const double scale = 1.0 / std::sqrt(static_cast<double>(sizes[l]));
        for (auto& w : model.weights[l]) w = rng.uniform(-0.5, 0.5) * scale;
    }

    const NormalizedData tr = normalize_set(model, train);
    const NormalizedData va = normalize_set(model, validation);
    const bool has_val = !va.inputs.empty();

    auto eval_mse = [&](const NormalizedData& d) {
        return normalized_mse(model, d.inputs, d.targets);
    };
    auto eval_grad = [&](std::span<const double> params) {
        MlpModel tmp = model;
        unpack_parameters(tmp, params);
        return normalized_mse_gradient(tmp, tr.inputs, tr.targets);
    };
    auto eval_cost = [&](std::span<const double> params) {
        MlpModel tmp = model;
        unpack_parameters(tmp, params);
        return normalized_mse(tmp, tr.inputs, tr.targets);
    };

    std::vector<double> w = pack_parameters(model);
    const std::size_t n_params = w.size();

    // Moller's scaled conjugate gradient, full batch. One epoch = one SCG
    // iteration.
    const double sigma0 = 5e-5;
    double lambda = 5e-7;
    double lambda_bar = 0.0;

    std::vector<double> grad = eval_grad(w);
    std::vector<double> r(n_params), p(n_params);
    for (std::size_t i = 0; i < n_params; ++i) r[i] = p[i] = -grad[i];
    double e_cur = eval_cost(w);
    bool success = true;
    double delta = 0.0;
    std::vector<double> s(n_params), step(n_params), r_new(n_params);

    TrainingResult result;
    result.initial_train_mse = e_cur;
    result.train_mse_curve.reserve(static_cast<std::size_t>(arch.epochs));

    unpack_parameters(model, w);
    double best_sel = has_val ? eval_mse(va) : e_cur;
    std::vector<double> best_w = w;

    for (int epoch = 1; epoch <= arch.epochs; ++epoch) {
        const double p2 = dot(p, p);
        const double r2 = dot(r, r);
        if (r2 > 0.0 && p2 > 0.0) {
            if (success) {
                const double sigma = sigma0 / std::sqrt(p2);
                for (std::size_t i = 0; i < n_params; ++i) step[i] = w[i] + sigma * p[i];
                const auto grad_shift = eval_grad(step);
                for (std::size_t i = 0; i < n_params; ++i)
                    s[i] = (grad_shift[i] - grad[i]) / sigma;
                delta = dot(p, s);
            }
            delta += (lambda - lambda_bar) * p2;
            if (delta <= 0.0) {  // make the curvature estimate positive definite
                lambda_bar = 2.0 * (lambda - delta / p2);
                delta = -delta + lambda * p2;
                lambda = lambda_bar;
            }
            const double mu = dot(p, r);
            const double alpha = mu / delta;
            for (std::size_t i = 0; i < n_params; ++i) step[i] = w[i] + alpha * p[i];
            const double e_new = eval_cost(step);
            const double comparison = 2.0 * delta * (e_cur - e_new) / (mu * mu);

            if (comparison >= 0.0) {
                w = step;
                grad = eval_grad(w);
                for (std::size_t i = 0; i < n_params; ++i) r_new[i] = -grad[i];
                lambda_bar = 0.0;
                success = true;
                if (static_cast<std::size_t>(epoch) % n_params == 0) {
                    p = r_new;
                } else {
                    const double beta = (dot(r_new, r_new) - dot(r_new, r)) / mu;
                    for (std::size_t i = 0; i < n_params; ++i)
                        p[i] = r_new[i] + beta * p[i];
                }
                r = r_new;
                e_cur = e_new;
                if (comparison >= 0.75) lambda *= 0.25;
            } else {
                lambda_bar = lambda;
                success = false;
            }
            if (comparison < 0.25) lambda += delta * (1.0 - comparison) / p2;
        }

        result.train_mse_curve.push_back(e_cur);
        unpack_parameters(model, w);
        double sel = e_cur;
        if (has_val) {
            const double val_mse = eval_mse(va);
            result.validation_mse_curve.push_back(val_mse);
            sel = val_mse;
        }
        if (sel < best_sel) {
            best_sel = sel;
            best_w = w;
        }
    }

    unpack_parameters(model, best_w);
    result.model = std::move(model);
    return result;
}

EvalMetrics evaluate(const MlpModel& model, const TrainingSet& data) {
    if (data.features.empty())
        throw std::invalid_argument("evaluate: empty data set");
    if (data.features.size() != data.targets.size())
        throw std::invalid_argument("evaluate: feature/target size mismatch");
    std::vector<double> pred(data.size());
    double sq = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        pred[i] = forward(model, data.features[i]);
        const double e = pred[i] - data.targets[i];
        sq += e * e;
    }
    EvalMetrics m;
    m.rmse = std::sqrt(sq / static_cast<double>(data.size()));
    m.r = pearson(pred, data.targets);
    return m;
}

std::vector<ArchitectureRanking> rank_architectures(const TrainingSet& train,
                                                    const TrainingSet& validation,
                                                    std::uint64_t seed) {
    std::vector<ArchitectureRanking> out;
    for (const auto& name : architecture_preset_names()) {
        const auto res = train_scg(architecture_preset(name), train, validation, seed);
        const auto m = evaluate(res.model, validation.size() ? validation : train);
        out.push_back({name, m.rmse, m.r});
    }
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        return a.validation_rmse < b.validation_rmse;
    });
    return out;
}

namespace {

constexpr int kModelVersion = 1;
constexpr const char* kModelFormat = "colat-mlp";

}  // namespace

void save_model(const std::filesystem::path& path, const MlpModel& model) {
    validate_shapes(model);
    nlohmann::json j;
    j["format"] = kModelFormat;
    j["version"] = kModelVersion;
    j["architecture"] = {
        {"hidden_layer_sizes", model.architecture.hidden_layer_sizes},
        {"hidden_activation", to_string(model.architecture.hidden_activation)},
        {"epochs", model.architecture.epochs},
    };
    auto ranges = nlohmann::json::array();
    for (const auto& r : model.input_ranges) ranges.push_back({r.min, r.max});
    j["input_ranges"] = std::move(ranges);
    j["output_range"] = {model.output_range.min, model.output_range.max};
    auto layers = nlohmann::json::array();
    for (std::size_t l = 0; l < model.weights.size(); ++l)
        layers.push_back({{"weights", model.weights[l]}, {"biases", model.biases[l]}});
    j["layers"] = std::move(layers);
    write_file_atomic(path, j.dump(2) + "\n");
}

MlpModel load_model(const std::filesystem::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw ModelFormatError("model file " + path.string() + ": " + e.what());
    }
    try {
        if (j.value("format", "") != kModelFormat)
            throw ModelFormatError("model file " + path.string() + ": unrecognized format tag");
        const int version = j.at("version").get<int>();
        if (version != kModelVersion)
            throw ModelVersionError("model file " + path.string() + ": version " +
                                    std::to_string(version) + ", expected " +
                                    std::to_string(kModelVersion));
        MlpModel m;
        const auto& arch = j.at("architecture");
        m.architecture.hidden_layer_sizes = arch.at("hidden_layer_sizes").get<std::vector<int>>();
        m.architecture.hidden_activation =
            activation_from_string(arch.at("hidden_activation").get<std::string>());
        m.architecture.epochs = arch.at("epochs").get<int>();
        const auto& ranges = j.at("input_ranges");
        if (ranges.size() != 6)
            throw ModelIntegrityError("model file " + path.string() + ": expected 6 input ranges");
        for (std::size_t i = 0; i < 6; ++i)
            m.input_ranges[i] = {ranges[i].at(0).get<double>(), ranges[i].at(1).get<double>()};
        m.output_range = {j.at("output_range").at(0).get<double>(),
                          j.at("output_range").at(1).get<double>()};
        for (const auto& layer : j.at("layers")) {
            m.weights.push_back(layer.at("weights").get<std::vector<double>>());
            m.biases.push_back(layer.at("biases").get<std::vector<double>>());
        }
        validate_shapes(m);
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw ModelFormatError("model file " + path.string() + ": " + e.what());
    }
}

}  // namespace colat
