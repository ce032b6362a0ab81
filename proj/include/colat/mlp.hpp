#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace colat {

enum class Activation { Tansig, Logsig };

std::string to_string(Activation a);
Activation activation_from_string(std::string_view s);

/// Feed-forward net shape: fixed 6 inputs, one linear output, configurable
/// hidden stack. Presets: mlp1 = [3] tansig, mlp2 = [3] logsig,
/// mlp3 = [6,3] tansig, mlp4 = [12,6] tansig.
struct MlpArchitecture {
    std::vector<int> hidden_layer_sizes{3};
    Activation hidden_activation = Activation::Tansig;
    int epochs = 50;
};

/// Throws std::invalid_argument listing the valid names on an unknown one.
MlpArchitecture architecture_preset(std::string_view name);
std::vector<std::string> architecture_preset_names();

/// The information one device pair exposes to the distance model: the pair's
/// aggregated RSS, both stand-alone position estimates, and the receiver's
/// 1 m calibration value.
struct MlpFeatureVector {
    double rss = 0.0;        // dBm, receiver <- transmitter
    double tx_x = 0.0;       // transmitter stand-alone estimate, meters
    double tx_y = 0.0;
    double rx_x = 0.0;       // receiver stand-alone estimate, meters
    double rx_y = 0.0;
    double rss_1m_rx = 0.0;  // dBm

    std::array<double, 6> as_array() const { return {rss, tx_x, tx_y, rx_x, rx_y, rss_1m_rx}; }
};

struct ValueRange {
    double min = 0.0;
    double max = 0.0;
};

struct MlpModel {
    MlpArchitecture architecture;
    // Layer l maps layer_sizes[l] inputs to layer_sizes[l+1] outputs;
    // weights[l] is row-major [out][in], biases[l] has one entry per output.
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> biases;
    std::array<ValueRange, 6> input_ranges{};
    ValueRange output_range;

    std::vector<int> layer_sizes() const;  // {6, hidden..., 1}
};

/// Zero-weight model with the given shape (used by tests and as the training
/// starting template).
MlpModel make_model(const MlpArchitecture& arch);

/// Shape consistency check; throws ModelIntegrityError on violation.
void validate_shapes(const MlpModel& model);

struct TrainingSet {
    std::vector<MlpFeatureVector> features;
    std::vector<double> targets;  // meters, >= 0

    std::size_t size() const { return features.size(); }
};

/// Per-feature affine map onto [-1, 1] over the stored training ranges;
/// out-of-range values are clamped to [-1.5, 1.5] after mapping.
std::array<double, 6> normalize(const MlpModel& model, const MlpFeatureVector& f);

/// Normalized input -> hidden stack -> linear output -> denormalized meters.
double forward(const MlpModel& model, const MlpFeatureVector& f);

// Flattened-parameter view used by the trainer and by gradient checks:
// layer order, weights row-major, then that layer's biases.
std::vector<double> pack_parameters(const MlpModel& model);
void unpack_parameters(MlpModel& model, std::span<const double> params);

/// Full-batch mean squared error of the normalized net over pre-normalized
/// rows, and its analytic gradient in pack order.
double normalized_mse(const MlpModel& model,
                      std::span<const std::array<double, 6>> inputs,
                      std::span<const double> targets);
std::vector<double> normalized_mse_gradient(const MlpModel& model,
                                            std::span<const std::array<double, 6>> inputs,
                                            std::span<const double> targets);

struct TrainingResult {
    MlpModel model;                          // weights with the best selection MSE seen
    double initial_train_mse = 0.0;          // at the seeded starting weights
    std::vector<double> train_mse_curve;     // one entry per epoch (normalized units)
    std::vector<double> validation_mse_curve;  // empty when no validation set
};

/// Full-batch scaled conjugate gradient over the MSE of normalized inputs and
/// targets, for architecture.epochs iterations. Input ranges come from the
/// training set; the returned weights are the ones with the lowest validation
/// MSE seen (training MSE when no validation set is given). Deterministic for
/// a given seed.
TrainingResult train_scg(const MlpArchitecture& arch, const TrainingSet& train,
                         const TrainingSet& validation, std::uint64_t seed);

struct EvalMetrics {
    double rmse = 0.0;  // meters
    double r = 0.0;     // Pearson correlation; NaN when undefined
};

EvalMetrics evaluate(const MlpModel& model, const TrainingSet& data);

struct ArchitectureRanking {
    std::string name;
    double validation_rmse = 0.0;
    double r = 0.0;
};

/// Train every preset on the same data and sort ascending by validation RMSE.
std::vector<ArchitectureRanking> rank_architectures(const TrainingSet& train,
                                                    const TrainingSet& validation,
                                                    std::uint64_t seed);

// Model container: versioned JSON holding architecture, ranges, weights and
// biases; byte-stable for identical models.
void save_model(const std::filesystem::path& path, const MlpModel& model);
MlpModel load_model(const std::filesystem::path& path);

}  // namespace colat
