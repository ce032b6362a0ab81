#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "colat/metrics.hpp"
#include "colat/mlp.hpp"
#include "colat/pipeline.hpp"
#include "colat/simulator.hpp"

namespace colat {

struct EvaluationOptions {
    PipelineConfig pipeline;
    int registration_samples = 100;
    std::string reference_anchor;  // empty: first anchor in the scenario
};

/// Device profiles with registered (simulated) calibration values.
std::vector<DeviceProfile> registered_profiles(const Scenario& scenario,
                                               const EvaluationOptions& opt);

struct EvaluationResult {
    std::vector<ErrorSample> errors;  // every produced estimate with ground truth
    std::map<Phase, std::vector<double>> errors_by_phase;
    std::map<std::string, std::string> device_failures;  // device -> reason (run continued)
    int windows = 0;
    int skipped_fixes = 0;  // device-window pairs without a stand-alone fix
};

/// Replay a measurement log through the full pipeline: per tumbling window,
/// all stand-alone fixes are computed and published first, then each device
/// collaborates against that snapshot and fuses. Without a model the fused
/// estimate falls back to the stand-alone one. Ground truth comes from the
/// scenario.
EvaluationResult evaluate_log(std::span<const RssSample> log, const Scenario& scenario,
                              const MlpModel* model, const EvaluationOptions& opt);

/// Distance-model training rows from a simulated log: for every window and
/// every ordered device pair with stand-alone fixes, one row pairing the
/// aggregated pair RSS and both estimates with the true pairwise distance.
TrainingSet build_training_set(std::span<const RssSample> log, const Scenario& scenario,
                               const EvaluationOptions& opt);

/// Seeded 70/30 split used before training.
std::pair<TrainingSet, TrainingSet> split_training_set(const TrainingSet& all,
                                                       double train_fraction,
                                                       std::uint64_t seed);

}  // namespace colat
