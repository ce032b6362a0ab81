#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "colat/lateration.hpp"

namespace colat {

/// One positioning error: estimate vs ground truth for a device in a window.
struct ErrorSample {
    std::string device;
    int window = 0;
    Phase phase = Phase::Standalone;
    double error = 0.0;  // meters, >= 0
};

struct MetricsReport {
    std::size_t count = 0;
    double rmse = 0.0;
    double mean = 0.0;
    double median = 0.0;
    double p75 = 0.0;
    double p90 = 0.0;
    std::optional<double> p70;  // populated on request only
};

/// Summary statistics over an error list; percentiles use the same
/// linear-interpolation rule as the preprocessing quartiles.
MetricsReport compute_metrics(std::span<const double> errors, bool include_p70 = false);

/// Signed percentage change per metric, positive = improvement
/// (100 * (baseline - proposed) / baseline). Metrics with a nonpositive
/// baseline are reported as nullopt.
struct RelativeDifference {
    std::optional<double> rmse, mean, median, p75, p90;
};
RelativeDifference relative_difference(const MetricsReport& baseline,
                                       const MetricsReport& proposed);

/// Empirical CDF as a right-continuous step function: one (value, cumulative
/// probability) pair per distinct error, last probability exactly 1.
std::vector<std::pair<double, double>> ecdf(std::span<const double> errors);

// CSV surfaces.
// Metrics: header "phase,count,rmse,mean,median,p75,p90[,p70]".
// ECDF:    header "error_m,probability".
// Errors:  header "device,window,phase,error_m".
using PhasedMetrics = std::vector<std::pair<std::string, MetricsReport>>;
void write_metrics_csv(const std::filesystem::path& path, const PhasedMetrics& rows,
                       bool with_p70 = false);
PhasedMetrics read_metrics_csv(const std::filesystem::path& path);
void write_ecdf_csv(const std::filesystem::path& path,
                    std::span<const std::pair<double, double>> steps);
void write_errors_csv(const std::filesystem::path& path, std::span<const ErrorSample> samples);

/// Aligned metrics table for terminal display.
std::string format_metrics_table(const PhasedMetrics& rows);

/// Side-by-side table of two reports with a signed Diff column.
std::string format_comparison_table(const MetricsReport& baseline,
                                    const MetricsReport& proposed);

}  // namespace colat
