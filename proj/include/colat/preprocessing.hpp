#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace colat {

/// One received advertisement: rx heard tx at time t with the given strength.
struct RssSample {
    double t = 0.0;   // seconds
    std::string rx;   // receiving device
    std::string tx;   // transmitting anchor or device
    double rss = 0.0; // dBm
};

/// The samples one receiver collected over the trailing tw seconds, i.e. all
/// timestamps lie in (t_end - tw, t_end].
struct MeasurementWindow {
    std::string rx;
    double tw = 60.0;
    double t_end = 0.0;
    std::vector<RssSample> samples;
};

struct AggregatedRss {
    std::string tx;
    double mean_rss = 0.0;
    std::size_t sample_count = 0;
};

/// Partition the window's readings by transmitter. Keys are sorted, so the
/// downstream aggregation order is deterministic.
std::map<std::string, std::vector<double>> group_by_transmitter(const MeasurementWindow& w);

/// Keep the values between the 25th and 75th percentiles, bounds inclusive
/// (linear-interpolation percentile rule). Input order is preserved. Lists of
/// size <= 2 pass through unchanged; for larger lists the result is never
/// empty. Throws std::domain_error on empty input.
std::vector<double> iqr_filter(std::span<const double> values);

/// Arithmetic mean per transmitter group; every group must be nonempty.
std::vector<AggregatedRss> aggregate(const std::map<std::string, std::vector<double>>& groups);

/// Entries with mean_rss >= threshold, order preserved.
std::vector<AggregatedRss> select_strong(std::span<const AggregatedRss> agg, double threshold_dbm);

/// Trailing window ending at t_end: samples for rx with t in (t_end - tw, t_end].
MeasurementWindow make_window(std::span<const RssSample> log, const std::string& rx,
                              double t_end, double tw);

/// Consecutive tumbling windows (tw, 2*tw, ...) covering the log for one
/// receiver; the last partial window is dropped.
std::vector<MeasurementWindow> split_windows(std::span<const RssSample> log,
                                             const std::string& rx, double tw);

// Measurement log CSV: header "t,rx,tx,rss", one sample per row, timestamps
// in seconds, rss in dBm. Numbers round-trip exactly.
void write_log_csv(const std::filesystem::path& path, std::span<const RssSample> samples);
std::vector<RssSample> read_log_csv(const std::filesystem::path& path);

}  // namespace colat
