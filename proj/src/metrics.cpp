#include "colat/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "colat/errors.hpp"
#include "colat/io.hpp"
#include "colat/stats.hpp"

namespace colat {

MetricsReport compute_metrics(std::span<const double> errors, bool include_p70) {
    if (errors.empty()) throw std::domain_error("compute_metrics: empty input");
    std::vector<double> sorted(errors.begin(), errors.end());
    std::sort(sorted.begin(), sorted.end());

    MetricsReport m;
    m.count = errors.size();
    double sq = 0.0, sum = 0.0;
    for (double e : errors) {
        sq += e * e;
        sum += e;
    }
    m.rmse = std::sqrt(sq / static_cast<double>(errors.size()));
    m.mean = sum / static_cast<double>(errors.size());
    m.median = percentile_sorted(sorted, 50.0);
    m.p75 = percentile_sorted(sorted, 75.0);
    m.p90 = percentile_sorted(sorted, 90.0);
    if (include_p70) m.p70 = percentile_sorted(sorted, 70.0);
    return m;
}

RelativeDifference relative_difference(const MetricsReport& baseline,
                                       const MetricsReport& proposed) {
    auto diff = [](double b, double p) -> std::optional<double> {
        if (!(b > 0.0)) return std::nullopt;
        return 100.0 * (b - p) / b;
    };
    RelativeDifference d;
    d.rmse = diff(baseline.rmse, proposed.rmse);
    d.mean = diff(baseline.mean, proposed.mean);
    d.median = diff(baseline.median, proposed.median);
    d.p75 = diff(baseline.p75, proposed.p75);
    d.p90 = diff(baseline.p90, proposed.p90);
    return d;
}

std::vector<std::pair<double, double>> ecdf(std::span<const double> errors) {
    if (errors.empty()) throw std::domain_error("ecdf: empty input");
    std::vector<double> sorted(errors.begin(), errors.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<std::pair<double, double>> steps;
    const auto n = static_cast<double>(sorted.size());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double v = sorted[i];
        if (i + 1 < sorted.size() && sorted[i + 1] == v) continue;  // keep last duplicate
        steps.emplace_back(v, static_cast<double>(i + 1) / n);
    }
    steps.back().second = 1.0;
    return steps;
}

void write_metrics_csv(const std::filesystem::path& path, const PhasedMetrics& rows,
                       bool with_p70) {
    std::string out = "phase,count,rmse,mean,median,p75,p90";
    if (with_p70) out += ",p70";
    out += '\n';
    for (const auto& [phase, m] : rows) {
        out += phase;
        out += ',' + std::to_string(m.count);
        out += ',' + format_double(m.rmse);
        out += ',' + format_double(m.mean);
        out += ',' + format_double(m.median);
        out += ',' + format_double(m.p75);
        out += ',' + format_double(m.p90);
        if (with_p70) out += ',' + format_double(m.p70.value_or(0.0));
        out += '\n';
    }
    write_file_atomic(path, out);
}

PhasedMetrics read_metrics_csv(const std::filesystem::path& path) {
    const std::string content = read_file(path);
    PhasedMetrics rows;
    std::size_t pos = 0, line_no = 0;
    bool with_p70 = false;
    while (pos < content.size()) {
        std::size_t eol = content.find('\n', pos);
        if (eol == std::string::npos) eol = content.size();
        std::string_view line(content.data() + pos, eol - pos);
        pos = eol + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        if (line_no == 1) {
            if (line == "phase,count,rmse,mean,median,p75,p90")
                with_p70 = false;
            else if (line == "phase,count,rmse,mean,median,p75,p90,p70")
                with_p70 = true;
            else
                throw FormatError(path.string() +
                                  ":1: expected header 'phase,count,rmse,mean,median,p75,p90[,p70]'");
            continue;
        }
        const auto fields = split_csv_line(line);
        const std::size_t expected = with_p70 ? 8u : 7u;
        if (fields.size() != expected)
            throw FormatError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                              std::to_string(expected) + " fields");
        const std::string where = path.string() + ":" + std::to_string(line_no);
        MetricsReport m;
        m.count = static_cast<std::size_t>(parse_double(fields[1], where + ": count"));
        m.rmse = parse_double(fields[2], where + ": rmse");
        m.mean = parse_double(fields[3], where + ": mean");
        m.median = parse_double(fields[4], where + ": median");
        m.p75 = parse_double(fields[5], where + ": p75");
        m.p90 = parse_double(fields[6], where + ": p90");
        if (with_p70) m.p70 = parse_double(fields[7], where + ": p70");
        rows.emplace_back(std::string(fields[0]), m);
    }
    return rows;
}

void write_ecdf_csv(const std::filesystem::path& path,
                    std::span<const std::pair<double, double>> steps) {
    std::string out = "error_m,probability\n";
    for (const auto& [e, p] : steps)
        out += format_double(e) + ',' + format_double(p) + '\n';
    write_file_atomic(path, out);
}

void write_errors_csv(const std::filesystem::path& path, std::span<const ErrorSample> samples) {
    std::string out = "device,window,phase,error_m\n";
    for (const auto& s : samples) {
        out += s.device;
        out += ',' + std::to_string(s.window);
        out += ',' + to_string(s.phase);
        out += ',' + format_double(s.error);
        out += '\n';
    }
    write_file_atomic(path, out);
}

namespace {

std::string fixed2(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

}  // namespace

std::string format_metrics_table(const PhasedMetrics& rows) {
    std::string out;
    char line[160];
    std::snprintf(line, sizeof(line), "%-14s %8s %8s %8s %8s %8s %8s\n", "phase", "count",
                  "rmse", "mean", "median", "p75", "p90");
    out += line;
    for (const auto& [phase, m] : rows) {
        std::snprintf(line, sizeof(line), "%-14s %8zu %8.2f %8.2f %8.2f %8.2f %8.2f\n",
                      phase.c_str(), m.count, m.rmse, m.mean, m.median, m.p75, m.p90);
        out += line;
    }
    return out;
}

std::string format_comparison_table(const MetricsReport& baseline,
                                    const MetricsReport& proposed) {
    const RelativeDifference d = relative_difference(baseline, proposed);
    struct Row {
        const char* name;
        double b, p;
        std::optional<double> diff;
    };
    const Row rows[] = {
        {"RMSE", baseline.rmse, proposed.rmse, d.rmse},
        {"Mean", baseline.mean, proposed.mean, d.mean},
        {"Median", baseline.median, proposed.median, d.median},
        {"75th percentile", baseline.p75, proposed.p75, d.p75},
        {"90th percentile", baseline.p90, proposed.p90, d.p90},
    };
    std::string out;
    char line[160];
    std::snprintf(line, sizeof(line), "%-16s %12s %12s %10s\n", "Metric", "Baseline (m)",
                  "Proposed (m)", "Diff.");
    out += line;
    for (const auto& r : rows) {
        const std::string diff = r.diff ? (fixed2(*r.diff) + "%") : std::string("n/a");
        std::snprintf(line, sizeof(line), "%-16s %12.2f %12.2f %10s\n", r.name, r.b, r.p,
                      diff.c_str());
        out += line;
    }
    return out;
}

}  // namespace colat
