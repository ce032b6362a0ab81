#include "colat/preprocessing.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "colat/errors.hpp"
#include "colat/io.hpp"
#include "colat/stats.hpp"

namespace colat {

std::map<std::string, std::vector<double>> group_by_transmitter(const MeasurementWindow& w) {
    std::map<std::string, std::vector<double>> groups;
    for (const auto& s : w.samples) groups[s.tx].push_back(s.rss);
    return groups;
}

std::vector<double> iqr_filter(std::span<const double> values) {
    if (values.empty()) throw std::domain_error("iqr_filter: empty input");
    if (values.size() <= 2) return {values.begin(), values.end()};

    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const double q25 = percentile_sorted(sorted, 25.0);
    const double q75 = percentile_sorted(sorted, 75.0);

    std::vector<double> kept;
    kept.reserve(values.size());
    for (double v : values)
        if (v >= q25 && v <= q75) kept.push_back(v);
    return kept;
}

std::vector<AggregatedRss> aggregate(const std::map<std::string, std::vector<double>>& groups) {
    std::vector<AggregatedRss> out;
    out.reserve(groups.size());
    for (const auto& [tx, values] : groups) {
        if (values.empty())
            throw std::invalid_argument("aggregate: empty group for tx " + tx);
        out.push_back({tx, mean(values), values.size()});
    }
    return out;
}

std::vector<AggregatedRss> select_strong(std::span<const AggregatedRss> agg, double threshold_dbm) {
    std::vector<AggregatedRss> out;
    for (const auto& a : agg)
        if (a.mean_rss >= threshold_dbm) out.push_back(a);
    return out;
}

MeasurementWindow make_window(std::span<const RssSample> log, const std::string& rx,
                              double t_end, double tw) {
    if (!(tw > 0.0)) throw std::invalid_argument("make_window: tw must be > 0");
    MeasurementWindow w{rx, tw, t_end, {}};
    for (const auto& s : log)
        if (s.rx == rx && s.t > t_end - tw && s.t <= t_end) w.samples.push_back(s);
    return w;
}

std::vector<MeasurementWindow> split_windows(std::span<const RssSample> log,
                                             const std::string& rx, double tw) {
    if (!(tw > 0.0)) throw std::invalid_argument("split_windows: tw must be > 0");
    double t_max = 0.0;
    for (const auto& s : log) t_max = std::max(t_max, s.t);
    const int n = static_cast<int>(std::floor(t_max / tw + 1e-9));
    std::vector<MeasurementWindow> windows;
    windows.reserve(static_cast<std::size_t>(std::max(n, 0)));
    for (int k = 1; k <= n; ++k)
        windows.push_back(make_window(log, rx, static_cast<double>(k) * tw, tw));
    return windows;
}

void write_log_csv(const std::filesystem::path& path, std::span<const RssSample> samples) {
    std::string out = "t,rx,tx,rss\n";
    for (const auto& s : samples) {
        out += format_double(s.t);
        out += ',';
        out += s.rx;
        out += ',';
        out += s.tx;
        out += ',';
        out += format_double(s.rss);
        out += '\n';
    }
    write_file_atomic(path, out);
}

std::vector<RssSample> read_log_csv(const std::filesystem::path& path) {
    const std::string content = read_file(path);
    std::vector<RssSample> samples;
    std::size_t pos = 0;
    std::size_t line_no = 0;
    while (pos < content.size()) {
        std::size_t eol = content.find('\n', pos);
        if (eol == std::string::npos) eol = content.size();
        std::string_view line(content.data() + pos, eol - pos);
        pos = eol + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        if (line_no == 1) {
            if (line != "t,rx,tx,rss")
                throw FormatError(path.string() + ":1: expected header 't,rx,tx,rss'");
            continue;
        }
        const auto fields = split_csv_line(line);
        if (fields.size() != 4)
            throw FormatError(path.string() + ":" + std::to_string(line_no) +
                              ": expected 4 fields, got " + std::to_string(fields.size()));
        const std::string where = path.string() + ":" + std::to_string(line_no);
        RssSample s;
        s.t = parse_double(fields[0], where + ": t");
        s.rx = std::string(fields[1]);
        s.tx = std::string(fields[2]);
        s.rss = parse_double(fields[3], where + ": rss");
        if (!std::isfinite(s.rss))
            throw FormatError(where + ": rss must be finite");
        samples.push_back(std::move(s));
    }
    return samples;
}

}  // namespace colat
