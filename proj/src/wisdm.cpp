#include "har/wisdm.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "har/error.hpp"

namespace har {

namespace {

std::string_view trim(std::string_view s) {
    const auto not_space = [](char c) { return c != ' ' && c != '\t' && c != '\r' && c != '\n'; };
    const auto first = std::find_if(s.begin(), s.end(), not_space);
    const auto last = std::find_if(s.rbegin(), s.rend(), not_space).base();
    return first < last ? std::string_view(first, static_cast<std::size_t>(last - first)) : std::string_view{};
}

template <class T>
bool parse_number(std::string_view text, T& out) {
    text = trim(text);
    if (text.empty()) return false;
    if (text.front() == '+') text.remove_prefix(1);
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    return ec == std::errc{} && ptr == text.data() + text.size();
}

std::uint64_t fnv1a(std::string_view bytes) {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

} // namespace

std::string_view reject_reason_name(RejectReason reason) noexcept {
    switch (reason) {
        case RejectReason::EmptyLine: return "empty_line";
        case RejectReason::WrongFieldCount: return "wrong_field_count";
        case RejectReason::UnknownActivity: return "unknown_activity";
        case RejectReason::NonNumericValue: return "non_numeric_value";
        case RejectReason::NonFiniteValue: return "non_finite_value";
    }
    return "unknown";
}

ParseResult parse_line(std::string_view line) {
    line = trim(line);
    if (!line.empty() && line.back() == ';') line = trim(line.substr(0, line.size() - 1));
    if (line.empty()) return RejectReason::EmptyLine;

    std::array<std::string_view, 6> fields;
    std::size_t count = 0;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        const std::string_view field =
            line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
        if (count == fields.size()) return RejectReason::WrongFieldCount;
        fields[count++] = field;
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    if (count != fields.size()) return RejectReason::WrongFieldCount;

    Sample s;
    if (!parse_number(fields[0], s.user_id) || s.user_id == 0) return RejectReason::NonNumericValue;
    const auto activity = parse_activity(trim(fields[1]));
    if (!activity) return RejectReason::UnknownActivity;
    s.activity = *activity;
    if (!parse_number(fields[2], s.timestamp)) return RejectReason::NonNumericValue;

    std::array<double, 3> axes{};
    for (std::size_t i = 0; i < 3; ++i) {
        if (!parse_number(fields[3 + i], axes[i])) return RejectReason::NonNumericValue;
    }
    for (double v : axes) {
        if (!std::isfinite(v)) return RejectReason::NonFiniteValue;
    }
    s.x = axes[0];
    s.y = axes[1];
    s.z = axes[2];
    return s;
}

std::string format_line(const Sample& sample) {
    std::ostringstream out;
    out << sample.user_id << ',' << activity_name(sample.activity) << ',' << sample.timestamp << ','
        << std::setprecision(17) << sample.x << ',' << sample.y << ',' << sample.z << ';';
    return out.str();
}

Dataset parse_dataset(std::string_view text) {
    Dataset ds;
    ds.report.checksum = fnv1a(text);
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        const std::string_view line = text.substr(start, end - start);
        start = end + 1;
        if (trim(line).empty()) continue;

        const ParseResult result = parse_line(line);
        if (const auto* sample = std::get_if<Sample>(&result)) {
            ds.samples.push_back(*sample);
            ++ds.report.accepted;
            ++ds.report.per_class_counts[class_index(sample->activity)];
        } else {
            ++ds.report.rejected;
            ++ds.report.rejection_reasons[std::get<RejectReason>(result)];
        }
    }
    return ds;
}

Dataset load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open data file: " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    if (in.bad()) throw IoError("error reading data file: " + path.string());
    return parse_dataset(buffer.view());
}

std::vector<ClassSummary> class_stats(std::span<const Sample> samples) {
    struct Accumulator {
        std::size_t n = 0;
        std::array<double, 3> sum{};
        std::array<double, 3> sum_sq{};
        std::array<double, 3> min{};
        std::array<double, 3> max{};
        std::array<double, 3> spacing_sum{};
        std::array<std::size_t, 3> intervals{};
    };
    std::array<Accumulator, kNumClasses> acc;

    const auto axis_value = [](const Sample& s, std::size_t axis) {
        return axis == 0 ? s.x : axis == 1 ? s.y : s.z;
    };

    std::size_t run_start = 0;
    while (run_start < samples.size()) {
        const ActivityLabel label = samples[run_start].activity;
        std::size_t run_end = run_start;
        while (run_end < samples.size() && samples[run_end].activity == label) ++run_end;
        const auto run = samples.subspan(run_start, run_end - run_start);
        Accumulator& a = acc[class_index(label)];

        for (std::size_t axis = 0; axis < 3; ++axis) {
            double run_sum = 0.0;
            double run_sum_sq = 0.0;
            for (const Sample& s : run) {
                const double v = axis_value(s, axis);
                run_sum += v;
                run_sum_sq += v * v;
                if (a.n == 0 && &s == &run.front()) {
                    a.min[axis] = v;
                    a.max[axis] = v;
                }
                a.min[axis] = std::min(a.min[axis], v);
                a.max[axis] = std::max(a.max[axis], v);
            }
            a.sum[axis] += run_sum;
            a.sum_sq[axis] += run_sum_sq;

            const double n = static_cast<double>(run.size());
            const double mean = run_sum / n;
            const double var = std::max(0.0, run_sum_sq / n - mean * mean);
            const double threshold = mean + std::sqrt(var);
            std::size_t last_peak = 0;
            bool have_peak = false;
            for (std::size_t i = 1; i + 1 < run.size(); ++i) {
                const double v = axis_value(run[i], axis);
                if (v > threshold && v > axis_value(run[i - 1], axis) && v >= axis_value(run[i + 1], axis)) {
                    if (have_peak) {
                        a.spacing_sum[axis] += static_cast<double>(i - last_peak);
                        ++a.intervals[axis];
                    }
                    last_peak = i;
                    have_peak = true;
                }
            }
        }
        a.n += run.size();
        run_start = run_end;
    }

    std::vector<ClassSummary> out;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        const Accumulator& a = acc[c];
        if (a.n < 2) continue;
        ClassSummary cs{kAllActivities[c], a.n, {}};
        const double n = static_cast<double>(a.n);
        for (std::size_t axis = 0; axis < 3; ++axis) {
            AxisSummary& s = cs.axes[axis];
            s.mean = std::clamp(a.sum[axis] / n, a.min[axis], a.max[axis]);
            s.stddev = std::sqrt(std::max(0.0, a.sum_sq[axis] / n - s.mean * s.mean));
            s.min = a.min[axis];
            s.max = a.max[axis];
            s.peak_intervals = a.intervals[axis];
            s.peak_spacing = a.intervals[axis] == 0 ? 0.0 : a.spacing_sum[axis] / static_cast<double>(a.intervals[axis]);
        }
        out.push_back(cs);
    }
    return out;
}

void write_report_text(std::ostream& out, const IngestReport& report) {
    out << "accepted: " << report.accepted << '\n' << "rejected: " << report.rejected << '\n';
    for (const auto& [reason, count] : report.rejection_reasons) {
        out << "  " << reject_reason_name(reason) << ": " << count << '\n';
    }
    out << "per class:\n";
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        out << "  " << std::left << std::setw(11) << kActivityNames[c] << std::right << ' '
            << report.per_class_counts[c] << '\n';
    }
    out << "checksum (fnv1a64): " << std::hex << std::setw(16) << std::setfill('0') << report.checksum
        << std::dec << std::setfill(' ') << '\n';
}

void write_stats_table(std::ostream& out, std::span<const ClassSummary> stats) {
    out << std::left << std::setw(11) << "class" << std::setw(5) << "axis" << std::right;
    for (const char* h : {"mean", "std", "min", "max", "peak_gap"}) out << std::setw(10) << h;
    out << '\n';
    out << std::fixed << std::setprecision(3);
    for (const ClassSummary& cs : stats) {
        for (std::size_t axis = 0; axis < 3; ++axis) {
            const AxisSummary& s = cs.axes[axis];
            out << std::left << std::setw(11) << activity_name(cs.activity) << std::setw(5) << kAxisNames[axis]
                << std::right << std::setw(10) << s.mean << std::setw(10) << s.stddev << std::setw(10) << s.min
                << std::setw(10) << s.max << std::setw(10) << s.peak_spacing << '\n';
        }
    }
    out << std::defaultfloat;
}

void write_stats_csv(std::ostream& out, std::span<const ClassSummary> stats) {
    out << "class,axis,mean,std,min,max,peak_spacing\n";
    out << std::setprecision(8);
    for (const ClassSummary& cs : stats) {
        for (std::size_t axis = 0; axis < 3; ++axis) {
            const AxisSummary& s = cs.axes[axis];
            out << activity_name(cs.activity) << ',' << kAxisNames[axis] << ',' << s.mean << ',' << s.stddev << ','
                << s.min << ',' << s.max << ',' << s.peak_spacing << '\n';
        }
    }
}

} // namespace har
