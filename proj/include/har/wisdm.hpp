#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "har/activity.hpp"

namespace har {

/// One accelerometer reading from the WISDM raw file.
struct Sample {
    std::uint64_t user_id = 0;
    ActivityLabel activity = ActivityLabel::Walking;
    std::uint64_t timestamp = 0;
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    friend bool operator==(const Sample&, const Sample&) = default;
};

enum class RejectReason {
    EmptyLine,
    WrongFieldCount,
    UnknownActivity,
    NonNumericValue,
    NonFiniteValue,
};

std::string_view reject_reason_name(RejectReason reason) noexcept;

using ParseResult = std::variant<Sample, RejectReason>;

/// Parses `user,activity,timestamp,x,y,z[;]`. Whitespace around the record and
/// around each field is ignored, the trailing semicolon is optional and the
/// activity is matched case-insensitively. Never throws.
ParseResult parse_line(std::string_view line);

/// Canonical line for a sample; parse_line(format_line(s)) == s.
std::string format_line(const Sample& sample);

struct IngestReport {
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    std::map<RejectReason, std::size_t> rejection_reasons;
    std::array<std::size_t, kNumClasses> per_class_counts{};
    /// FNV-1a 64 of the raw file bytes, to identify the dataset release.
    std::uint64_t checksum = 0;
};

struct Dataset {
    std::vector<Sample> samples;  // file order
    IngestReport report;
};

/// Reads a WISDM raw file. Blank lines are skipped without being counted;
/// every other line is either accepted or tallied under its rejection reason.
/// Throws IoError naming the path when the file cannot be read.
Dataset load_dataset(const std::filesystem::path& path);

/// Same as load_dataset but over in-memory text (the checksum covers `text`).
Dataset parse_dataset(std::string_view text);

enum class Axis : std::size_t { X = 0, Y = 1, Z = 2 };
inline constexpr std::array<std::string_view, 3> kAxisNames = {"x", "y", "z"};

struct AxisSummary {
    double mean = 0.0;
    double stddev = 0.0;
    double min = 0.0;
    double max = 0.0;
    /// Mean distance in samples between consecutive peaks, a peak being a
    /// strict local maximum above mean + 1 stddev of its run. 0 when no run
    /// has two peaks.
    double peak_spacing = 0.0;
    std::size_t peak_intervals = 0;
};

struct ClassSummary {
    ActivityLabel activity;
    std::size_t samples = 0;
    std::array<AxisSummary, 3> axes;
};

/// Per-class statistics. Moments are pooled over all samples of a class;
/// peaks are detected within each contiguous run of same-class samples (with
/// that run's own mean/stddev) and their spacings pooled. Classes with fewer
/// than two samples are omitted.
std::vector<ClassSummary> class_stats(std::span<const Sample> samples);

void write_report_text(std::ostream& out, const IngestReport& report);
void write_stats_table(std::ostream& out, std::span<const ClassSummary> stats);
/// `class,axis,mean,std,min,max,peak_spacing`
void write_stats_csv(std::ostream& out, std::span<const ClassSummary> stats);

} // namespace har
