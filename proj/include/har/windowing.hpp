#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "har/activity.hpp"
#include "har/matrix.hpp"
#include "har/wisdm.hpp"

namespace har {

inline constexpr std::size_t kFeatures = 3;

struct WindowConfig {
    std::size_t time_steps = 200;
    std::size_t step = 20;

    /// Throws std::invalid_argument unless 1 <= step <= time_steps.
    void validate() const;
};

/// Read-only view of a batch of sequences laid out [batch x time_steps x features].
struct SequenceView {
    std::span<const double> values;
    std::size_t batch = 0;
    std::size_t time_steps = 0;
    std::size_t features = kFeatures;

    const double* at(std::size_t b, std::size_t t) const noexcept {
        return values.data() + (b * time_steps + t) * features;
    }
};

/// Windowed segments and their one-hot labels.
struct SegmentSet {
    std::size_t time_steps = 0;
    std::vector<double> data;  // [n x time_steps x 3], row-major
    Matrix labels;             // [n x 6]

    std::size_t size() const noexcept { return labels.rows(); }
    bool empty() const noexcept { return size() == 0; }

    SequenceView view() const noexcept { return {data, size(), time_steps, kFeatures}; }
    /// Segments [begin, end).
    SequenceView view(std::size_t begin, std::size_t end) const noexcept;

    /// Label rows [begin, end).
    Matrix labels_slice(std::size_t begin, std::size_t end) const;

    std::size_t label_index(std::size_t i) const;
    std::array<std::size_t, kNumClasses> class_counts() const;

    /// New set holding the listed segments in the listed order.
    SegmentSet select(std::span<const std::size_t> indices) const;

    void append(const SegmentSet& other);
};

/// Number of windows make_segments produces for a stream of `length` samples.
std::size_t segment_count(std::size_t length, const WindowConfig& cfg);

/// Windows starting at 0, step, 2*step, ... while start < len - time_steps.
/// Each window's label is its most frequent activity, ties going to the
/// lowest class index. Throws DataError (segment_source_too_short) when
/// samples.size() <= time_steps.
SegmentSet make_segments(std::span<const Sample> samples, const WindowConfig& cfg);

std::array<double, kNumClasses> one_hot(ActivityLabel label) noexcept;

struct SplitConfig {
    double train_fraction = 0.8;
    std::uint64_t seed = 0;
    /// Shuffle and cut at round(n * fraction) instead of drawing one
    /// Bernoulli per segment.
    bool exact_fraction = false;

    void validate() const;
};

/// Index partition produced by a split; both lists ascending.
struct SplitIndices {
    std::vector<std::size_t> first;
    std::vector<std::size_t> second;
};

/// Assigns each index in [0, n) to `first` with probability train_fraction
/// (one uniform draw per index, in order). Throws DataError if either side
/// ends up empty.
SplitIndices split_indices(std::size_t n, const SplitConfig& cfg);

/// Train/test split of a segment set; segment order within each side is
/// preserved.
std::pair<SegmentSet, SegmentSet> bernoulli_split(const SegmentSet& set, const SplitConfig& cfg);

/// Same contract as bernoulli_split, applied to a training set to carve off a
/// validation set.
std::pair<SegmentSet, SegmentSet> holdout_validation(const SegmentSet& train, const SplitConfig& cfg);

/// Segment cache: magic "HARSEG1\0", u64 n, time_steps, features, then data
/// and labels as little-endian f64.
void save_segments(const SegmentSet& set, const std::filesystem::path& path);
SegmentSet load_segments(const std::filesystem::path& path);

} // namespace har
