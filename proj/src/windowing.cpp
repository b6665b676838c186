#include "har/windowing.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "binary_io.hpp"
#include "har/error.hpp"
#include "har/rng.hpp"

namespace har {

namespace {

constexpr std::string_view kSegmentMagic{"HARSEG1\0", 8};

} // namespace

void WindowConfig::validate() const {
    if (time_steps < 1) throw std::invalid_argument("time_steps must be >= 1");
    if (step < 1 || step > time_steps) {
        throw std::invalid_argument("step must be in [1, time_steps], got " + std::to_string(step));
    }
}

void SplitConfig::validate() const {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw std::invalid_argument("train_fraction must be in (0, 1), got " + std::to_string(train_fraction));
    }
}

SequenceView SegmentSet::view(std::size_t begin, std::size_t end) const noexcept {
    const std::size_t stride = time_steps * kFeatures;
    return {std::span<const double>(data).subspan(begin * stride, (end - begin) * stride), end - begin,
            time_steps, kFeatures};
}

Matrix SegmentSet::labels_slice(std::size_t begin, std::size_t end) const {
    const auto first = labels.values().begin() + static_cast<std::ptrdiff_t>(begin * labels.cols());
    const auto last = labels.values().begin() + static_cast<std::ptrdiff_t>(end * labels.cols());
    return Matrix(end - begin, labels.cols(), std::vector<double>(first, last));
}

std::size_t SegmentSet::label_index(std::size_t i) const {
    const auto r = labels.row(i);
    return static_cast<std::size_t>(std::max_element(r.begin(), r.end()) - r.begin());
}

std::array<std::size_t, kNumClasses> SegmentSet::class_counts() const {
    std::array<std::size_t, kNumClasses> counts{};
    for (std::size_t i = 0; i < size(); ++i) ++counts[label_index(i)];
    return counts;
}

SegmentSet SegmentSet::select(std::span<const std::size_t> indices) const {
    const std::size_t stride = time_steps * kFeatures;
    SegmentSet out;
    out.time_steps = time_steps;
    out.data.reserve(indices.size() * stride);
    out.labels = Matrix(indices.size(), labels.cols());
    for (std::size_t k = 0; k < indices.size(); ++k) {
        const std::size_t i = indices[k];
        if (i >= size()) throw std::out_of_range("segment index " + std::to_string(i) + " out of range");
        out.data.insert(out.data.end(), data.begin() + static_cast<std::ptrdiff_t>(i * stride),
                        data.begin() + static_cast<std::ptrdiff_t>((i + 1) * stride));
        std::copy(labels.row(i).begin(), labels.row(i).end(), out.labels.row(k).begin());
    }
    return out;
}

void SegmentSet::append(const SegmentSet& other) {
    if (empty()) {
        *this = other;
        return;
    }
    if (other.time_steps != time_steps || other.labels.cols() != labels.cols()) {
        throw ShapeError("cannot append segments of a different shape");
    }
    data.insert(data.end(), other.data.begin(), other.data.end());
    std::vector<double> merged(labels.values().begin(), labels.values().end());
    merged.insert(merged.end(), other.labels.values().begin(), other.labels.values().end());
    labels = Matrix(size() + other.size(), labels.cols(), std::move(merged));
}

std::size_t segment_count(std::size_t length, const WindowConfig& cfg) {
    if (length <= cfg.time_steps) return 0;
    return (length - cfg.time_steps - 1) / cfg.step + 1;
}

std::array<double, kNumClasses> one_hot(ActivityLabel label) noexcept {
    std::array<double, kNumClasses> v{};
    v[class_index(label)] = 1.0;
    return v;
}

SegmentSet make_segments(std::span<const Sample> samples, const WindowConfig& cfg) {
    cfg.validate();
    if (samples.size() <= cfg.time_steps) {
        throw DataError("segment_source_too_short: " + std::to_string(samples.size()) +
                        " samples cannot fill a window of " + std::to_string(cfg.time_steps) + " steps");
    }
    const std::size_t n = segment_count(samples.size(), cfg);
    SegmentSet set;
    set.time_steps = cfg.time_steps;
    set.data.reserve(n * cfg.time_steps * kFeatures);
    set.labels = Matrix(n, kNumClasses);

    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t start = k * cfg.step;
        std::array<std::size_t, kNumClasses> votes{};
        for (std::size_t t = start; t < start + cfg.time_steps; ++t) {
            const Sample& s = samples[t];
            set.data.push_back(s.x);
            set.data.push_back(s.y);
            set.data.push_back(s.z);
            ++votes[class_index(s.activity)];
        }
        // max_element returns the first maximum, i.e. the lowest class index on ties.
        const auto mode = static_cast<std::size_t>(std::max_element(votes.begin(), votes.end()) - votes.begin());
        set.labels(k, mode) = 1.0;
    }
    return set;
}

SplitIndices split_indices(std::size_t n, const SplitConfig& cfg) {
    cfg.validate();
    SplitIndices out;
    Rng rng(cfg.seed);
    if (cfg.exact_fraction) {
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
        const auto cut = static_cast<std::size_t>(std::llround(cfg.train_fraction * static_cast<double>(n)));
        out.first.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(cut));
        out.second.assign(order.begin() + static_cast<std::ptrdiff_t>(cut), order.end());
        std::sort(out.first.begin(), out.first.end());
        std::sort(out.second.begin(), out.second.end());
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            (rng.uniform() < cfg.train_fraction ? out.first : out.second).push_back(i);
        }
    }
    if (out.first.empty() || out.second.empty()) {
        throw DataError("split of " + std::to_string(n) + " segments left one side empty (" +
                        std::to_string(out.first.size()) + "/" + std::to_string(out.second.size()) +
                        "); try another seed or more data");
    }
    return out;
}

std::pair<SegmentSet, SegmentSet> bernoulli_split(const SegmentSet& set, const SplitConfig& cfg) {
    if (set.size() < 2) throw DataError("need at least 2 segments to split, got " + std::to_string(set.size()));
    const SplitIndices idx = split_indices(set.size(), cfg);
    return {set.select(idx.first), set.select(idx.second)};
}

std::pair<SegmentSet, SegmentSet> holdout_validation(const SegmentSet& train, const SplitConfig& cfg) {
    return bernoulli_split(train, cfg);
}

void save_segments(const SegmentSet& set, const std::filesystem::path& path) {
    detail::ByteWriter w;
    w.bytes(kSegmentMagic);
    w.u64(set.size());
    w.u64(set.time_steps);
    w.u64(kFeatures);
    for (double v : set.data) w.f64(v);
    for (double v : set.labels.values()) w.f64(v);
    detail::write_file(path.string(), w.take());
}

SegmentSet load_segments(const std::filesystem::path& path) {
    const std::string bytes = detail::read_file(path.string());
    detail::ByteReader r(bytes);
    std::string_view magic;
    if (!r.bytes(kSegmentMagic.size(), magic) || magic != kSegmentMagic) {
        throw DataError("not a segment cache (bad magic): " + path.string());
    }
    std::uint64_t n = 0, steps = 0, features = 0;
    if (!r.u64(n) || !r.u64(steps) || !r.u64(features)) throw DataError("truncated segment cache: " + path.string());
    if (features != kFeatures) throw DataError("segment cache has " + std::to_string(features) + " features");
    const std::uint64_t values = n * steps * features + n * kNumClasses;
    if (r.remaining() != values * 8) throw DataError("segment cache size mismatch: " + path.string());

    SegmentSet set;
    set.time_steps = steps;
    set.data.resize(n * steps * features);
    for (double& v : set.data) r.f64(v);
    set.labels = Matrix(n, kNumClasses);
    for (double& v : set.labels.values()) r.f64(v);
    return set;
}

} // namespace har
