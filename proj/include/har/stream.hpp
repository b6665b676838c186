#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <vector>

#include "har/activity.hpp"
#include "har/lstm.hpp"

namespace har {

struct StreamPrediction {
    /// 1-based count of samples consumed when this prediction was emitted.
    std::size_t sample_index = 0;
    ActivityLabel label = ActivityLabel::Walking;
    std::array<double, kNumClasses> probabilities{};
};

/// Online sliding-window classifier. Keeps the most recent time_steps samples
/// in a ring buffer and classifies the window whenever samples_seen >=
/// time_steps and (samples_seen - time_steps) is a multiple of `step`.
class StreamClassifier {
public:
    /// The classifier keeps references to params and cfg; both must outlive it.
    StreamClassifier(const LstmParams& params, const NetConfig& cfg, std::size_t step);

    /// Non-finite samples are dropped (counted in rejected()) and leave the
    /// buffer untouched.
    std::optional<StreamPrediction> push_sample(double x, double y, double z);

    std::size_t samples_seen() const noexcept { return seen_; }
    std::size_t rejected() const noexcept { return rejected_; }
    std::size_t buffered() const noexcept;

    /// Current window in time order, [time_steps x 3] flattened.
    std::vector<double> window() const;

private:
    const LstmParams& params_;
    const NetConfig& cfg_;
    std::size_t step_;
    std::vector<double> ring_;
    std::size_t head_ = 0;  // next write slot
    std::size_t seen_ = 0;
    std::size_t rejected_ = 0;
};

} // namespace har
