#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string_view>

namespace har {

/// The six WISDM activities. The enumerator value is the canonical class index
/// (alphabetical order) used for one-hot labels, confusion matrices and
/// checkpoint metadata.
enum class ActivityLabel : std::size_t {
    Downstairs = 0,
    Jogging = 1,
    Sitting = 2,
    Standing = 3,
    Upstairs = 4,
    Walking = 5,
};

inline constexpr std::size_t kNumClasses = 6;

inline constexpr std::array<std::string_view, kNumClasses> kActivityNames = {
    "Downstairs", "Jogging", "Sitting", "Standing", "Upstairs", "Walking",
};

inline constexpr std::array<ActivityLabel, kNumClasses> kAllActivities = {
    ActivityLabel::Downstairs, ActivityLabel::Jogging,  ActivityLabel::Sitting,
    ActivityLabel::Standing,   ActivityLabel::Upstairs, ActivityLabel::Walking,
};

constexpr std::size_t class_index(ActivityLabel label) noexcept {
    return static_cast<std::size_t>(label);
}

/// Throws std::out_of_range for index >= kNumClasses.
ActivityLabel activity_from_index(std::size_t index);

std::string_view activity_name(ActivityLabel label) noexcept;

/// Case-insensitive lookup; surrounding whitespace must already be trimmed.
std::optional<ActivityLabel> parse_activity(std::string_view text) noexcept;

} // namespace har
