#include "har/activity.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>
#include <string>

namespace har {

ActivityLabel activity_from_index(std::size_t index) {
    if (index >= kNumClasses) {
        throw std::out_of_range("activity index " + std::to_string(index) + " out of range");
    }
    return kAllActivities[index];
}

std::string_view activity_name(ActivityLabel label) noexcept {
    return kActivityNames[class_index(label)];
}

std::optional<ActivityLabel> parse_activity(std::string_view text) noexcept {
    for (std::size_t i = 0; i < kNumClasses; ++i) {
        const std::string_view name = kActivityNames[i];
        if (name.size() != text.size()) continue;
        const bool match = std::equal(name.begin(), name.end(), text.begin(), [](char a, char b) {
            return std::tolower(static_cast<unsigned char>(a)) == std::tolower(static_cast<unsigned char>(b));
        });
        if (match) return kAllActivities[i];
    }
    return std::nullopt;
}

} // namespace har
