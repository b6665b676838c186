#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "har/wisdm.hpp"

namespace har {

struct SyntheticConfig {
    std::size_t samples = 100000;
    std::size_t users = 6;
    std::size_t min_run = 400;
    std::size_t max_run = 2400;
    std::uint64_t seed = 1;
};

/// Generates a WISDM-like recording at 20 Hz: each user performs runs of
/// activities drawn with the WISDM class proportions. Dynamic activities are
/// periodic gait waveforms (class-specific cadence, amplitude and harmonic
/// content, user-specific scale and tempo); sitting and standing are
/// near-constant orientations (x ~ 3 vs x ~ 0) with gravity on y.
std::vector<Sample> synthesize_recording(const SyntheticConfig& cfg);

/// The same recording rendered as raw file text, one record per line.
std::string synthesize_raw_file(const SyntheticConfig& cfg);

} // namespace har
