#include "har/synthetic.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <sstream>

#include "har/rng.hpp"

namespace har {

namespace {

constexpr double kSampleRateHz = 20.0;
constexpr std::uint64_t kTickNs = 50'000'000;

struct Signature {
    double cadence_hz;             // 0 for static postures
    std::array<double, 3> mean;    // x, y, z
    std::array<double, 3> amplitude;
    std::array<double, 3> phase;   // per-axis offset of the fundamental
    double second_harmonic;        // relative amplitude of the 2f component
    double noise;
};

// Indexed by canonical class order.
constexpr std::array<Signature, kNumClasses> kSignatures = {{
    // Downstairs: quick steps, sharp y impacts (strong 2nd harmonic), device pitched forward.
    {2.3, {0.3, 10.4, -1.6}, {3.2, 6.0, 2.2}, {0.0, 1.1, 2.3}, 0.85, 0.9},
    // Jogging: fast, large swings on every axis, z pushed negative.
    {2.7, {-0.4, 8.6, -1.8}, {7.5, 8.5, 5.0}, {0.0, 0.9, 2.0}, 0.55, 1.2},
    // Sitting: tilted device, x around 3.
    {0.0, {3.0, 8.9, 1.6}, {0.0, 0.0, 0.0}, {0.0, 0.0, 0.0}, 0.0, 0.18},
    // Standing: upright, x near 0, gravity on y.
    {0.0, {0.1, 9.8, 0.5}, {0.0, 0.0, 0.0}, {0.0, 0.0, 0.0}, 0.0, 0.25},
    // Upstairs: slow climb, soft impacts, device pitched back.
    {1.4, {0.9, 9.0, 2.2}, {2.2, 3.4, 2.4}, {0.0, 1.3, 2.1}, 0.25, 0.8},
    // Walking.
    {1.9, {0.5, 9.6, 0.4}, {3.1, 4.6, 2.6}, {0.0, 1.2, 2.2}, 0.45, 0.7},
}};

// WISDM raw-file class shares, canonical order.
constexpr std::array<double, kNumClasses> kClassShare = {0.091, 0.312, 0.055, 0.044, 0.112, 0.386};

ActivityLabel draw_activity(Rng& rng) {
    double u = rng.uniform();
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        if (u < kClassShare[c]) return kAllActivities[c];
        u -= kClassShare[c];
    }
    return ActivityLabel::Walking;
}

struct UserTraits {
    std::uint64_t id;
    double tempo;
    double strength;
    std::array<double, 3> tilt;
};

} // namespace

std::vector<Sample> synthesize_recording(const SyntheticConfig& cfg) {
    Rng rng(cfg.seed);
    std::vector<Sample> out;
    out.reserve(cfg.samples);
    const std::size_t users = std::max<std::size_t>(cfg.users, 1);
    const std::size_t per_user = (cfg.samples + users - 1) / users;
    const std::size_t min_run = std::max<std::size_t>(cfg.min_run, 1);
    const std::size_t max_run = std::max(cfg.max_run, min_run);

    for (std::size_t u = 0; u < users && out.size() < cfg.samples; ++u) {
        const UserTraits user{u + 1, 0.94 + 0.12 * rng.uniform(), 0.9 + 0.2 * rng.uniform(),
                              {rng.normal(0.0, 0.3), rng.normal(0.0, 0.2), rng.normal(0.0, 0.3)}};
        std::uint64_t timestamp = 1'000'000'000'000ULL * (u + 1) + rng.below(1'000'000) * kTickNs;
        const std::size_t user_end = std::min(cfg.samples, out.size() + per_user);

        while (out.size() < user_end) {
            const ActivityLabel activity = draw_activity(rng);
            const Signature& sig = kSignatures[class_index(activity)];
            const std::size_t length =
                std::min(user_end - out.size(), min_run + static_cast<std::size_t>(rng.below(max_run - min_run + 1)));
            const double cadence = sig.cadence_hz * user.tempo * (0.95 + 0.1 * rng.uniform());
            double phase = 2.0 * std::numbers::pi * rng.uniform();
            double drift = 0.0;

            for (std::size_t i = 0; i < length; ++i) {
                phase += 2.0 * std::numbers::pi * cadence / kSampleRateHz + rng.normal(0.0, 0.04);
                drift = 0.995 * drift + rng.normal(0.0, 0.02);
                std::array<double, 3> v{};
                for (std::size_t a = 0; a < 3; ++a) {
                    double wave = 0.0;
                    if (sig.cadence_hz > 0.0) {
                        const double p = phase + sig.phase[a];
                        wave = user.strength * sig.amplitude[a] *
                               (std::sin(p) + sig.second_harmonic * std::sin(2.0 * p + 0.7 * static_cast<double>(a)));
                    }
                    v[a] = sig.mean[a] + user.tilt[a] + wave + drift + rng.normal(0.0, sig.noise);
                }
                out.push_back({user.id, activity, timestamp, v[0], v[1], v[2]});
                timestamp += kTickNs;
            }
        }
    }
    return out;
}

std::string synthesize_raw_file(const SyntheticConfig& cfg) {
    std::ostringstream out;
    for (const Sample& s : synthesize_recording(cfg)) out << format_line(s) << '\n';
    return out.str();
}

} // namespace har
