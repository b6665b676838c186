#pragma once

// Branch-free exp/sigmoid/tanh for the elementwise activations. Written as
// straight-line arithmetic so loops over spans vectorize; accurate to a few
// ulp over the clamped domain.

#include <algorithm>
#include <bit>
#include <cstdint>

namespace har::detail {

inline double exp_fast(double x) {
    constexpr double kLog2e = 1.4426950408889634;
    constexpr double kLn2Hi = 6.93147180369123816490e-01;  // low bits zero: n * kLn2Hi is exact
    constexpr double kLn2Lo = 1.90821492927058770002e-10;
    constexpr double kShifter = 0x1.8p52;
    constexpr std::uint64_t kShifterBits = 0x4338000000000000ULL;

    x = x < -708.0 ? -708.0 : x;
    x = x > 709.0 ? 709.0 : x;
    const double shifted = x * kLog2e + kShifter;
    const double n = shifted - kShifter;  // round(x / ln 2)
    const double r = (x - n * kLn2Hi) - n * kLn2Lo;  // |r| <= ln2 / 2

    // Taylor series to r^12: truncation error < 2e-16 relative for |r| <= 0.347.
    double p = 1.0 / 479001600.0;
    p = p * r + 1.0 / 39916800.0;
    p = p * r + 1.0 / 3628800.0;
    p = p * r + 1.0 / 362880.0;
    p = p * r + 1.0 / 40320.0;
    p = p * r + 1.0 / 5040.0;
    p = p * r + 1.0 / 720.0;
    p = p * r + 1.0 / 120.0;
    p = p * r + 1.0 / 24.0;
    p = p * r + 1.0 / 6.0;
    p = p * r + 0.5;
    p = p * r + 1.0;
    p = p * r + 1.0;

    const std::uint64_t exponent = std::bit_cast<std::uint64_t>(shifted) - kShifterBits + 1023;
    return p * std::bit_cast<double>(exponent << 52);
}

inline double sigmoid_fast(double x) { return 1.0 / (1.0 + exp_fast(-x)); }

inline double tanh_fast(double x) {
    const double ax = x < 0.0 ? -x : x;
    // Small arguments: odd series to x^11 avoids the cancellation in 1 - e.
    const double x2 = ax * ax;
    double series = -1382.0 / 155925.0;
    series = series * x2 + 62.0 / 2835.0;
    series = series * x2 - 17.0 / 315.0;
    series = series * x2 + 2.0 / 15.0;
    series = series * x2 - 1.0 / 3.0;
    series = ax + ax * x2 * series;
    const double e = exp_fast(-2.0 * ax);
    const double ratio = (1.0 - e) / (1.0 + e);
    const double magnitude = ax < 0.0625 ? series : ratio;
    return x < 0.0 ? -magnitude : magnitude;
}

} // namespace har::detail
