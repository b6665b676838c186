#pragma once

#include <array>
#include <cstddef>
#include <ostream>
#include <span>
#include <vector>

#include "har/activity.hpp"
#include "har/lstm.hpp"
#include "har/windowing.hpp"

namespace har {

/// counts[true][predicted], canonical class order on both axes.
struct ConfusionMatrix {
    std::array<std::array<std::size_t, kNumClasses>, kNumClasses> counts{};

    std::size_t total() const noexcept;
    std::size_t trace() const noexcept;
    std::size_t row_sum(std::size_t truth) const noexcept;
    std::size_t column_sum(std::size_t predicted) const noexcept;

    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

/// Throws std::invalid_argument on length mismatch or an index >= 6.
ConfusionMatrix confusion(std::span<const std::size_t> truth, std::span<const std::size_t> predicted);

struct ClassScore {
    double precision = 0.0;
    double recall = 0.0;
    /// True when the corresponding ratio was 0/0 and is reported as 0.
    bool precision_undefined = false;
    bool recall_undefined = false;
};

struct ConfusionPair {
    std::size_t truth = 0;
    std::size_t predicted = 0;
    std::size_t count = 0;
};

struct EvalReport {
    ConfusionMatrix confusion;
    double accuracy = 0.0;
    double loss = 0.0;
    std::array<ClassScore, kNumClasses> per_class{};
    /// Off-diagonal cells, largest first (ties by row then column), zeros omitted.
    std::vector<ConfusionPair> top_confusions;
};

EvalReport make_report(const ConfusionMatrix& cm, double loss, std::size_t top_k = 5);

/// Runs the model over the whole set and assembles the report. Throws
/// ShapeError when the set does not match the network dimensions and
/// DataError when the set is empty.
EvalReport evaluate(const LstmParams& params, const NetConfig& net, const SegmentSet& set, double l2_coeff);

/// Labelled 6x6 grid, summary lines and per-class scores.
void write_report_text(std::ostream& out, const EvalReport& report);
/// `true,pred,count` for all 36 cells, a blank line, then `metric,value` rows.
void write_report_csv(std::ostream& out, const EvalReport& report);

} // namespace har
