#include "har/evaluator.hpp"

#include <algorithm>
#include <iomanip>
#include <stdexcept>
#include <string>

#include "har/error.hpp"
#include "har/trainer.hpp"

namespace har {

namespace {

constexpr std::size_t kEvalChunkRows = 1024;

// Short column headers for the text grid.
constexpr std::array<std::string_view, kNumClasses> kShortNames = {"Down", "Jog", "Sit", "Stand", "Up", "Walk"};

} // namespace

std::size_t ConfusionMatrix::total() const noexcept {
    std::size_t n = 0;
    for (const auto& row : counts)
        for (std::size_t v : row) n += v;
    return n;
}

std::size_t ConfusionMatrix::trace() const noexcept {
    std::size_t n = 0;
    for (std::size_t i = 0; i < kNumClasses; ++i) n += counts[i][i];
    return n;
}

std::size_t ConfusionMatrix::row_sum(std::size_t truth) const noexcept {
    std::size_t n = 0;
    for (std::size_t v : counts[truth]) n += v;
    return n;
}

std::size_t ConfusionMatrix::column_sum(std::size_t predicted) const noexcept {
    std::size_t n = 0;
    for (const auto& row : counts) n += row[predicted];
    return n;
}

ConfusionMatrix confusion(std::span<const std::size_t> truth, std::span<const std::size_t> predicted) {
    if (truth.size() != predicted.size()) {
        throw std::invalid_argument("confusion: " + std::to_string(truth.size()) + " truths vs " +
                                    std::to_string(predicted.size()) + " predictions");
    }
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] >= kNumClasses || predicted[i] >= kNumClasses) {
            throw std::invalid_argument("confusion: class index out of range at position " + std::to_string(i));
        }
        ++cm.counts[truth[i]][predicted[i]];
    }
    return cm;
}

EvalReport make_report(const ConfusionMatrix& cm, double loss, std::size_t top_k) {
    EvalReport r;
    r.confusion = cm;
    r.loss = loss;
    const std::size_t total = cm.total();
    r.accuracy = total == 0 ? 0.0 : static_cast<double>(cm.trace()) / static_cast<double>(total);

    for (std::size_t c = 0; c < kNumClasses; ++c) {
        ClassScore& s = r.per_class[c];
        const std::size_t tp = cm.counts[c][c];
        const std::size_t predicted = cm.column_sum(c);
        const std::size_t actual = cm.row_sum(c);
        s.precision_undefined = predicted == 0;
        s.recall_undefined = actual == 0;
        s.precision = predicted == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(predicted);
        s.recall = actual == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(actual);
    }

    for (std::size_t t = 0; t < kNumClasses; ++t)
        for (std::size_t p = 0; p < kNumClasses; ++p)
            if (t != p && cm.counts[t][p] > 0) r.top_confusions.push_back({t, p, cm.counts[t][p]});
    std::stable_sort(r.top_confusions.begin(), r.top_confusions.end(),
                     [](const ConfusionPair& a, const ConfusionPair& b) { return a.count > b.count; });
    if (r.top_confusions.size() > top_k) r.top_confusions.resize(top_k);
    return r;
}

EvalReport evaluate(const LstmParams& params, const NetConfig& net, const SegmentSet& set, double l2_coeff) {
    if (set.empty()) throw DataError("cannot evaluate an empty segment set");
    if (set.time_steps != net.time_steps || set.labels.cols() != net.classes) {
        throw ShapeError("segments are " + std::to_string(set.time_steps) + " steps with " +
                         std::to_string(set.labels.cols()) + " classes; model expects " +
                         std::to_string(net.time_steps) + " steps with " + std::to_string(net.classes));
    }
    Matrix logits(set.size(), net.classes);
    for (std::size_t begin = 0; begin < set.size(); begin += kEvalChunkRows) {
        const std::size_t end = std::min(set.size(), begin + kEvalChunkRows);
        const Matrix part = forward_logits(params, net, set.view(begin, end));
        std::copy(part.values().begin(), part.values().end(), logits.row(begin).begin());
    }
    const auto predicted = argmax_rows(logits);
    std::vector<std::size_t> truth(set.size());
    for (std::size_t i = 0; i < set.size(); ++i) truth[i] = set.label_index(i);
    const double loss = cross_entropy_mean(logits, set.labels) + l2_penalty(params, l2_coeff);
    return make_report(confusion(truth, predicted), loss);
}

void write_report_text(std::ostream& out, const EvalReport& report) {
    out << "confusion matrix (rows = true, columns = predicted)\n";
    out << std::setw(11) << "";
    for (auto name : kShortNames) out << std::setw(8) << name;
    out << '\n';
    for (std::size_t t = 0; t < kNumClasses; ++t) {
        out << std::left << std::setw(11) << kActivityNames[t] << std::right;
        for (std::size_t p = 0; p < kNumClasses; ++p) out << std::setw(8) << report.confusion.counts[t][p];
        out << '\n';
    }
    out << std::fixed << std::setprecision(4);
    out << "segments: " << report.confusion.total() << '\n';
    out << "accuracy: " << report.accuracy << '\n';
    out << "loss:     " << report.loss << '\n';
    out << std::left << std::setw(11) << "class" << std::right << std::setw(11) << "precision" << std::setw(9)
        << "recall" << '\n';
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        const ClassScore& s = report.per_class[c];
        out << std::left << std::setw(11) << kActivityNames[c] << std::right << std::setw(10) << s.precision
            << (s.precision_undefined ? "*" : " ") << std::setw(8) << s.recall << (s.recall_undefined ? "*" : " ")
            << '\n';
    }
    out << "(* = no segments in the denominator, reported as 0)\n";
    if (!report.top_confusions.empty()) {
        out << "largest confusions:\n";
        for (const ConfusionPair& p : report.top_confusions) {
            out << "  " << kActivityNames[p.truth] << " -> " << kActivityNames[p.predicted] << ": " << p.count
                << '\n';
        }
    }
    out << std::defaultfloat;
}

void write_report_csv(std::ostream& out, const EvalReport& report) {
    out << "true,pred,count\n";
    for (std::size_t t = 0; t < kNumClasses; ++t)
        for (std::size_t p = 0; p < kNumClasses; ++p)
            out << kActivityNames[t] << ',' << kActivityNames[p] << ',' << report.confusion.counts[t][p] << '\n';
    out << '\n' << std::setprecision(8);
    out << "metric,value\n";
    out << "segments," << report.confusion.total() << '\n';
    out << "accuracy," << report.accuracy << '\n';
    out << "loss," << report.loss << '\n';
    out << '\n' << "class,precision,recall,undefined\n";
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        const ClassScore& s = report.per_class[c];
        std::string undefined;
        if (s.precision_undefined) undefined = "precision";
        if (s.recall_undefined) undefined += undefined.empty() ? "recall" : "+recall";
        out << kActivityNames[c] << ',' << s.precision << ',' << s.recall << ',' << undefined << '\n';
    }
}

} // namespace har
