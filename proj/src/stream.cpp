#include "har/stream.hpp"

#include <cmath>
#include <stdexcept>

namespace har {

StreamClassifier::StreamClassifier(const LstmParams& params, const NetConfig& cfg, std::size_t step)
    : params_(params), cfg_(cfg), step_(step), ring_(cfg.time_steps * kFeatures, 0.0) {
    cfg.validate();
    params.check_shapes(cfg);
    if (cfg.features != kFeatures || cfg.classes != kNumClasses) {
        throw std::invalid_argument("stream classifier needs a 3-axis, 6-class model");
    }
    if (step < 1) throw std::invalid_argument("stream step must be >= 1");
}

std::size_t StreamClassifier::buffered() const noexcept { return std::min(seen_, cfg_.time_steps); }

std::vector<double> StreamClassifier::window() const {
    const std::size_t n = buffered();
    const std::size_t T = cfg_.time_steps;
    std::vector<double> out;
    out.reserve(n * kFeatures);
    // Oldest retained sample sits at head_ once the ring has wrapped.
    const std::size_t first = seen_ >= T ? head_ : 0;
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t slot = (first + k) % T;
        out.insert(out.end(), ring_.begin() + static_cast<std::ptrdiff_t>(slot * kFeatures),
                   ring_.begin() + static_cast<std::ptrdiff_t>((slot + 1) * kFeatures));
    }
    return out;
}

std::optional<StreamPrediction> StreamClassifier::push_sample(double x, double y, double z) {
    if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(z)) {
        ++rejected_;
        return std::nullopt;
    }
    double* slot = ring_.data() + head_ * kFeatures;
    slot[0] = x;
    slot[1] = y;
    slot[2] = z;
    head_ = (head_ + 1) % cfg_.time_steps;
    ++seen_;

    if (seen_ < cfg_.time_steps || (seen_ - cfg_.time_steps) % step_ != 0) return std::nullopt;

    const std::vector<double> w = window();
    const Matrix logits = forward_logits(params_, cfg_, SequenceView{w, 1, cfg_.time_steps, kFeatures});
    const Matrix probs = softmax_rows(logits);
    StreamPrediction out;
    out.sample_index = seen_;
    out.label = activity_from_index(argmax_rows(logits).front());
    std::copy(probs.row(0).begin(), probs.row(0).end(), out.probabilities.begin());
    return out;
}

} // namespace har
