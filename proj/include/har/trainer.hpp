#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <vector>

#include "har/error.hpp"
#include "har/lstm.hpp"
#include "har/windowing.hpp"

namespace har {

struct TrainConfig {
    std::size_t epochs = 500;
    std::size_t batch_size = 1024;
    double learning_rate = 0.0025;
    double l2_coeff = 0.0015;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t seed = 0;
    bool shuffle = true;
    std::size_t log_every = 10;
    std::optional<std::filesystem::path> checkpoint_path;
    /// Also write the checkpoint at every logged epoch, not only at the end.
    bool checkpoint_every_log = false;
    std::optional<std::filesystem::path> metrics_path;

    void validate() const;
};

struct AdamState {
    Gradients m;
    Gradients v;
    std::uint64_t t = 0;

    static AdamState zeros_like(const ParameterArrays& params);
};

/// Raised when a gradient or loss stops being finite.
class TrainingDiverged : public Error {
public:
    using Error::Error;
};

/// One Adam update with bias correction:
///   m = b1 m + (1-b1) g;  v = b2 v + (1-b2) g^2
///   w -= lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps)
/// Throws TrainingDiverged naming the first gradient array with a non-finite
/// entry; nothing is modified in that case.
void adam_step(AdamState& state, ParameterArrays& params, const Gradients& grads, const TrainConfig& cfg);

struct EpochMetrics {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double train_accuracy = 0.0;
    double test_loss = 0.0;
    double test_accuracy = 0.0;

    friend bool operator==(const EpochMetrics&, const EpochMetrics&) = default;
};

struct SetMetrics {
    double loss = 0.0;
    double accuracy = 0.0;
};

/// Regularized loss and accuracy over a whole set, evaluated in row chunks.
SetMetrics measure(const LstmParams& params, const NetConfig& net, const SegmentSet& set, double l2_coeff);

struct TrainResult {
    LstmParams params;
    std::vector<EpochMetrics> metrics;
};

using EpochCallback = std::function<void(const EpochMetrics&)>;

/// Mini-batch Adam on the regularized cross-entropy. Each epoch walks the
/// (optionally shuffled) training set in contiguous batches, including the
/// final partial batch, then measures the full train and test sets once.
/// `on_log` fires at epoch 0 and every log_every epochs after that.
TrainResult train(const NetConfig& net, const TrainConfig& cfg, const SegmentSet& train_set,
                  const SegmentSet& test_set, const EpochCallback& on_log = {});

/// Same, starting from given parameters.
TrainResult train_from(LstmParams params, const NetConfig& net, const TrainConfig& cfg,
                       const SegmentSet& train_set, const SegmentSet& test_set,
                       const EpochCallback& on_log = {});

/// `epoch,train_loss,train_acc,test_loss,test_acc`, 6 significant digits.
void write_metrics_csv(std::ostream& out, const std::vector<EpochMetrics>& metrics);
void write_metrics_csv(const std::filesystem::path& path, const std::vector<EpochMetrics>& metrics);

/// "epoch: i: loss: L, accuracy: A" using the test metrics.
std::string format_log_line(const EpochMetrics& m);

} // namespace har
