#include "har/trainer.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "har/checkpoint.hpp"
#include "har/rng.hpp"

namespace har {

namespace {

constexpr std::size_t kMeasureChunkRows = 256;
constexpr std::size_t kLossTail = 8;
// Decorrelates the shuffle stream from the initialisation stream.
constexpr std::uint64_t kShuffleSalt = 0x9e3779b97f4a7c15ULL;

std::vector<Matrix*> arrays_of(ParameterArrays& p) {
    std::vector<Matrix*> out;
    p.for_each_array([&](const std::string&, Matrix& m) { out.push_back(&m); });
    return out;
}

std::string tail_string(const std::deque<double>& tail) {
    std::ostringstream out;
    out << std::setprecision(6);
    for (std::size_t i = 0; i < tail.size(); ++i) out << (i ? ", " : "") << tail[i];
    return out.str();
}

} // namespace

void TrainConfig::validate() const {
    if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
        throw std::invalid_argument("learning_rate must be > 0");
    }
    if (!(l2_coeff >= 0.0) || !std::isfinite(l2_coeff)) throw std::invalid_argument("l2 coefficient must be >= 0");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
        throw std::invalid_argument("adam betas must be in [0, 1)");
    }
    if (!(epsilon > 0.0)) throw std::invalid_argument("adam epsilon must be > 0");
    if (log_every < 1) throw std::invalid_argument("log_every must be >= 1");
}

AdamState AdamState::zeros_like(const ParameterArrays& params) {
    return {Gradients::zeros_like(params), Gradients::zeros_like(params), 0};
}

void adam_step(AdamState& state, ParameterArrays& params, const Gradients& grads, const TrainConfig& cfg) {
    std::vector<std::pair<std::string, const Matrix*>> g;
    grads.for_each_array([&](const std::string& name, const Matrix& m) { g.emplace_back(name, &m); });
    auto w = arrays_of(params);
    auto m = arrays_of(state.m);
    auto v = arrays_of(state.v);
    if (g.size() != w.size() || m.size() != w.size() || v.size() != w.size()) {
        throw ShapeError("adam: parameter, gradient and moment sets differ in size");
    }
    for (std::size_t k = 0; k < w.size(); ++k) {
        if (!g[k].second->same_shape(*w[k]) || !m[k]->same_shape(*w[k]) || !v[k]->same_shape(*w[k])) {
            throw ShapeError("adam: shape mismatch in " + g[k].first);
        }
        if (!all_finite(*g[k].second)) throw TrainingDiverged("non-finite gradient in " + g[k].first);
    }

    ++state.t;
    const double t = static_cast<double>(state.t);
    const double correction1 = 1.0 - std::pow(cfg.beta1, t);
    const double correction2 = 1.0 - std::pow(cfg.beta2, t);
    for (std::size_t k = 0; k < w.size(); ++k) {
        double* wp = w[k]->data();
        double* mp = m[k]->data();
        double* vp = v[k]->data();
        const double* gp = g[k].second->data();
        for (std::size_t i = 0; i < w[k]->size(); ++i) {
            mp[i] = cfg.beta1 * mp[i] + (1.0 - cfg.beta1) * gp[i];
            vp[i] = cfg.beta2 * vp[i] + (1.0 - cfg.beta2) * gp[i] * gp[i];
            const double m_hat = mp[i] / correction1;
            const double v_hat = vp[i] / correction2;
            wp[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
        }
    }
}

SetMetrics measure(const LstmParams& params, const NetConfig& net, const SegmentSet& set, double l2_coeff) {
    if (set.empty()) throw DataError("cannot measure an empty segment set");
    Matrix logits(set.size(), net.classes);
    for (std::size_t begin = 0; begin < set.size(); begin += kMeasureChunkRows) {
        const std::size_t end = std::min(set.size(), begin + kMeasureChunkRows);
        const Matrix part = forward_logits(params, net, set.view(begin, end));
        std::copy(part.values().begin(), part.values().end(), logits.row(begin).begin());
    }
    const auto predicted = argmax_rows(logits);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < set.size(); ++i) correct += predicted[i] == set.label_index(i) ? 1 : 0;
    return {cross_entropy_mean(logits, set.labels) + l2_penalty(params, l2_coeff),
            static_cast<double>(correct) / static_cast<double>(set.size())};
}

TrainResult train(const NetConfig& net, const TrainConfig& cfg, const SegmentSet& train_set,
                  const SegmentSet& test_set, const EpochCallback& on_log) {
    return train_from(init_params(net, cfg.seed), net, cfg, train_set, test_set, on_log);
}

TrainResult train_from(LstmParams params, const NetConfig& net, const TrainConfig& cfg, const SegmentSet& train_set,
                       const SegmentSet& test_set, const EpochCallback& on_log) {
    cfg.validate();
    net.validate();
    params.check_shapes(net);
    if (train_set.empty()) throw DataError("training set is empty");
    if (test_set.empty()) throw DataError("test set is empty");
    if (train_set.time_steps != net.time_steps || test_set.time_steps != net.time_steps) {
        throw ShapeError("segment length differs from the network's time_steps");
    }

    AdamState adam = AdamState::zeros_like(params);
    Rng shuffle_rng(cfg.seed ^ kShuffleSalt);
    std::deque<double> loss_tail;
    TrainResult result;
    result.metrics.reserve(cfg.epochs);

    const auto write_checkpoint = [&]() {
        if (cfg.checkpoint_path) save_checkpoint({net, params, cfg.seed}, *cfg.checkpoint_path);
    };

    const std::size_t n = train_set.size();
    std::vector<std::size_t> order(n);
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        if (cfg.shuffle) {
            for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[shuffle_rng.below(i)]);
        }

        for (std::size_t begin = 0, batch = 0; begin < n; begin += cfg.batch_size, ++batch) {
            const std::size_t end = std::min(n, begin + cfg.batch_size);
            SegmentSet shuffled;
            SequenceView view;
            Matrix labels;
            if (cfg.shuffle) {
                shuffled = train_set.select(std::span<const std::size_t>(order).subspan(begin, end - begin));
                view = shuffled.view();
                labels = shuffled.labels;
            } else {
                view = train_set.view(begin, end);
                labels = train_set.labels_slice(begin, end);
            }

            LossAndGrads step = loss_and_grads(params, net, view, labels, cfg.l2_coeff);
            loss_tail.push_back(step.loss);
            if (loss_tail.size() > kLossTail) loss_tail.pop_front();
            if (!std::isfinite(step.loss)) {
                throw TrainingDiverged("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                                       std::to_string(batch) + "; recent batch losses: " + tail_string(loss_tail));
            }
            try {
                adam_step(adam, params, step.grads, cfg);
            } catch (const TrainingDiverged& e) {
                throw TrainingDiverged(std::string(e.what()) + " at epoch " + std::to_string(epoch) + ", batch " +
                                       std::to_string(batch) + "; recent batch losses: " + tail_string(loss_tail));
            }
        }

        const SetMetrics tr = measure(params, net, train_set, cfg.l2_coeff);
        const SetMetrics te = measure(params, net, test_set, cfg.l2_coeff);
        const EpochMetrics row{epoch, tr.loss, tr.accuracy, te.loss, te.accuracy};
        result.metrics.push_back(row);
        if (epoch % cfg.log_every == 0) {
            if (on_log) on_log(row);
            if (cfg.checkpoint_every_log) write_checkpoint();
        }
    }

    write_checkpoint();
    if (cfg.metrics_path) write_metrics_csv(*cfg.metrics_path, result.metrics);
    result.params = std::move(params);
    return result;
}

void write_metrics_csv(std::ostream& out, const std::vector<EpochMetrics>& metrics) {
    out << "epoch,train_loss,train_acc,test_loss,test_acc\n";
    out << std::setprecision(6);
    for (const EpochMetrics& m : metrics) {
        out << m.epoch << ',' << m.train_loss << ',' << m.train_accuracy << ',' << m.test_loss << ','
            << m.test_accuracy << '\n';
    }
}

void write_metrics_csv(const std::filesystem::path& path, const std::vector<EpochMetrics>& metrics) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write metrics file: " + path.string());
    write_metrics_csv(out, metrics);
}

std::string format_log_line(const EpochMetrics& m) {
    std::ostringstream out;
    out << "epoch: " << m.epoch << ": loss: " << m.test_loss << ", accuracy: " << m.test_accuracy;
    return out.str();
}

} // namespace har
