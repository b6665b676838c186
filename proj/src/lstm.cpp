#include "har/lstm.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "har/error.hpp"
#include "har/rng.hpp"

namespace har {

namespace {

// Rows per forward/backward pass inside loss_and_grads. Bounds the memory held
// by a ForwardCache; results do not depend on it beyond summation grouping.
constexpr std::size_t kGradChunkRows = 64;

void check_batch(const NetConfig& cfg, const SequenceView& batch) {
    if (batch.features != cfg.features || batch.time_steps != cfg.time_steps) {
        throw ShapeError("batch has " + std::to_string(batch.time_steps) + " steps x " +
                         std::to_string(batch.features) + " features, network expects " +
                         std::to_string(cfg.time_steps) + " x " + std::to_string(cfg.features));
    }
    if (batch.values.size() != batch.batch * batch.time_steps * batch.features) {
        throw ShapeError("batch buffer holds " + std::to_string(batch.values.size()) + " values, expected " +
                         std::to_string(batch.batch * batch.time_steps * batch.features));
    }
    for (double v : batch.values) {
        if (!std::isfinite(v)) throw DataError("non-finite value in input batch");
    }
}

Matrix gather_step(const SequenceView& batch, std::size_t t) {
    Matrix x(batch.batch, batch.features);
    for (std::size_t b = 0; b < batch.batch; ++b) {
        const double* src = batch.at(b, t);
        std::copy(src, src + batch.features, x.row(b).begin());
    }
    return x;
}

Matrix project(const LstmParams& params, const Matrix& x) {
    return relu(add_row_broadcast(matmul(x, params.hidden_weights), params.hidden_bias));
}

Matrix concat_columns(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows(), a.cols() + b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto dst = out.row(i);
        std::copy(a.row(i).begin(), a.row(i).end(), dst.begin());
        std::copy(b.row(i).begin(), b.row(i).end(), dst.begin() + static_cast<std::ptrdiff_t>(a.cols()));
    }
    return out;
}

// Shared by forward() and forward_logits() so both produce identical bits.
Matrix run_forward(const LstmParams& params, const NetConfig& cfg, const SequenceView& batch, ForwardCache* cache) {
    cfg.validate();
    params.check_shapes(cfg);
    check_batch(cfg, batch);

    const std::size_t B = batch.batch;
    const std::size_t H = cfg.hidden_units;
    const std::size_t T = cfg.time_steps;
    const std::size_t L = cfg.num_layers;

    std::vector<Matrix> h(L, Matrix(B, H));
    std::vector<Matrix> c(L, Matrix(B, H));
    if (cache) {
        cache->batch = B;
        cache->time_steps = T;
        cache->inputs.clear();
        cache->projected.clear();
        cache->inputs.reserve(T);
        cache->projected.reserve(T);
        cache->steps.assign(L, {});
        for (auto& s : cache->steps) s.reserve(T);
    }

    for (std::size_t t = 0; t < T; ++t) {
        Matrix x = gather_step(batch, t);
        Matrix below = project(params, x);
        if (cache) {
            cache->inputs.push_back(std::move(x));
            cache->projected.push_back(below);
        }
        for (std::size_t l = 0; l < L; ++l) {
            StepCache step = lstm_cell_step(params.layers[l], cfg.forget_bias, below, h[l], c[l]);
            h[l] = step.hidden;
            c[l] = step.cell;
            below = step.hidden;
            if (cache) cache->steps[l].push_back(std::move(step));
        }
    }

    Matrix logits = add_row_broadcast(matmul(h[L - 1], params.output_weights), params.output_bias);
    if (cache) cache->logits = logits;
    return logits;
}

void add_into(ParameterArrays& total, const ParameterArrays& part) {
    std::vector<const Matrix*> parts;
    part.for_each_array([&](const std::string&, const Matrix& m) { parts.push_back(&m); });
    std::size_t k = 0;
    total.for_each_array([&](const std::string&, Matrix& m) {
        const Matrix& p = *parts[k++];
        for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] += p.data()[i];
    });
}

} // namespace

void NetConfig::validate() const {
    if (features < 1 || time_steps < 1 || hidden_units < 1 || num_layers < 1 || classes < 1) {
        throw std::invalid_argument("network dimensions must all be >= 1");
    }
    if (!std::isfinite(forget_bias)) throw std::invalid_argument("forget_bias must be finite");
    if (!std::isfinite(init_sigma) || init_sigma < 0.0) {
        throw std::invalid_argument("init_sigma must be finite and >= 0");
    }
}

std::size_t ParameterArrays::parameter_count() const {
    std::size_t n = 0;
    for_each_array([&n](const std::string&, const Matrix& m) { n += m.size(); });
    return n;
}

LstmParams LstmParams::zeros(const NetConfig& cfg) {
    const std::size_t H = cfg.hidden_units;
    LstmParams p;
    p.hidden_weights = Matrix(cfg.features, H);
    p.hidden_bias = Matrix(1, H);
    for (std::size_t l = 0; l < cfg.num_layers; ++l) {
        p.layers.push_back({Matrix(2 * H, 4 * H), Matrix(1, 4 * H)});
    }
    p.output_weights = Matrix(H, cfg.classes);
    p.output_bias = Matrix(1, cfg.classes);
    return p;
}

void LstmParams::check_shapes(const NetConfig& cfg) const {
    if (layers.size() != cfg.num_layers) {
        throw ShapeError("parameters have " + std::to_string(layers.size()) + " LSTM layers, config expects " +
                         std::to_string(cfg.num_layers));
    }
    std::vector<std::pair<std::string, const Matrix*>> expected;
    const LstmParams reference = zeros(cfg);
    reference.for_each_array([&](const std::string& name, const Matrix& m) { expected.emplace_back(name, &m); });
    std::size_t k = 0;
    for_each_array([&](const std::string& name, const Matrix& m) {
        const Matrix& want = *expected[k++].second;
        if (!m.same_shape(want)) {
            throw ShapeError(name + " is " + m.shape_string() + ", expected " + want.shape_string());
        }
    });
}

Gradients Gradients::zeros_like(const ParameterArrays& params) {
    Gradients g;
    static_cast<ParameterArrays&>(g) = params;
    g.for_each_array([](const std::string&, Matrix& m) { m.fill(0.0); });
    return g;
}

LstmParams init_params(const NetConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    LstmParams p = LstmParams::zeros(cfg);
    Rng rng(seed);
    p.for_each_array([&](const std::string& name, Matrix& m) {
        const double mean = name == "hidden_bias" ? 1.0 : 0.0;
        for (double& v : m.values()) v = rng.normal(mean, cfg.init_sigma);
    });
    return p;
}

StepCache lstm_cell_step(const LstmLayer& layer, double forget_bias, const Matrix& x, const Matrix& h_prev,
                         const Matrix& c_prev) {
    const std::size_t H = h_prev.cols();
    if (x.rows() != h_prev.rows() || !c_prev.same_shape(h_prev) || layer.weights.rows() != x.cols() + H ||
        layer.weights.cols() != 4 * H || layer.bias.rows() != 1 || layer.bias.cols() != 4 * H) {
        throw ShapeError("lstm step: x " + x.shape_string() + ", h " + h_prev.shape_string() + ", c " +
                         c_prev.shape_string() + ", W " + layer.weights.shape_string() + ", b " +
                         layer.bias.shape_string());
    }
    const std::size_t B = x.rows();
    StepCache out{matmul(concat_columns(x, h_prev), layer.weights), Matrix(B, H), Matrix(B, H), Matrix(B, H)};

    const double* bias = layer.bias.data();
    for (std::size_t b = 0; b < B; ++b) {
        double* z = out.gates.data() + b * 4 * H;
        for (std::size_t j = 0; j < 4 * H; ++j) z[j] += bias[j];
        for (std::size_t j = 2 * H; j < 3 * H; ++j) z[j] += forget_bias;
        const std::span<double> row(z, 4 * H);
        sigmoid_inplace(row.subspan(0, H));
        tanh_inplace(row.subspan(H, H));
        sigmoid_inplace(row.subspan(2 * H, 2 * H));  // forget and output gates

        const double* cp = c_prev.data() + b * H;
        double* cell = out.cell.data() + b * H;
        for (std::size_t j = 0; j < H; ++j) cell[j] = z[2 * H + j] * cp[j] + z[j] * z[H + j];
    }
    out.tanh_cell = out.cell;
    tanh_inplace(out.tanh_cell.values());
    for (std::size_t b = 0; b < B; ++b) {
        const double* o_gate = out.gates.data() + b * 4 * H + 3 * H;
        const double* tc = out.tanh_cell.data() + b * H;
        double* h = out.hidden.data() + b * H;
        for (std::size_t j = 0; j < H; ++j) h[j] = o_gate[j] * tc[j];
    }
    return out;
}

ForwardCache forward(const LstmParams& params, const NetConfig& cfg, const SequenceView& batch) {
    ForwardCache cache;
    run_forward(params, cfg, batch, &cache);
    return cache;
}

Matrix forward_logits(const LstmParams& params, const NetConfig& cfg, const SequenceView& batch) {
    return run_forward(params, cfg, batch, nullptr);
}

Gradients backward(const LstmParams& params, const NetConfig& cfg, const ForwardCache& cache, const Matrix& dlogits) {
    params.check_shapes(cfg);
    const std::size_t B = cache.batch;
    const std::size_t H = cfg.hidden_units;
    const std::size_t T = cfg.time_steps;
    const std::size_t L = cfg.num_layers;
    if (cache.time_steps != T || cache.steps.size() != L || cache.projected.size() != T ||
        cache.inputs.size() != T || cache.logits.rows() != B) {
        throw ShapeError("forward cache does not match the network configuration");
    }
    for (const auto& layer : cache.steps) {
        if (layer.size() != T) throw ShapeError("forward cache is missing time steps");
    }
    if (dlogits.rows() != B || dlogits.cols() != cfg.classes) {
        throw ShapeError("dlogits is " + dlogits.shape_string() + ", expected " + std::to_string(B) + "x" +
                         std::to_string(cfg.classes));
    }

    Gradients grads = Gradients::zeros_like(params);
    const Matrix& h_top = cache.steps[L - 1][T - 1].hidden;
    matmul_tn_accumulate(h_top, dlogits, grads.output_weights);
    grads.output_bias = column_sums(dlogits);

    // d_input[t] holds dLoss/d(input of the current layer at step t); it is
    // filled by the layer above (or by the output head for the top layer).
    std::vector<Matrix> d_from_above(T, Matrix(B, H));
    d_from_above[T - 1] = matmul(dlogits, transpose(params.output_weights));

    const Matrix zeros(B, H);
    for (std::size_t l = L; l-- > 0;) {
        const auto& steps = cache.steps[l];
        const Matrix w_t = transpose(params.layers[l].weights);
        Matrix& dW = grads.layers[l].weights;
        Matrix& db = grads.layers[l].bias;

        Matrix dh_next(B, H);
        Matrix dc_next(B, H);
        std::vector<Matrix> d_below(T);
        Matrix dz(B, 4 * H);

        for (std::size_t t = T; t-- > 0;) {
            const StepCache& s = steps[t];
            const Matrix& c_prev = t > 0 ? steps[t - 1].cell : zeros;
            const Matrix& h_prev = t > 0 ? steps[t - 1].hidden : zeros;
            const Matrix& input = l == 0 ? cache.projected[t] : cache.steps[l - 1][t].hidden;

            for (std::size_t b = 0; b < B; ++b) {
                const double* gates = s.gates.data() + b * 4 * H;
                double* dzr = dz.data() + b * 4 * H;
                for (std::size_t j = 0; j < H; ++j) {
                    const double i_gate = gates[j];
                    const double g_gate = gates[H + j];
                    const double f_gate = gates[2 * H + j];
                    const double o_gate = gates[3 * H + j];
                    const double tc = s.tanh_cell(b, j);
                    const double dh = d_from_above[t](b, j) + dh_next(b, j);
                    const double dc = dc_next(b, j) + dh * o_gate * (1.0 - tc * tc);
                    dzr[j] = dc * g_gate * i_gate * (1.0 - i_gate);
                    dzr[H + j] = dc * i_gate * (1.0 - g_gate * g_gate);
                    dzr[2 * H + j] = dc * c_prev(b, j) * f_gate * (1.0 - f_gate);
                    dzr[3 * H + j] = dh * tc * o_gate * (1.0 - o_gate);
                    dc_next(b, j) = dc * f_gate;
                }
                for (std::size_t j = 0; j < 4 * H; ++j) db.data()[j] += dzr[j];
            }

            matmul_tn_accumulate(concat_columns(input, h_prev), dz, dW);
            const Matrix d_concat = matmul(dz, w_t);
            Matrix d_in(B, H);
            for (std::size_t b = 0; b < B; ++b) {
                const double* src = d_concat.data() + b * 2 * H;
                std::copy(src, src + H, d_in.row(b).begin());
                std::copy(src + H, src + 2 * H, dh_next.row(b).begin());
            }
            d_below[t] = std::move(d_in);
        }
        d_from_above = std::move(d_below);
    }

    // ReLU input projection; derivative taken as 0 where the output is 0.
    for (std::size_t t = 0; t < T; ++t) {
        Matrix dpre = d_from_above[t];
        const Matrix& p = cache.projected[t];
        for (std::size_t i = 0; i < dpre.size(); ++i) {
            if (!(p.data()[i] > 0.0)) dpre.data()[i] = 0.0;
        }
        matmul_tn_accumulate(cache.inputs[t], dpre, grads.hidden_weights);
        const Matrix col = column_sums(dpre);
        for (std::size_t j = 0; j < H; ++j) grads.hidden_bias.data()[j] += col.data()[j];
    }
    return grads;
}

double l2_penalty(const ParameterArrays& params, double l2_coeff) {
    double total = 0.0;
    params.for_each_array([&](const std::string&, const Matrix& m) { total += sum_squares(m); });
    return l2_coeff * total / 2.0;
}

LossAndGrads loss_and_grads(const LstmParams& params, const NetConfig& cfg, const SequenceView& batch,
                            const Matrix& onehot, double l2_coeff) {
    if (onehot.rows() != batch.batch || onehot.cols() != cfg.classes) {
        throw ShapeError("labels are " + onehot.shape_string() + " for a batch of " + std::to_string(batch.batch));
    }
    if (batch.batch == 0) throw DataError("loss_and_grads on an empty batch");

    const std::size_t B = batch.batch;
    const std::size_t stride = batch.time_steps * batch.features;
    LossAndGrads out{0.0, 0.0, Gradients::zeros_like(params), Matrix(B, cfg.classes)};

    for (std::size_t begin = 0; begin < B; begin += kGradChunkRows) {
        const std::size_t end = std::min(B, begin + kGradChunkRows);
        const SequenceView chunk{batch.values.subspan(begin * stride, (end - begin) * stride), end - begin,
                                 batch.time_steps, batch.features};
        const ForwardCache cache = forward(params, cfg, chunk);
        Matrix dlogits = softmax_rows(cache.logits);
        for (std::size_t i = 0; i < chunk.batch; ++i) {
            for (std::size_t j = 0; j < cfg.classes; ++j) {
                dlogits(i, j) = (dlogits(i, j) - onehot(begin + i, j)) / static_cast<double>(B);
            }
            std::copy(cache.logits.row(i).begin(), cache.logits.row(i).end(), out.logits.row(begin + i).begin());
        }
        const Gradients part = backward(params, cfg, cache, dlogits);
        if (begin == 0) {
            out.grads = part;
        } else {
            add_into(out.grads, part);
        }
    }

    out.loss = cross_entropy_mean(out.logits, onehot) + l2_penalty(params, l2_coeff);

    std::vector<const Matrix*> weights;
    params.for_each_array([&](const std::string&, const Matrix& m) { weights.push_back(&m); });
    std::size_t k = 0;
    out.grads.for_each_array([&](const std::string&, Matrix& g) {
        const Matrix& w = *weights[k++];
        for (std::size_t i = 0; i < g.size(); ++i) g.data()[i] += l2_coeff * w.data()[i];
    });

    const auto predicted = argmax_rows(out.logits);
    const auto truth = argmax_rows(onehot);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < B; ++i) correct += predicted[i] == truth[i] ? 1 : 0;
    out.accuracy = static_cast<double>(correct) / static_cast<double>(B);
    return out;
}

} // namespace har
