#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "har/matrix.hpp"
#include "har/windowing.hpp"

namespace har {

struct NetConfig {
    std::size_t features = kFeatures;
    std::size_t time_steps = 200;
    std::size_t hidden_units = 64;
    std::size_t num_layers = 3;
    std::size_t classes = kNumClasses;
    double forget_bias = 1.0;
    double init_sigma = 0.1;

    void validate() const;
    friend bool operator==(const NetConfig&, const NetConfig&) = default;
};

/// Gate weights of one LSTM layer. Columns are grouped by gate in the fixed
/// order input (i), candidate (g), forget (f), output (o), each `hidden` wide.
/// Rows are the concatenated input [x_t || h_{t-1}].
struct LstmLayer {
    Matrix weights;  // [(in + hidden) x 4*hidden]
    Matrix bias;     // [1 x 4*hidden]

    friend bool operator==(const LstmLayer&, const LstmLayer&) = default;
};

/// Every trainable array of the network. The visitation order of
/// for_each_array is the canonical array order used by initialisation,
/// checkpoints and the optimizer:
///   hidden_weights, hidden_bias, lstm0.weights, lstm0.bias, ...,
///   output_weights, output_bias
struct ParameterArrays {
    Matrix hidden_weights;  // [features x hidden]
    Matrix hidden_bias;     // [1 x hidden]
    std::vector<LstmLayer> layers;
    Matrix output_weights;  // [hidden x classes]
    Matrix output_bias;     // [1 x classes]

    template <class Fn>
    void for_each_array(Fn&& fn) { visit(*this, fn); }

    template <class Fn>
    void for_each_array(Fn&& fn) const { visit(*this, fn); }

    std::size_t parameter_count() const;

    friend bool operator==(const ParameterArrays&, const ParameterArrays&) = default;

private:
    template <class Self, class Fn>
    static void visit(Self& self, Fn& fn) {
        fn(std::string("hidden_weights"), self.hidden_weights);
        fn(std::string("hidden_bias"), self.hidden_bias);
        for (std::size_t l = 0; l < self.layers.size(); ++l) {
            fn("lstm" + std::to_string(l) + ".weights", self.layers[l].weights);
            fn("lstm" + std::to_string(l) + ".bias", self.layers[l].bias);
        }
        fn(std::string("output_weights"), self.output_weights);
        fn(std::string("output_bias"), self.output_bias);
    }
};

struct LstmParams : ParameterArrays {
    /// All arrays zero, shaped for cfg.
    static LstmParams zeros(const NetConfig& cfg);

    /// Throws ShapeError unless every array matches cfg.
    void check_shapes(const NetConfig& cfg) const;
};

struct Gradients : ParameterArrays {
    static Gradients zeros_like(const ParameterArrays& params);
};

/// Weights and biases ~ Normal(0, init_sigma), except hidden_bias ~
/// Normal(1, init_sigma). Draws are taken in canonical array order.
LstmParams init_params(const NetConfig& cfg, std::uint64_t seed);

/// Everything one cell step keeps for the backward pass.
struct StepCache {
    Matrix gates;   // [B x 4H] activations i, g, f, o
    Matrix cell;    // [B x H] c_t
    Matrix tanh_cell;
    Matrix hidden;  // [B x H] h_t
};

/// One LSTM step: z = [x || h_prev] W + b, i = s(z_i), g = tanh(z_g),
/// f = s(z_f + forget_bias), o = s(z_o), c = f*c_prev + i*g, h = o*tanh(c).
StepCache lstm_cell_step(const LstmLayer& layer, double forget_bias, const Matrix& x,
                         const Matrix& h_prev, const Matrix& c_prev);

struct ForwardCache {
    std::size_t batch = 0;
    std::size_t time_steps = 0;
    std::vector<Matrix> inputs;     // [T] x_t, [B x features]
    std::vector<Matrix> projected;  // [T] relu(x_t Wp + bp), [B x H]
    /// steps[l][t]
    std::vector<std::vector<StepCache>> steps;
    Matrix logits;
};

/// Full forward pass over [B x T x features]. Each step's input is projected
/// through the ReLU layer, then fed through the LSTM stack with zero initial
/// states; logits come from the top layer's final hidden state.
ForwardCache forward(const LstmParams& params, const NetConfig& cfg, const SequenceView& batch);

/// Forward pass that keeps no history; bit-identical logits to forward().
Matrix forward_logits(const LstmParams& params, const NetConfig& cfg, const SequenceView& batch);

/// Gradients of sum(logits * dlogits) with respect to every parameter.
Gradients backward(const LstmParams& params, const NetConfig& cfg, const ForwardCache& cache,
                   const Matrix& dlogits);

/// l2_coeff * sum over all arrays of sum(w^2)/2.
double l2_penalty(const ParameterArrays& params, double l2_coeff);

struct LossAndGrads {
    double loss = 0.0;  // cross entropy mean + l2 penalty
    double accuracy = 0.0;
    Gradients grads;
    Matrix logits;
};

/// Regularized softmax cross-entropy with gradients. Internally the batch is
/// processed in fixed-size row chunks whose gradients are summed in order.
LossAndGrads loss_and_grads(const LstmParams& params, const NetConfig& cfg, const SequenceView& batch,
                            const Matrix& onehot, double l2_coeff);

} // namespace har
