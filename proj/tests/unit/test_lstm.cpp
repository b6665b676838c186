#include <doctest.h>

#include <cmath>
#include <random>

#include "har/error.hpp"
#include "har/lstm.hpp"
#include "support/oracles.hpp"

using namespace har;

namespace {

NetConfig small_config(std::size_t hidden, std::size_t steps, std::size_t layers, double sigma = 0.1) {
    NetConfig cfg;
    cfg.hidden_units = hidden;
    cfg.time_steps = steps;
    cfg.num_layers = layers;
    cfg.init_sigma = sigma;
    return cfg;
}

LstmLayer zero_layer(std::size_t in, std::size_t hidden) {
    return {Matrix(in + hidden, 4 * hidden), Matrix(1, 4 * hidden)};
}

} // namespace

TEST_CASE("init_params") {
    const NetConfig cfg = small_config(16, 4, 3);
    CHECK(init_params(cfg, 5) == init_params(cfg, 5));
    CHECK_FALSE(init_params(cfg, 5) == init_params(cfg, 6));
    init_params(cfg, 5).check_shapes(cfg);

    NetConfig zero = cfg;
    zero.init_sigma = 0.0;
    const LstmParams z = init_params(zero, 1);
    z.for_each_array([](const std::string& name, const Matrix& m) {
        for (double v : m.values()) CHECK(v == (name == "hidden_bias" ? 1.0 : 0.0));
    });

    const LstmParams p = init_params(NetConfig{}, 3);
    double mean = 0.0;
    for (double v : p.layers[1].weights.values()) mean += v;
    mean /= static_cast<double>(p.layers[1].weights.size());
    CHECK(std::abs(mean) < 0.01);
    CHECK(p.layers[1].weights.rows() == 128);
    CHECK(p.layers[1].weights.cols() == 256);
    CHECK(p.hidden_weights.rows() == 3);
    CHECK(p.output_weights.cols() == 6);
}

TEST_CASE("NetConfig validation") {
    NetConfig cfg;
    cfg.hidden_units = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = NetConfig{};
    cfg.forget_bias = INFINITY;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("cell step examples") {
    const LstmLayer layer = zero_layer(1, 1);
    SUBCASE("all zero") {
        const StepCache s = lstm_cell_step(layer, 1.0, Matrix(1, 1), Matrix(1, 1), Matrix(1, 1));
        CHECK(s.cell(0, 0) == 0.0);
        CHECK(s.hidden(0, 0) == 0.0);
    }
    SUBCASE("unit cell state, forget bias 1") {
        const StepCache s = lstm_cell_step(layer, 1.0, Matrix(1, 1), Matrix(1, 1), Matrix(1, 1, 1.0));
        const double c = 1.0 / (1.0 + std::exp(-1.0));
        CHECK(s.cell(0, 0) == doctest::Approx(c).epsilon(1e-15));
        CHECK(s.cell(0, 0) == doctest::Approx(0.7310585786300049).epsilon(1e-15));
        CHECK(s.hidden(0, 0) == doctest::Approx(0.5 * std::tanh(c)).epsilon(1e-15));
        CHECK(s.hidden(0, 0) == doctest::Approx(0.3118562749129378).epsilon(1e-15));
    }
    SUBCASE("unit cell state, forget bias 0") {
        const StepCache s = lstm_cell_step(layer, 0.0, Matrix(1, 1), Matrix(1, 1), Matrix(1, 1, 1.0));
        CHECK(s.cell(0, 0) == 0.5);
    }
    SUBCASE("zero input and state give zero whatever the forget bias") {
        for (double fb : {-3.0, 0.0, 1.0, 5.0}) {
            const StepCache s = lstm_cell_step(zero_layer(3, 4), fb, Matrix(2, 3), Matrix(2, 4), Matrix(2, 4));
            for (double v : s.hidden.values()) CHECK(v == 0.0);
            for (double v : s.cell.values()) CHECK(v == 0.0);
        }
    }
    SUBCASE("random weights against the scalar formulas") {
        std::mt19937_64 gen(4);
        const std::size_t in = 3, h = 2;
        LstmLayer l{oracle::random_matrix(in + h, 4 * h, gen), oracle::random_matrix(1, 4 * h, gen)};
        const Matrix x = oracle::random_matrix(1, in, gen), hp = oracle::random_matrix(1, h, gen),
                     cp = oracle::random_matrix(1, h, gen);
        const StepCache s = lstm_cell_step(l, 1.0, x, hp, cp);
        auto z = [&](std::size_t col) {
            double acc = l.bias(0, col);
            for (std::size_t k = 0; k < in; ++k) acc += x(0, k) * l.weights(k, col);
            for (std::size_t k = 0; k < h; ++k) acc += hp(0, k) * l.weights(in + k, col);
            return acc;
        };
        auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
        for (std::size_t j = 0; j < h; ++j) {
            const double i = sig(z(j)), g = std::tanh(z(h + j)), f = sig(z(2 * h + j) + 1.0), o = sig(z(3 * h + j));
            const double c = f * cp(0, j) + i * g;
            CHECK(s.cell(0, j) == doctest::Approx(c).epsilon(1e-14));
            CHECK(s.hidden(0, j) == doctest::Approx(o * std::tanh(c)).epsilon(1e-14));
        }
    }
    SUBCASE("shape mismatch") {
        CHECK_THROWS_AS(lstm_cell_step(layer, 1.0, Matrix(1, 2), Matrix(1, 1), Matrix(1, 1)), ShapeError);
    }
}

TEST_CASE("forward") {
    std::mt19937_64 gen(9);
    const NetConfig cfg = small_config(5, 6, 3);
    const LstmParams p = init_params(cfg, 2);
    const auto rb = oracle::random_batch(17, 6, 6, gen);

    SUBCASE("shape and cache") {
        const ForwardCache cache = forward(p, cfg, rb.view());
        CHECK(cache.logits.rows() == 17);
        CHECK(cache.logits.cols() == 6);
        CHECK(cache.steps.size() == 3);
        CHECK(cache.steps[2].size() == 6);
        CHECK(cache.logits == forward_logits(p, cfg, rb.view()));
        CHECK(forward_logits(p, cfg, rb.view()) == forward_logits(p, cfg, rb.view()));
    }
    SUBCASE("zero-sigma init gives the output bias") {
        NetConfig z = cfg;
        z.init_sigma = 0.0;
        LstmParams zp = init_params(z, 1);
        for (std::size_t j = 0; j < 6; ++j) zp.output_bias(0, j) = 0.25 * double(j) - 0.3;
        const Matrix logits = forward_logits(zp, z, rb.view());
        for (std::size_t r = 0; r < logits.rows(); ++r) {
            for (std::size_t j = 0; j < 6; ++j) CHECK(logits(r, j) == zp.output_bias(0, j));
        }
    }
    SUBCASE("batch rows are independent") {
        const Matrix base = forward_logits(p, cfg, rb.view());
        std::vector<std::size_t> perm(17);
        for (std::size_t i = 0; i < 17; ++i) perm[i] = (i * 5 + 3) % 17;
        std::vector<double> permuted;
        for (std::size_t i : perm) {
            const double* row = rb.view().at(i, 0);
            permuted.insert(permuted.end(), row, row + 6 * 3);
        }
        const Matrix pl = forward_logits(p, cfg, SequenceView{permuted, 17, 6, 3});
        for (std::size_t i = 0; i < 17; ++i) {
            for (std::size_t j = 0; j < 6; ++j) CHECK(pl(i, j) == base(perm[i], j));
        }
        auto mutated = rb.values;
        for (std::size_t k = 0; k < 18; ++k) mutated[4 * 18 + k] += 3.0;
        const Matrix ml = forward_logits(p, cfg, SequenceView{mutated, 17, 6, 3});
        for (std::size_t i = 0; i < 17; ++i) {
            for (std::size_t j = 0; j < 6; ++j) {
                if (i == 4) continue;
                CHECK(ml(i, j) == base(i, j));
            }
        }
        CHECK_FALSE(ml(4, 0) == base(4, 0));
    }
    SUBCASE("rejects bad input") {
        auto bad = rb.values;
        bad[7] = NAN;
        CHECK_THROWS_AS(forward_logits(p, cfg, SequenceView{bad, 17, 6, 3}), DataError);
        CHECK_THROWS_AS(forward_logits(p, cfg, SequenceView{rb.values, 17, 5, 3}), ShapeError);
        CHECK_THROWS_AS(forward_logits(p, small_config(4, 6, 3), rb.view()), ShapeError);
    }
}

TEST_CASE("backward") {
    std::mt19937_64 gen(10);
    const NetConfig cfg = small_config(4, 5, 2);
    const LstmParams p = init_params(cfg, 3);
    const auto rb = oracle::random_batch(3, 5, 6, gen);
    const ForwardCache cache = forward(p, cfg, rb.view());

    SUBCASE("zero upstream gradient") {
        const Gradients g = backward(p, cfg, cache, Matrix(3, 6));
        g.for_each_array([](const std::string&, const Matrix& m) {
            for (double v : m.values()) CHECK(v == 0.0);
        });
    }
    SUBCASE("output bias gradient is the column sum") {
        const Matrix d = oracle::random_matrix(3, 6, gen);
        const Gradients g = backward(p, cfg, cache, d);
        const Matrix cs = column_sums(d);
        for (std::size_t j = 0; j < 6; ++j) CHECK(g.output_bias(0, j) == doctest::Approx(cs(0, j)).epsilon(1e-14));
    }
    SUBCASE("mismatched upstream gradient") {
        CHECK_THROWS_AS(backward(p, cfg, cache, Matrix(2, 6)), ShapeError);
    }
}

TEST_CASE("l2 penalty") {
    ParameterArrays one;
    one.output_bias = Matrix{{2.0}};
    CHECK(l2_penalty(one, 0.0015) == doctest::Approx(0.003).epsilon(1e-15));
}

TEST_CASE("loss_and_grads") {
    SUBCASE("confident correct predictions") {
        NetConfig cfg = small_config(3, 2, 1, 0.0);
        LstmParams p = init_params(cfg, 0);
        p.output_bias(0, 4) = 60.0;
        std::vector<double> x(4 * 2 * 3, 0.5);
        Matrix y(4, 6);
        for (std::size_t i = 0; i < 4; ++i) y(i, 4) = 1.0;
        const LossAndGrads r = loss_and_grads(p, cfg, SequenceView{x, 4, 2, 3}, y, 0.0);
        CHECK(r.loss < 1e-20);
        CHECK(r.accuracy == 1.0);
    }
    SUBCASE("chunked batches agree with a single backward pass") {
        std::mt19937_64 gen(12);
        const NetConfig cfg = small_config(3, 3, 2);
        const LstmParams p = init_params(cfg, 7);
        const auto rb = oracle::random_batch(150, 3, 6, gen);
        const LossAndGrads r = loss_and_grads(p, cfg, rb.view(), rb.labels, 0.0015);
        const ForwardCache cache = forward(p, cfg, rb.view());
        Matrix d = softmax_rows(cache.logits);
        for (std::size_t i = 0; i < d.size(); ++i) d.data()[i] = (d.data()[i] - rb.labels.data()[i]) / 150.0;
        const Gradients g = backward(p, cfg, cache, d);
        std::vector<const Matrix*> direct, weights;
        g.for_each_array([&](const std::string&, const Matrix& m) { direct.push_back(&m); });
        p.for_each_array([&](const std::string&, const Matrix& m) { weights.push_back(&m); });
        std::size_t k = 0;
        r.grads.for_each_array([&](const std::string&, const Matrix& m) {
            for (std::size_t i = 0; i < m.size(); ++i) {
                const double expected = direct[k]->data()[i] + 0.0015 * weights[k]->data()[i];
                CHECK(std::abs(m.data()[i] - expected) <= 1e-13 * (1.0 + std::abs(expected)));
            }
            ++k;
        });
        CHECK(r.loss == doctest::Approx(oracle::reference_loss(p, cfg, rb.view(), rb.labels, 0.0015)).epsilon(1e-13));
        CHECK(r.logits == cache.logits);
    }
}

TEST_CASE("gradients match central finite differences") {
    std::mt19937_64 gen(13);
    struct Case {
        std::size_t hidden, steps, batch, layers;
        double sigma, l2;
    };
    const Case cases[] = {{4, 5, 2, 3, 0.1, 0.0015}, {4, 5, 2, 3, 0.5, 0.0},  {3, 2, 1, 1, 0.3, 0.0015},
                          {8, 7, 3, 2, 0.2, 0.01},   {2, 3, 2, 3, 1.0, 0.0015}};
    for (const Case& c : cases) {
        const NetConfig cfg = small_config(c.hidden, c.steps, c.layers, c.sigma);
        LstmParams p = init_params(cfg, gen());
        auto rb = oracle::random_batch(c.batch, c.steps, 6, gen);
        while (oracle::relu_margin(p, rb.view()) < 1e-3) rb = oracle::random_batch(c.batch, c.steps, 6, gen);
        const LossAndGrads r = loss_and_grads(p, cfg, rb.view(), rb.labels, c.l2);
        const auto check = oracle::finite_difference_check(p, cfg, rb.view(), rb.labels, c.l2, r.grads);
        INFO("hidden=" << c.hidden << " steps=" << c.steps << " worst=" << check.worst_array);
        CHECK(check.checked == p.parameter_count());
        CHECK(check.max_relative_error < 1e-4);
    }
}
