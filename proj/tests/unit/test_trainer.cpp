#include <doctest.h>

#include <cmath>
#include <sstream>

#include "har/synthetic.hpp"
#include "har/trainer.hpp"
#include "har/windowing.hpp"

using namespace har;

namespace {

ParameterArrays scalar_params(double w) {
    ParameterArrays p;
    p.output_bias = Matrix{{w}};
    return p;
}

Gradients scalar_grad(double g) {
    Gradients grads;
    grads.output_bias = Matrix{{g}};
    return grads;
}

struct ToyData {
    NetConfig net;
    SegmentSet train;
    SegmentSet test;
};

ToyData toy_data(std::size_t samples = 3000) {
    SyntheticConfig sc;
    sc.samples = samples;
    sc.min_run = 100;
    sc.max_run = 400;
    sc.seed = 4;
    const auto recording = synthesize_recording(sc);
    const SegmentSet all = make_segments(recording, {16, 16});
    auto [train, test] = bernoulli_split(all, {0.8, 1, false});
    ToyData d;
    d.net.hidden_units = 6;
    d.net.time_steps = 16;
    d.net.num_layers = 2;
    d.train = std::move(train);
    d.test = std::move(test);
    return d;
}

} // namespace

TEST_CASE("TrainConfig validation") {
    TrainConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.learning_rate = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = TrainConfig{};
    cfg.beta2 = 1.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = TrainConfig{};
    cfg.batch_size = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("adam_step") {
    const TrainConfig cfg;
    SUBCASE("zero gradient leaves params unchanged") {
        ParameterArrays p = scalar_params(1.25);
        AdamState s = AdamState::zeros_like(p);
        adam_step(s, p, scalar_grad(0.0), cfg);
        CHECK(p.output_bias(0, 0) == 1.25);
        CHECK(s.t == 1);
    }
    SUBCASE("first step moves by about lr against the gradient sign") {
        for (double g : {3.0, -0.02, 1e-3}) {
            ParameterArrays p = scalar_params(0.0);
            AdamState s = AdamState::zeros_like(p);
            adam_step(s, p, scalar_grad(g), cfg);
            CHECK(p.output_bias(0, 0) == doctest::Approx(-cfg.learning_rate * (g > 0 ? 1 : -1)).epsilon(1e-4));
        }
    }
    SUBCASE("scalar quadratic follows the textbook recurrence") {
        // Oracle: the update rule written out for one scalar.
        double w = 0.0, m = 0.0, v = 0.0;
        ParameterArrays p = scalar_params(0.0);
        AdamState s = AdamState::zeros_like(p);
        std::size_t first_within = 0;
        for (int t = 1; t <= 4000; ++t) {
            const double g = 2.0 * (w - 3.0);
            m = 0.9 * m + 0.1 * g;
            v = 0.999 * v + 0.001 * g * g;
            const double mh = m / (1.0 - std::pow(0.9, t));
            const double vh = v / (1.0 - std::pow(0.999, t));
            w -= 0.0025 * mh / (std::sqrt(vh) + 1e-8);
            adam_step(s, p, scalar_grad(2.0 * (p.output_bias(0, 0) - 3.0)), cfg);
            CHECK(p.output_bias(0, 0) == doctest::Approx(w).epsilon(1e-13));
            if (first_within == 0 && std::abs(w - 3.0) < 1e-3) first_within = static_cast<std::size_t>(t);
        }
        CHECK(first_within > 0);
        CHECK(first_within <= 4000);
        CHECK(std::abs(p.output_bias(0, 0) - 3.0) < 1e-3);
    }
    SUBCASE("beta1 = beta2 = 0 normalises the gradient") {
        TrainConfig c;
        c.beta1 = 0.0;
        c.beta2 = 0.0;
        ParameterArrays p = scalar_params(0.5);
        AdamState s = AdamState::zeros_like(p);
        for (double g : {2.0, -0.5, 1e-9}) {
            const double before = p.output_bias(0, 0);
            adam_step(s, p, scalar_grad(g), c);
            CHECK(p.output_bias(0, 0) - before ==
                  doctest::Approx(-c.learning_rate * g / (std::abs(g) + c.epsilon)).epsilon(1e-12));
        }
    }
    SUBCASE("l2 gradient alone shrinks the parameter norm") {
        NetConfig net;
        net.hidden_units = 4;
        net.time_steps = 3;
        ParameterArrays p = init_params(net, 1);
        AdamState s = AdamState::zeros_like(p);
        double norm = 0.0;
        p.for_each_array([&](const std::string&, const Matrix& m) { norm += sum_squares(m); });
        for (int step = 0; step < 10; ++step) {
            Gradients g = Gradients::zeros_like(p);
            std::vector<const Matrix*> w;
            p.for_each_array([&](const std::string&, const Matrix& m) { w.push_back(&m); });
            std::size_t k = 0;
            g.for_each_array([&](const std::string&, Matrix& m) {
                for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = 0.0015 * w[k]->data()[i];
                ++k;
            });
            adam_step(s, p, g, cfg);
            double next = 0.0;
            p.for_each_array([&](const std::string&, const Matrix& m) { next += sum_squares(m); });
            CHECK(next < norm);
            norm = next;
        }
    }
    SUBCASE("non-finite gradient names the array") {
        ParameterArrays p = scalar_params(0.0);
        AdamState s = AdamState::zeros_like(p);
        try {
            adam_step(s, p, scalar_grad(NAN), cfg);
            FAIL("expected TrainingDiverged");
        } catch (const TrainingDiverged& e) {
            CHECK(std::string(e.what()).find("output_bias") != std::string::npos);
        }
        CHECK(p.output_bias(0, 0) == 0.0);
    }
}

TEST_CASE("training loop") {
    const ToyData d = toy_data();
    REQUIRE(d.train.size() > 64);
    TrainConfig cfg;
    cfg.epochs = 20;
    cfg.batch_size = 50;
    cfg.log_every = 7;
    cfg.seed = 3;

    std::vector<std::size_t> logged;
    const TrainResult a = train(d.net, cfg, d.train, d.test, [&](const EpochMetrics& m) { logged.push_back(m.epoch); });
    const TrainResult b = train(d.net, cfg, d.train, d.test);

    SUBCASE("metrics are indexed once per epoch") {
        REQUIRE(a.metrics.size() == 20);
        for (std::size_t i = 0; i < a.metrics.size(); ++i) {
            CHECK(a.metrics[i].epoch == i);
            CHECK(a.metrics[i].train_loss >= 0.0);
            CHECK(a.metrics[i].test_accuracy >= 0.0);
            CHECK(a.metrics[i].test_accuracy <= 1.0);
        }
        CHECK(logged == std::vector<std::size_t>{0, 7, 14});
    }
    SUBCASE("reruns are bit-identical") {
        CHECK(a.metrics == b.metrics);
        CHECK(a.params == b.params);
        std::ostringstream ca, cb;
        write_metrics_csv(ca, a.metrics);
        write_metrics_csv(cb, b.metrics);
        CHECK(ca.str() == cb.str());
        CHECK(ca.str().rfind("epoch,train_loss,train_acc,test_loss,test_acc\n0,", 0) == 0);
    }
    SUBCASE("loss falls below its initial value") {
        const SetMetrics initial = measure(init_params(d.net, cfg.seed), d.net, d.train, cfg.l2_coeff);
        bool dropped = false;
        for (const auto& m : a.metrics) dropped = dropped || m.train_loss < initial.loss;
        CHECK(dropped);
        CHECK(a.metrics.back().train_loss < initial.loss);
    }
    SUBCASE("shuffle seed changes the trajectory") {
        TrainConfig other = cfg;
        other.epochs = 2;
        other.seed = 4;
        TrainConfig same = cfg;
        same.epochs = 2;
        CHECK_FALSE(train(d.net, other, d.train, d.test).metrics == train(d.net, same, d.train, d.test).metrics);
    }
    SUBCASE("empty sets are rejected") {
        CHECK_THROWS(train(d.net, cfg, SegmentSet{}, d.test));
        CHECK_THROWS(train(d.net, cfg, d.train, SegmentSet{}));
    }
}

TEST_CASE("log line format") {
    EpochMetrics m;
    m.epoch = 10;
    m.test_loss = 0.5;
    m.test_accuracy = 0.875;
    CHECK(format_log_line(m) == "epoch: 10: loss: 0.5, accuracy: 0.875");
}
