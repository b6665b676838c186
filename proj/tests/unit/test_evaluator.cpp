#include <doctest.h>

#include <map>
#include <random>
#include <sstream>

#include "har/error.hpp"
#include "har/evaluator.hpp"
#include "har/synthetic.hpp"
#include "support/oracles.hpp"

using namespace har;

namespace {
constexpr std::size_t idx(ActivityLabel a) { return class_index(a); }
} // namespace

TEST_CASE("confusion examples") {
    const std::vector<std::size_t> truth = {0, 1, 2, 3, 4, 5, 5};
    const ConfusionMatrix diag = confusion(truth, truth);
    CHECK(diag.trace() == 7);
    CHECK(diag.total() == 7);

    const std::vector<std::size_t> t2 = {idx(ActivityLabel::Walking), idx(ActivityLabel::Walking)};
    const std::vector<std::size_t> p2 = {idx(ActivityLabel::Upstairs), idx(ActivityLabel::Walking)};
    const ConfusionMatrix cm = confusion(t2, p2);
    CHECK(cm.counts[idx(ActivityLabel::Walking)][idx(ActivityLabel::Upstairs)] == 1);
    CHECK(cm.counts[idx(ActivityLabel::Walking)][idx(ActivityLabel::Walking)] == 1);
    CHECK(cm.total() == 2);

    CHECK_THROWS_AS(confusion(t2, std::vector<std::size_t>{1}), std::invalid_argument);
    CHECK_THROWS_AS(confusion(std::vector<std::size_t>{6}, std::vector<std::size_t>{0}), std::invalid_argument);
}

TEST_CASE("confusion matches a dictionary tally") {
    std::mt19937_64 gen(21);
    std::vector<std::size_t> t(200), p(200);
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> tally;
    for (std::size_t i = 0; i < 200; ++i) {
        t[i] = gen() % 6;
        p[i] = gen() % 6;
        ++tally[{t[i], p[i]}];
    }
    const ConfusionMatrix cm = confusion(t, p);
    for (std::size_t a = 0; a < 6; ++a) {
        std::size_t truth_count = 0;
        for (std::size_t i = 0; i < 200; ++i) truth_count += t[i] == a;
        CHECK(cm.row_sum(a) == truth_count);
        for (std::size_t b = 0; b < 6; ++b) {
            const auto it = tally.find({a, b});
            CHECK(cm.counts[a][b] == (it == tally.end() ? 0 : it->second));
        }
    }
    // evaluation order does not matter
    std::vector<std::size_t> order(200);
    for (std::size_t i = 0; i < 200; ++i) order[i] = (i * 77) % 200;
    std::vector<std::size_t> ts, ps;
    for (std::size_t i : order) {
        ts.push_back(t[i]);
        ps.push_back(p[i]);
    }
    CHECK(confusion(ts, ps) == cm);
}

TEST_CASE("report metrics") {
    ConfusionMatrix cm;
    cm.counts[0][0] = 8;
    cm.counts[0][4] = 2;
    cm.counts[4][4] = 5;
    cm.counts[5][0] = 3;
    cm.counts[5][4] = 1;
    const EvalReport r = make_report(cm, 0.25, 2);
    CHECK(r.accuracy == 13.0 / 19.0);
    CHECK(r.loss == 0.25);
    CHECK(r.per_class[0].precision == doctest::Approx(8.0 / 11.0));
    CHECK(r.per_class[0].recall == doctest::Approx(0.8));
    CHECK(r.per_class[5].recall == 0.0);
    CHECK_FALSE(r.per_class[5].recall_undefined);
    CHECK(r.per_class[5].precision == 0.0);
    CHECK(r.per_class[5].precision_undefined);
    CHECK(r.per_class[1].recall_undefined);
    REQUIRE(r.top_confusions.size() == 2);
    CHECK(r.top_confusions[0].truth == 5);
    CHECK(r.top_confusions[0].predicted == 0);
    CHECK(r.top_confusions[0].count == 3);
    CHECK(r.top_confusions[1].count == 2);

    std::ostringstream text, csv;
    write_report_text(text, r);
    write_report_csv(csv, r);
    CHECK(text.str().find("Walk") != std::string::npos);
    CHECK(csv.str().rfind("true,pred,count\n", 0) == 0);
    CHECK(csv.str().find("Walking,Downstairs,3") != std::string::npos);
    CHECK(csv.str().find("accuracy,") != std::string::npos);
}

TEST_CASE("evaluate agrees with an independent argmax count") {
    SyntheticConfig sc;
    sc.samples = 2000;
    sc.min_run = 100;
    sc.max_run = 300;
    const SegmentSet set = make_segments(synthesize_recording(sc), {12, 6});
    NetConfig net;
    net.hidden_units = 5;
    net.time_steps = 12;
    net.num_layers = 2;
    net.init_sigma = 0.6;
    const LstmParams p = init_params(net, 2);
    const EvalReport r = evaluate(p, net, set, 0.0015);

    const Matrix logits = forward_logits(p, net, set.view());
    std::size_t hits = 0;
    for (std::size_t i = 0; i < set.size(); ++i) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < 6; ++j) {
            if (logits(i, j) > logits(i, best)) best = j;
        }
        hits += best == set.label_index(i);
    }
    CHECK(r.accuracy == static_cast<double>(hits) / static_cast<double>(set.size()));
    CHECK(r.accuracy == static_cast<double>(r.confusion.trace()) / static_cast<double>(r.confusion.total()));
    const auto counts = set.class_counts();
    for (std::size_t a = 0; a < 6; ++a) CHECK(r.confusion.row_sum(a) == counts[a]);
    CHECK(r.loss == doctest::Approx(oracle::reference_loss(p, net, set.view(), set.labels, 0.0015)).epsilon(1e-12));

    CHECK_THROWS_AS(evaluate(p, net, SegmentSet{}, 0.0), DataError);
    NetConfig wrong = net;
    wrong.time_steps = 11;
    CHECK_THROWS(evaluate(init_params(wrong, 2), wrong, set, 0.0));
}
