#include "har/cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include "har/checkpoint.hpp"
#include "har/error.hpp"
#include "har/evaluator.hpp"
#include "har/stream.hpp"
#include "har/synthetic.hpp"
#include "har/trainer.hpp"
#include "har/windowing.hpp"
#include "har/wisdm.hpp"

namespace har::cli {

namespace {

enum class Verbosity { Quiet, Info, Debug };

Verbosity verbosity_from_env() {
    const char* v = std::getenv("HAR_LOG");
    if (v == nullptr) return Verbosity::Info;
    const std::string s(v);
    if (s == "debug") return Verbosity::Debug;
    if (s == "quiet" || s == "warn" || s == "error") return Verbosity::Quiet;
    return Verbosity::Info;
}

/// Options shared by the data-driven subcommands.
struct PipelineOptions {
    std::string data;
    std::string model = "har_model.bin";
    std::uint64_t seed = 0;
    std::size_t time_steps = 200;
    std::size_t step = 20;
    double train_frac = 0.8;
    bool exact_split = false;
    std::size_t max_samples = 0;  // 0 = all
};

struct TrainOptions {
    std::size_t epochs = 500;
    std::size_t batch_size = 1024;
    double lr = 0.0025;
    double l2 = 0.0015;
    std::size_t hidden = 64;
    std::size_t layers = 3;
    double init_sigma = 0.1;
    double forget_bias = 1.0;
    std::size_t log_every = 10;
    std::string metrics = "metrics.csv";
    bool no_shuffle = false;
    bool checkpoint_every_log = false;
};

void add_pipeline_options(CLI::App& cmd, PipelineOptions& o, bool with_model) {
    cmd.add_option("--data", o.data, "WISDM raw accelerometer file")->required();
    if (with_model) cmd.add_option("--model", o.model, "checkpoint path")->capture_default_str();
    cmd.add_option("--seed", o.seed, "seed for initialisation, shuffling and splitting")->capture_default_str();
    cmd.add_option("--time-steps", o.time_steps, "samples per segment")->capture_default_str();
    cmd.add_option("--step", o.step, "stride between segment starts")->capture_default_str();
    cmd.add_option("--train-frac", o.train_frac, "train:test split fraction")->capture_default_str();
    cmd.add_flag("--exact-split", o.exact_split, "shuffle and cut at exactly train-frac instead of per-segment draws");
    cmd.add_option("--max-samples", o.max_samples, "use only the first N accepted samples (0 = all)")
        ->capture_default_str();
}

WindowConfig window_config(const PipelineOptions& o) {
    WindowConfig w{o.time_steps, o.step};
    w.validate();
    return w;
}

SplitConfig split_config(const PipelineOptions& o) {
    SplitConfig s{o.train_frac, o.seed, o.exact_split};
    s.validate();
    return s;
}

struct PreparedData {
    Dataset dataset;
    SegmentSet all;
    SegmentSet train;
    SegmentSet test;
};

PreparedData prepare(const PipelineOptions& o, std::ostream& log, Verbosity v) {
    PreparedData p;
    p.dataset = load_dataset(o.data);
    if (o.max_samples > 0 && p.dataset.samples.size() > o.max_samples) p.dataset.samples.resize(o.max_samples);
    p.all = make_segments(p.dataset.samples, window_config(o));
    std::tie(p.train, p.test) = bernoulli_split(p.all, split_config(o));
    if (v != Verbosity::Quiet) {
        log << "data: " << o.data << " accepted=" << p.dataset.report.accepted
            << " rejected=" << p.dataset.report.rejected << " used_samples=" << p.dataset.samples.size() << '\n'
            << "segments: total=" << p.all.size() << " train=" << p.train.size() << " test=" << p.test.size()
            << '\n';
    }
    return p;
}

void print_banner(std::ostream& out, const char* command, const PipelineOptions& p, const NetConfig* net,
                  const TrainOptions* t) {
    out << "har " << command << " config:"
        << " data=" << p.data << " model=" << p.model << " seed=" << p.seed << " time_steps=" << p.time_steps
        << " step=" << p.step << " train_frac=" << p.train_frac << " exact_split=" << p.exact_split
        << " max_samples=" << p.max_samples;
    if (net != nullptr) {
        out << " features=" << net->features << " hidden=" << net->hidden_units << " layers=" << net->num_layers
            << " classes=" << net->classes << " forget_bias=" << net->forget_bias
            << " init_sigma=" << net->init_sigma;
    }
    if (t != nullptr) {
        out << " epochs=" << t->epochs << " batch_size=" << t->batch_size << " lr=" << t->lr << " l2=" << t->l2
            << " beta1=0.9 beta2=0.999 epsilon=1e-08 shuffle=" << !t->no_shuffle << " log_every=" << t->log_every
            << " metrics=" << t->metrics;
    }
    out << '\n';
}

int cmd_inspect(const PipelineOptions& o, const std::string& stats_csv, std::ostream& out) {
    Dataset ds = load_dataset(o.data);
    if (o.max_samples > 0 && ds.samples.size() > o.max_samples) ds.samples.resize(o.max_samples);
    write_report_text(out, ds.report);
    const auto stats = class_stats(ds.samples);
    out << '\n';
    write_stats_table(out, stats);
    if (!stats_csv.empty()) {
        std::ofstream csv(stats_csv);
        if (!csv) throw IoError("cannot write stats file: " + stats_csv);
        write_stats_csv(csv, stats);
    }
    return kExitOk;
}

int cmd_train(const PipelineOptions& o, const TrainOptions& t, std::ostream& out, Verbosity v) {
    NetConfig net;
    net.time_steps = o.time_steps;
    net.hidden_units = t.hidden;
    net.num_layers = t.layers;
    net.init_sigma = t.init_sigma;
    net.forget_bias = t.forget_bias;
    net.validate();

    TrainConfig cfg;
    cfg.epochs = t.epochs;
    cfg.batch_size = t.batch_size;
    cfg.learning_rate = t.lr;
    cfg.l2_coeff = t.l2;
    cfg.seed = o.seed;
    cfg.shuffle = !t.no_shuffle;
    cfg.log_every = t.log_every;
    cfg.checkpoint_path = o.model;
    cfg.checkpoint_every_log = t.checkpoint_every_log;
    if (!t.metrics.empty()) cfg.metrics_path = t.metrics;
    cfg.validate();
    window_config(o);
    split_config(o);

    print_banner(out, "train", o, &net, &t);
    const PreparedData data = prepare(o, out, v);

    const auto started = std::chrono::steady_clock::now();
    const auto on_log = [&](const EpochMetrics& m) {
        if (v == Verbosity::Quiet) return;
        out << format_log_line(m) << '\n';
        if (v == Verbosity::Debug) {
            const double secs =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
            out << "  train loss " << m.train_loss << " train accuracy " << m.train_accuracy << " elapsed "
                << secs << "s\n";
        }
        out.flush();
    };
    if (v == Verbosity::Debug) cfg.log_every = 1;
    const TrainResult result = train(net, cfg, data.train, data.test, on_log);

    const EpochMetrics& last = result.metrics.back();
    out << "-----\n"
        << "final results: loss: " << last.test_loss << ", accuracy: " << last.test_accuracy << '\n'
        << "checkpoint: " << o.model << '\n';
    if (cfg.metrics_path) out << "metrics: " << cfg.metrics_path->string() << '\n';
    return kExitOk;
}

int cmd_eval(const PipelineOptions& o, double l2, bool all, const std::string& csv_path, std::ostream& out,
             Verbosity v) {
    window_config(o);
    split_config(o);
    const Checkpoint ck = load_checkpoint(o.model);
    if (ck.config.time_steps != o.time_steps) {
        throw ShapeError("model was trained with time_steps=" + std::to_string(ck.config.time_steps) +
                         ", --time-steps is " + std::to_string(o.time_steps));
    }
    print_banner(out, "eval", o, &ck.config, nullptr);
    const PreparedData data = prepare(o, out, v);
    const EvalReport report = evaluate(ck.params, ck.config, all ? data.all : data.test, l2);
    out << "evaluated on: " << (all ? "all segments" : "test split") << '\n';
    write_report_text(out, report);
    out << "-----\n"
        << "final results: loss: " << report.loss << ", accuracy: " << report.accuracy << '\n';
    if (!csv_path.empty()) {
        std::ofstream csv(csv_path);
        if (!csv) throw IoError("cannot write report file: " + csv_path);
        write_report_csv(csv, report);
    }
    return kExitOk;
}

int cmd_predict(const std::string& model, const std::string& input, std::size_t step, std::istream& in,
                std::ostream& out, std::ostream& err) {
    const Checkpoint ck = load_checkpoint(model);
    std::ifstream file;
    if (!input.empty() && input != "-") {
        file.open(input);
        if (!file) throw IoError("cannot open input file: " + input);
    }
    std::istream& source = input.empty() || input == "-" ? in : file;

    StreamClassifier stream(ck.params, ck.config, step);
    out << std::setprecision(6);
    std::string line;
    std::size_t malformed = 0;
    while (std::getline(source, line)) {
        std::istringstream fields(line);
        std::array<double, 3> v{};
        char sep = 0;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        if (!(fields >> v[0] >> sep >> v[1] >> sep >> v[2])) {
            ++malformed;
            continue;
        }
        if (const auto p = stream.push_sample(v[0], v[1], v[2])) {
            out << p->sample_index << ',' << activity_name(p->label);
            for (double prob : p->probabilities) out << ',' << prob;
            out << '\n';
        }
    }
    if (malformed > 0 || stream.rejected() > 0) {
        err << "skipped " << malformed << " malformed and " << stream.rejected() << " non-finite lines\n";
    }
    return kExitOk;
}

int cmd_synth(const SyntheticConfig& cfg, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write synthetic data file: " + path);
    out << synthesize_raw_file(cfg);
    return kExitOk;
}

} // namespace

int run(std::span<const std::string> argv, std::istream& in, std::ostream& out, std::ostream& err) {
    CLI::App app{"Human activity recognition from tri-axial accelerometer data with a stacked LSTM"};
    app.name(argv.empty() ? "har" : argv.front());
    app.require_subcommand(1);

    PipelineOptions pipe;
    TrainOptions topt;
    std::string stats_csv;
    double eval_l2 = 0.0015;
    bool eval_all = false;
    std::string eval_csv;
    std::string predict_input;
    std::size_t predict_step = 20;
    std::string predict_model = pipe.model;
    SyntheticConfig synth;
    std::string synth_out;

    CLI::App* inspect = app.add_subcommand("inspect", "ingest report and per-class axis statistics");
    inspect->add_option("--data", pipe.data, "WISDM raw accelerometer file")->required();
    inspect->add_option("--max-samples", pipe.max_samples, "only the first N accepted samples (0 = all)");
    inspect->add_option("--stats-csv", stats_csv, "also write statistics as CSV");

    CLI::App* train_cmd = app.add_subcommand("train", "segment, split, train and write checkpoint + metrics");
    add_pipeline_options(*train_cmd, pipe, true);
    train_cmd->add_option("--epochs", topt.epochs)->capture_default_str();
    train_cmd->add_option("--batch-size", topt.batch_size)->capture_default_str();
    train_cmd->add_option("--lr", topt.lr, "Adam learning rate")->capture_default_str();
    train_cmd->add_option("--l2", topt.l2, "L2 coefficient")->capture_default_str();
    train_cmd->add_option("--hidden", topt.hidden, "LSTM units per layer")->capture_default_str();
    train_cmd->add_option("--layers", topt.layers, "stacked LSTM layers")->capture_default_str();
    train_cmd->add_option("--init-sigma", topt.init_sigma, "weight init stddev")->capture_default_str();
    train_cmd->add_option("--forget-bias", topt.forget_bias)->capture_default_str();
    train_cmd->add_option("--log-every", topt.log_every, "epochs between log lines")->capture_default_str();
    train_cmd->add_option("--metrics", topt.metrics, "per-epoch metrics CSV (empty to skip)")->capture_default_str();
    train_cmd->add_flag("--no-shuffle", topt.no_shuffle, "keep batch order fixed across epochs");
    train_cmd->add_flag("--checkpoint-every-log", topt.checkpoint_every_log, "rewrite the checkpoint at each log");

    CLI::App* eval_cmd = app.add_subcommand("eval", "confusion matrix and accuracy of a checkpoint");
    add_pipeline_options(*eval_cmd, pipe, true);
    eval_cmd->add_option("--l2", eval_l2, "L2 coefficient included in the reported loss")->capture_default_str();
    eval_cmd->add_flag("--all", eval_all, "evaluate every segment instead of the test split");
    eval_cmd->add_option("--csv", eval_csv, "also write the report as CSV");

    CLI::App* predict = app.add_subcommand("predict", "stream x,y,z lines through a checkpoint");
    predict->add_option("--model", predict_model, "checkpoint path")->capture_default_str();
    predict->add_option("--input", predict_input, "x,y,z file (default: standard input)");
    predict->add_option("--step", predict_step, "samples between predictions")->capture_default_str();

    CLI::App* synth_cmd = app.add_subcommand("synth", "write a synthetic WISDM-format recording");
    synth_cmd->add_option("--out", synth_out, "output path")->required();
    synth_cmd->add_option("--samples", synth.samples)->capture_default_str();
    synth_cmd->add_option("--users", synth.users)->capture_default_str();
    synth_cmd->add_option("--seed", synth.seed)->capture_default_str();

    std::vector<const char*> raw;
    raw.reserve(argv.size());
    for (const std::string& a : argv) raw.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(raw.size()), raw.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return kExitUsage;
    }

    const Verbosity v = verbosity_from_env();
    try {
        if (inspect->parsed()) return cmd_inspect(pipe, stats_csv, out);
        if (train_cmd->parsed()) return cmd_train(pipe, topt, out, v);
        if (eval_cmd->parsed()) return cmd_eval(pipe, eval_l2, eval_all, eval_csv, out, v);
        if (predict->parsed()) {
            if (predict_step < 1) throw std::invalid_argument("--step must be >= 1");
            return cmd_predict(predict_model, predict_input, predict_step, in, out, err);
        }
        if (synth_cmd->parsed()) return cmd_synth(synth, synth_out);
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitData;
    }
    return kExitUsage;
}

} // namespace har::cli
