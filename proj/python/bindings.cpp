#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <algorithm>
#include <cstring>
#include <memory>
#include <sstream>

#include "har/checkpoint.hpp"
#include "har/cli.hpp"
#include "har/error.hpp"
#include "har/evaluator.hpp"
#include "har/stream.hpp"
#include "har/synthetic.hpp"
#include "har/trainer.hpp"
#include "har/windowing.hpp"
#include "har/wisdm.hpp"

namespace py = pybind11;
using namespace har;

namespace {

using F64Array = py::array_t<double, py::array::c_style | py::array::forcecast>;
using IndexArray = py::array_t<std::int64_t, py::array::c_style | py::array::forcecast>;

py::array_t<double> to_numpy(const Matrix& m) {
    py::array_t<double> out({m.rows(), m.cols()});
    std::memcpy(out.mutable_data(), m.data(), m.size() * sizeof(double));
    return out;
}

template <class T>
py::array_t<T> copy_to_numpy(std::span<const T> values) {
    py::array_t<T> out(static_cast<py::ssize_t>(values.size()));
    std::copy(values.begin(), values.end(), out.mutable_data());
    return out;
}

Matrix from_numpy(const F64Array& a) {
    if (a.ndim() != 2) throw std::invalid_argument("expected a 2-d array");
    const auto rows = static_cast<std::size_t>(a.shape(0));
    const auto cols = static_cast<std::size_t>(a.shape(1));
    return Matrix(rows, cols, std::vector<double>(a.data(), a.data() + rows * cols));
}

/// X: [n, time_steps, 3]; y: class indices [n] or one-hot [n, 6].
SegmentSet to_segments(const F64Array& x, const py::array& y) {
    if (x.ndim() != 3 || x.shape(2) != static_cast<py::ssize_t>(kFeatures)) {
        throw std::invalid_argument("X must have shape (n, time_steps, 3)");
    }
    const auto n = static_cast<std::size_t>(x.shape(0));
    SegmentSet set;
    set.time_steps = static_cast<std::size_t>(x.shape(1));
    set.data.assign(x.data(), x.data() + x.size());
    if (y.ndim() == 2) {
        set.labels = from_numpy(F64Array::ensure(y));
        if (set.labels.rows() != n || set.labels.cols() != kNumClasses) {
            throw std::invalid_argument("one-hot y must have shape (n, 6)");
        }
    } else {
        const IndexArray idx = IndexArray::ensure(y);
        if (idx.ndim() != 1 || static_cast<std::size_t>(idx.shape(0)) != n) {
            throw std::invalid_argument("y must have shape (n,) or (n, 6)");
        }
        set.labels = Matrix(n, kNumClasses);
        for (std::size_t i = 0; i < n; ++i) {
            const auto c = idx.data()[i];
            if (c < 0 || c >= static_cast<std::int64_t>(kNumClasses)) throw std::invalid_argument("label out of range");
            set.labels(i, static_cast<std::size_t>(c)) = 1.0;
        }
    }
    return set;
}

py::tuple from_segments(const SegmentSet& set) {
    py::array_t<double> x({set.size(), set.time_steps, kFeatures});
    std::memcpy(x.mutable_data(), set.data.data(), set.data.size() * sizeof(double));
    py::array_t<std::int64_t> y(set.size());
    for (std::size_t i = 0; i < set.size(); ++i) y.mutable_data()[i] = static_cast<std::int64_t>(set.label_index(i));
    return py::make_tuple(x, y);
}

std::vector<Sample> to_samples(const F64Array& xyz, const IndexArray& labels) {
    if (xyz.ndim() != 2 || xyz.shape(1) != 3) throw std::invalid_argument("samples must have shape (n, 3)");
    if (labels.ndim() != 1 || labels.shape(0) != xyz.shape(0)) {
        throw std::invalid_argument("labels must have shape (n,)");
    }
    std::vector<Sample> out(static_cast<std::size_t>(xyz.shape(0)));
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i].activity = activity_from_index(static_cast<std::size_t>(labels.data()[i]));
        out[i].timestamp = i;
        out[i].x = xyz.data()[3 * i];
        out[i].y = xyz.data()[3 * i + 1];
        out[i].z = xyz.data()[3 * i + 2];
    }
    return out;
}

py::dict report_dict(const IngestReport& r) {
    py::dict reasons;
    for (const auto& [reason, count] : r.rejection_reasons) reasons[py::str(std::string(reject_reason_name(reason)))] = count;
    py::dict per_class;
    for (std::size_t c = 0; c < kNumClasses; ++c) per_class[py::str(std::string(kActivityNames[c]))] = r.per_class_counts[c];
    py::dict d;
    d["accepted"] = r.accepted;
    d["rejected"] = r.rejected;
    d["rejection_reasons"] = reasons;
    d["per_class_counts"] = per_class;
    d["checksum"] = r.checksum;
    return d;
}

py::dict dataset_dict(const Dataset& ds) {
    const std::size_t n = ds.samples.size();
    py::array_t<double> xyz({n, std::size_t{3}});
    py::array_t<std::int64_t> labels(n), users(n);
    py::array_t<std::uint64_t> timestamps(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Sample& s = ds.samples[i];
        xyz.mutable_data()[3 * i] = s.x;
        xyz.mutable_data()[3 * i + 1] = s.y;
        xyz.mutable_data()[3 * i + 2] = s.z;
        labels.mutable_data()[i] = static_cast<std::int64_t>(class_index(s.activity));
        users.mutable_data()[i] = static_cast<std::int64_t>(s.user_id);
        timestamps.mutable_data()[i] = s.timestamp;
    }
    py::dict d;
    d["xyz"] = xyz;
    d["labels"] = labels;
    d["users"] = users;
    d["timestamps"] = timestamps;
    d["report"] = report_dict(ds.report);
    return d;
}

/// Owns the parameters a stream classifier refers to.
struct PyStream {
    std::shared_ptr<const Checkpoint> model;
    StreamClassifier stream;

    PyStream(std::shared_ptr<const Checkpoint> m, std::size_t step)
        : model(std::move(m)), stream(model->params, model->config, step) {}
};

py::dict metrics_dict(const EpochMetrics& m) {
    py::dict d;
    d["epoch"] = m.epoch;
    d["train_loss"] = m.train_loss;
    d["train_acc"] = m.train_accuracy;
    d["test_loss"] = m.test_loss;
    d["test_acc"] = m.test_accuracy;
    return d;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "LSTM human activity recognition on tri-axial accelerometer data";

    auto base = py::register_exception<Error>(m, "HarError", PyExc_RuntimeError);
    py::register_exception<ShapeError>(m, "ShapeError", base.ptr());
    py::register_exception<IoError>(m, "IoError", base.ptr());
    py::register_exception<DataError>(m, "DataError", base.ptr());
    py::register_exception<CheckpointError>(m, "CheckpointError", base.ptr());
    py::register_exception<TrainingDiverged>(m, "TrainingDiverged", base.ptr());

    m.attr("ACTIVITIES") = py::cast(std::vector<std::string>(kActivityNames.begin(), kActivityNames.end()));

    py::class_<NetConfig>(m, "NetConfig")
        .def(py::init([](std::size_t hidden_units, std::size_t num_layers, std::size_t time_steps,
                         double forget_bias, double init_sigma) {
                 NetConfig c;
                 c.hidden_units = hidden_units;
                 c.num_layers = num_layers;
                 c.time_steps = time_steps;
                 c.forget_bias = forget_bias;
                 c.init_sigma = init_sigma;
                 c.validate();
                 return c;
             }),
             py::arg("hidden_units") = 64, py::arg("num_layers") = 3, py::arg("time_steps") = 200,
             py::arg("forget_bias") = 1.0, py::arg("init_sigma") = 0.1)
        .def_readonly("features", &NetConfig::features)
        .def_readonly("classes", &NetConfig::classes)
        .def_readwrite("hidden_units", &NetConfig::hidden_units)
        .def_readwrite("num_layers", &NetConfig::num_layers)
        .def_readwrite("time_steps", &NetConfig::time_steps)
        .def_readwrite("forget_bias", &NetConfig::forget_bias)
        .def_readwrite("init_sigma", &NetConfig::init_sigma)
        .def("__eq__", [](const NetConfig& a, const NetConfig& b) { return a == b; })
        .def("__repr__", [](const NetConfig& c) {
            std::ostringstream s;
            s << "NetConfig(hidden_units=" << c.hidden_units << ", num_layers=" << c.num_layers
              << ", time_steps=" << c.time_steps << ", forget_bias=" << c.forget_bias
              << ", init_sigma=" << c.init_sigma << ")";
            return s.str();
        });

    py::class_<TrainConfig>(m, "TrainConfig")
        .def(py::init([](std::size_t epochs, std::size_t batch_size, double learning_rate, double l2_coeff,
                         std::uint64_t seed, bool shuffle, std::size_t log_every) {
                 TrainConfig c;
                 c.epochs = epochs;
                 c.batch_size = batch_size;
                 c.learning_rate = learning_rate;
                 c.l2_coeff = l2_coeff;
                 c.seed = seed;
                 c.shuffle = shuffle;
                 c.log_every = log_every;
                 c.validate();
                 return c;
             }),
             py::arg("epochs") = 500, py::arg("batch_size") = 1024, py::arg("learning_rate") = 0.0025,
             py::arg("l2_coeff") = 0.0015, py::arg("seed") = 0, py::arg("shuffle") = true,
             py::arg("log_every") = 10)
        .def_readwrite("epochs", &TrainConfig::epochs)
        .def_readwrite("batch_size", &TrainConfig::batch_size)
        .def_readwrite("learning_rate", &TrainConfig::learning_rate)
        .def_readwrite("l2_coeff", &TrainConfig::l2_coeff)
        .def_readwrite("beta1", &TrainConfig::beta1)
        .def_readwrite("beta2", &TrainConfig::beta2)
        .def_readwrite("epsilon", &TrainConfig::epsilon)
        .def_readwrite("seed", &TrainConfig::seed)
        .def_readwrite("shuffle", &TrainConfig::shuffle)
        .def_readwrite("log_every", &TrainConfig::log_every);

    py::class_<Checkpoint, std::shared_ptr<Checkpoint>>(m, "Model")
        .def(py::init([](const NetConfig& cfg, std::uint64_t seed) {
                 cfg.validate();
                 return std::make_shared<Checkpoint>(Checkpoint{cfg, init_params(cfg, seed), seed});
             }),
             py::arg("config"), py::arg("seed") = 0)
        .def_static("load", [](const std::filesystem::path& p) { return std::make_shared<Checkpoint>(load_checkpoint(p)); })
        .def_static("from_bytes",
                    [](const py::bytes& b) { return std::make_shared<Checkpoint>(decode_checkpoint(std::string(b))); })
        .def("save", [](const Checkpoint& c, const std::filesystem::path& p) { save_checkpoint(c, p); })
        .def("to_bytes", [](const Checkpoint& c) { return py::bytes(encode_checkpoint(c)); })
        .def_readonly("config", &Checkpoint::config)
        .def_readonly("init_seed", &Checkpoint::init_seed)
        .def_property_readonly("parameter_count", [](const Checkpoint& c) { return c.params.parameter_count(); })
        .def("arrays",
             [](const Checkpoint& c) {
                 py::dict d;
                 c.params.for_each_array([&](const std::string& name, const Matrix& a) { d[py::str(name)] = to_numpy(a); });
                 return d;
             },
             "Copies of every parameter array keyed by name.")
        .def("logits",
             [](const Checkpoint& c, const F64Array& x) {
                 if (x.ndim() != 3) throw std::invalid_argument("X must have shape (n, time_steps, 3)");
                 const SequenceView view{std::span<const double>(x.data(), static_cast<std::size_t>(x.size())),
                                         static_cast<std::size_t>(x.shape(0)), static_cast<std::size_t>(x.shape(1)),
                                         static_cast<std::size_t>(x.shape(2))};
                 Matrix logits;
                 {
                     py::gil_scoped_release release;
                     logits = forward_logits(c.params, c.config, view);
                 }
                 return to_numpy(logits);
             },
             py::arg("X"))
        .def("predict_proba",
             [](const Checkpoint& c, const F64Array& x) {
                 if (x.ndim() != 3) throw std::invalid_argument("X must have shape (n, time_steps, 3)");
                 const SequenceView view{std::span<const double>(x.data(), static_cast<std::size_t>(x.size())),
                                         static_cast<std::size_t>(x.shape(0)), static_cast<std::size_t>(x.shape(1)),
                                         static_cast<std::size_t>(x.shape(2))};
                 return to_numpy(softmax_rows(forward_logits(c.params, c.config, view)));
             },
             py::arg("X"))
        .def("evaluate",
             [](const Checkpoint& c, const F64Array& x, const py::array& y, double l2) {
                 const EvalReport r = evaluate(c.params, c.config, to_segments(x, y), l2);
                 py::array_t<std::int64_t> cm({kNumClasses, kNumClasses});
                 for (std::size_t i = 0; i < kNumClasses; ++i) {
                     for (std::size_t j = 0; j < kNumClasses; ++j) {
                         cm.mutable_data()[i * kNumClasses + j] = static_cast<std::int64_t>(r.confusion.counts[i][j]);
                     }
                 }
                 py::dict d;
                 d["confusion"] = cm;
                 d["accuracy"] = r.accuracy;
                 d["loss"] = r.loss;
                 py::list precision, recall;
                 for (const auto& s : r.per_class) {
                     precision.append(s.precision);
                     recall.append(s.recall);
                 }
                 d["precision"] = precision;
                 d["recall"] = recall;
                 std::ostringstream text;
                 write_report_text(text, r);
                 d["text"] = text.str();
                 return d;
             },
             py::arg("X"), py::arg("y"), py::arg("l2_coeff") = 0.0015);

    m.def(
        "train",
        [](const NetConfig& net, const TrainConfig& cfg, const F64Array& x_train, const py::array& y_train,
           const F64Array& x_test, const py::array& y_test, const std::function<void(py::dict)>& on_log) {
            net.validate();
            cfg.validate();
            const SegmentSet train_set = to_segments(x_train, y_train);
            const SegmentSet test_set = to_segments(x_test, y_test);
            EpochCallback cb;
            if (on_log) {
                cb = [&](const EpochMetrics& em) {
                    py::gil_scoped_acquire acquire;
                    on_log(metrics_dict(em));
                };
            }
            TrainResult result;
            {
                py::gil_scoped_release release;
                result = har::train(net, cfg, train_set, test_set, cb);
            }
            py::list metrics;
            for (const auto& em : result.metrics) metrics.append(metrics_dict(em));
            auto model = std::make_shared<Checkpoint>(Checkpoint{net, std::move(result.params), cfg.seed});
            return py::make_tuple(model, metrics);
        },
        py::arg("net"), py::arg("config"), py::arg("X_train"), py::arg("y_train"), py::arg("X_test"),
        py::arg("y_test"), py::arg("on_log") = nullptr,
        "Trains from a seeded initialisation; returns (Model, list of per-epoch metric dicts).");

    m.def(
        "parse_line",
        [](const std::string& line) -> py::object {
            const ParseResult r = har::parse_line(line);
            if (const auto* reason = std::get_if<RejectReason>(&r)) return py::str(std::string(reject_reason_name(*reason)));
            const Sample& s = std::get<Sample>(r);
            py::dict d;
            d["user"] = s.user_id;
            d["activity"] = std::string(activity_name(s.activity));
            d["timestamp"] = s.timestamp;
            d["x"] = s.x;
            d["y"] = s.y;
            d["z"] = s.z;
            return d;
        },
        py::arg("line"), "Parsed record as a dict, or the rejection reason as a string.");
    m.def("load_dataset", [](const std::filesystem::path& p) { return dataset_dict(har::load_dataset(p)); },
          py::arg("path"));
    m.def("parse_dataset", [](const std::string& text) { return dataset_dict(har::parse_dataset(text)); },
          py::arg("text"));
    m.def(
        "make_segments",
        [](const F64Array& xyz, const IndexArray& labels, std::size_t time_steps, std::size_t step) {
            const WindowConfig wc{time_steps, step};
            wc.validate();
            return from_segments(har::make_segments(to_samples(xyz, labels), wc));
        },
        py::arg("xyz"), py::arg("labels"), py::arg("time_steps") = 200, py::arg("step") = 20,
        "Returns (X [n, time_steps, 3], y class indices [n]).");
    m.def(
        "split_indices",
        [](std::size_t n, double train_fraction, std::uint64_t seed, bool exact) {
            const SplitConfig sc{train_fraction, seed, exact};
            sc.validate();
            const SplitIndices s = har::split_indices(n, sc);
            return py::make_tuple(copy_to_numpy<std::size_t>(s.first), copy_to_numpy<std::size_t>(s.second));
        },
        py::arg("n"), py::arg("train_fraction") = 0.8, py::arg("seed") = 0, py::arg("exact_fraction") = false);
    m.def(
        "synthesize",
        [](std::size_t samples, std::size_t users, std::uint64_t seed) {
            SyntheticConfig sc;
            sc.samples = samples;
            sc.users = users;
            sc.seed = seed;
            return synthesize_raw_file(sc);
        },
        py::arg("samples") = 100000, py::arg("users") = 6, py::arg("seed") = 1,
        "Synthetic recording in the WISDM raw text format.");

    py::class_<PyStream>(m, "StreamClassifier")
        .def(py::init([](std::shared_ptr<Checkpoint> model, std::size_t step) {
                 return std::make_unique<PyStream>(std::move(model), step);
             }),
             py::arg("model"), py::arg("step") = 20)
        .def(
            "push",
            [](PyStream& s, double x, double y, double z) -> py::object {
                const auto p = s.stream.push_sample(x, y, z);
                if (!p) return py::none();
                return py::make_tuple(p->sample_index, std::string(activity_name(p->label)),
                                      copy_to_numpy<double>(p->probabilities));
            },
            py::arg("x"), py::arg("y"), py::arg("z"),
            "Returns (sample_index, label, probabilities) when a window is emitted, else None.")
        .def_property_readonly("samples_seen", [](const PyStream& s) { return s.stream.samples_seen(); })
        .def_property_readonly("rejected", [](const PyStream& s) { return s.stream.rejected(); });

    m.def(
        "cli_main",
        [](const std::vector<std::string>& argv) {
            std::ostringstream out, err;
            std::istringstream in;
            const int code = cli::run(argv, in, out, err);
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("argv"), "Runs the command-line tool in-process; returns (exit_code, stdout, stderr).");
}
