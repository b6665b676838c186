#include "har/checkpoint.hpp"

#include <json.hpp>

#include "binary_io.hpp"

namespace har {

namespace {

constexpr std::string_view kMagic = "HARLSTM1";

using Kind = CheckpointError::Kind;

nlohmann::json metadata(const Checkpoint& ck) {
    nlohmann::json names = nlohmann::json::array();
    ck.params.for_each_array([&](const std::string& name, const Matrix&) { names.push_back(name); });
    nlohmann::json classes = nlohmann::json::array();
    for (auto name : kActivityNames) classes.push_back(std::string(name));
    return {
        {"features", ck.config.features},
        {"time_steps", ck.config.time_steps},
        {"hidden_units", ck.config.hidden_units},
        {"num_layers", ck.config.num_layers},
        {"classes", ck.config.classes},
        {"forget_bias", ck.config.forget_bias},
        {"init_sigma", ck.config.init_sigma},
        {"init_seed", ck.init_seed},
        {"class_order", classes},
        {"gate_order", "i,g,f,o"},
        {"arrays", names},
    };
}

} // namespace

std::string encode_checkpoint(const Checkpoint& ck) {
    ck.params.check_shapes(ck.config);
    detail::ByteWriter w;
    w.bytes(kMagic);
    w.u16(kCheckpointVersion);
    const std::string meta = metadata(ck).dump();
    w.u64(meta.size());
    w.bytes(meta);
    ck.params.for_each_array([&](const std::string&, const Matrix& m) {
        w.u64(m.rows());
        w.u64(m.cols());
        for (double v : m.values()) w.f64(v);
    });
    return w.take();
}

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
    detail::write_file(path.string(), encode_checkpoint(ck));
}

Checkpoint decode_checkpoint(std::string_view bytes) {
    detail::ByteReader r(bytes);
    std::string_view magic;
    if (!r.bytes(kMagic.size(), magic)) throw CheckpointError(Kind::Truncated, "checkpoint truncated in header");
    if (magic != kMagic) throw CheckpointError(Kind::BadMagic, "not a checkpoint file (bad magic)");
    std::uint16_t version = 0;
    if (!r.u16(version)) throw CheckpointError(Kind::Truncated, "checkpoint truncated in header");
    if (version != kCheckpointVersion) {
        throw CheckpointError(Kind::VersionMismatch, "checkpoint version " + std::to_string(version) +
                                                         ", this build reads version " +
                                                         std::to_string(kCheckpointVersion));
    }
    std::uint64_t meta_len = 0;
    std::string_view meta_text;
    if (!r.u64(meta_len) || !r.bytes(meta_len, meta_text)) {
        throw CheckpointError(Kind::Truncated, "checkpoint truncated in metadata");
    }

    Checkpoint ck;
    try {
        const auto meta = nlohmann::json::parse(meta_text);
        ck.config.features = meta.at("features").get<std::size_t>();
        ck.config.time_steps = meta.at("time_steps").get<std::size_t>();
        ck.config.hidden_units = meta.at("hidden_units").get<std::size_t>();
        ck.config.num_layers = meta.at("num_layers").get<std::size_t>();
        ck.config.classes = meta.at("classes").get<std::size_t>();
        ck.config.forget_bias = meta.at("forget_bias").get<double>();
        ck.config.init_sigma = meta.at("init_sigma").get<double>();
        ck.init_seed = meta.at("init_seed").get<std::uint64_t>();
        const auto classes = meta.at("class_order").get<std::vector<std::string>>();
        if (classes.size() != kNumClasses || !std::equal(classes.begin(), classes.end(), kActivityNames.begin())) {
            throw CheckpointError(Kind::BadMetadata, "checkpoint class order differs from this build");
        }
        if (meta.at("gate_order").get<std::string>() != "i,g,f,o") {
            throw CheckpointError(Kind::BadMetadata, "checkpoint gate order differs from this build");
        }
        ck.config.validate();
    } catch (const CheckpointError&) {
        throw;
    } catch (const std::exception& e) {
        throw CheckpointError(Kind::BadMetadata, std::string("checkpoint metadata unreadable: ") + e.what());
    }

    ck.params = LstmParams::zeros(ck.config);
    ck.params.for_each_array([&](const std::string& name, Matrix& m) {
        std::uint64_t rows = 0, cols = 0;
        if (!r.u64(rows) || !r.u64(cols)) throw CheckpointError(Kind::Truncated, "checkpoint truncated at " + name);
        if (rows != m.rows() || cols != m.cols()) {
            throw CheckpointError(Kind::ShapeMismatch, name + " stored as " + std::to_string(rows) + "x" +
                                                           std::to_string(cols) + ", metadata implies " +
                                                           m.shape_string());
        }
        for (double& v : m.values()) {
            if (!r.f64(v)) throw CheckpointError(Kind::Truncated, "checkpoint truncated inside " + name);
        }
    });
    if (r.remaining() != 0) {
        throw CheckpointError(Kind::ShapeMismatch,
                              "checkpoint has " + std::to_string(r.remaining()) + " trailing bytes");
    }
    return ck;
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    return decode_checkpoint(detail::read_file(path.string()));
}

} // namespace har
