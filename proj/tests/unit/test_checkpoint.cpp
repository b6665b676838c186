#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "har/checkpoint.hpp"
#include "har/error.hpp"
#include "support/oracles.hpp"

using namespace har;

namespace {

Checkpoint sample_checkpoint() {
    NetConfig cfg;
    cfg.hidden_units = 5;
    cfg.time_steps = 4;
    cfg.num_layers = 2;
    cfg.forget_bias = 0.75;
    cfg.init_sigma = 0.3;
    return {cfg, init_params(cfg, 99), 99};
}

CheckpointError::Kind decode_error(std::string_view bytes) {
    try {
        decode_checkpoint(bytes);
    } catch (const CheckpointError& e) {
        return e.kind();
    }
    FAIL("decode unexpectedly succeeded");
    return CheckpointError::Kind::BadMetadata;
}

} // namespace

TEST_CASE("checkpoint round-trip is bit-exact") {
    const Checkpoint ck = sample_checkpoint();
    const auto path = std::filesystem::temp_directory_path() / "har_unit_ck.bin";
    save_checkpoint(ck, path);
    const Checkpoint back = load_checkpoint(path);
    CHECK(back.config == ck.config);
    CHECK(back.init_seed == 99);
    CHECK(back.params == ck.params);
    CHECK(encode_checkpoint(back) == encode_checkpoint(ck));

    std::mt19937_64 gen(1);
    const auto rb = oracle::random_batch(6, 4, 6, gen);
    CHECK(forward_logits(back.params, back.config, rb.view()) == forward_logits(ck.params, ck.config, rb.view()));
}

TEST_CASE("checkpoint header") {
    const std::string bytes = encode_checkpoint(sample_checkpoint());
    CHECK(bytes.substr(0, 8) == "HARLSTM1");
    CHECK(static_cast<unsigned char>(bytes[8]) == 1);
    CHECK(static_cast<unsigned char>(bytes[9]) == 0);
    CHECK(bytes.find("\"gate_order\"") != std::string::npos);
    CHECK(bytes.find("Downstairs") != std::string::npos);
}

TEST_CASE("checkpoint corruption yields distinct errors") {
    const std::string good = encode_checkpoint(sample_checkpoint());
    SUBCASE("magic") {
        std::string bad = good;
        bad[0] = 'X';
        CHECK(decode_error(bad) == CheckpointError::Kind::BadMagic);
    }
    SUBCASE("version") {
        std::string bad = good;
        bad[8] = 2;
        CHECK(decode_error(bad) == CheckpointError::Kind::VersionMismatch);
    }
    SUBCASE("truncation anywhere") {
        for (std::size_t cut : {std::size_t{9}, std::size_t{12}, std::size_t{40}, good.size() / 2, good.size() - 1}) {
            CHECK(decode_error(std::string_view(good).substr(0, cut)) == CheckpointError::Kind::Truncated);
        }
    }
    SUBCASE("trailing bytes") {
        CHECK(decode_error(good + "x") == CheckpointError::Kind::ShapeMismatch);
    }
    SUBCASE("metadata") {
        std::string bad = good;
        const auto pos = bad.find('{');
        bad[pos] = '[';
        CHECK(decode_error(bad) == CheckpointError::Kind::BadMetadata);
    }
    SUBCASE("array shape disagrees with metadata") {
        std::string bad = good;
        const auto pos = bad.find("\"hidden_units\":5");
        REQUIRE(pos != std::string::npos);
        bad[pos + 15] = '6';
        CHECK(decode_error(bad) == CheckpointError::Kind::ShapeMismatch);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(load_checkpoint("/nonexistent/ck.bin"), IoError);
    }
}
