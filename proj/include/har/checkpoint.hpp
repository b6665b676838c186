#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "har/error.hpp"
#include "har/lstm.hpp"

namespace har {

inline constexpr std::uint16_t kCheckpointVersion = 1;

/// Checkpoint layout, all integers little-endian:
///   "HARLSTM1"                     8 bytes
///   u16 version                    (= 1)
///   u64 length, metadata           UTF-8 JSON: dimensions, forget_bias,
///                                  init_sigma, init_seed, class_order,
///                                  gate_order, array names
///   per array, canonical order:    u64 rows, u64 cols, rows*cols f64
class CheckpointError : public Error {
public:
    enum class Kind { BadMagic, VersionMismatch, Truncated, ShapeMismatch, BadMetadata };

    CheckpointError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

struct Checkpoint {
    NetConfig config;
    LstmParams params;
    std::uint64_t init_seed = 0;
};

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
std::string encode_checkpoint(const Checkpoint& checkpoint);

/// Throws IoError when the file cannot be opened, CheckpointError otherwise.
Checkpoint load_checkpoint(const std::filesystem::path& path);
Checkpoint decode_checkpoint(std::string_view bytes);

} // namespace har
