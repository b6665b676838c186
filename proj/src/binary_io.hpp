#pragma once

// Little-endian encoding helpers shared by the segment cache and checkpoints.

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>

namespace har::detail {

class ByteWriter {
public:
    void bytes(std::string_view b) { out_.append(b); }

    void u16(std::uint16_t v) {
        for (int i = 0; i < 2; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }

    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }

    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

    std::string take() { return std::move(out_); }

private:
    std::string out_;
};

/// Reads from a byte buffer; every accessor returns false once the buffer is
/// exhausted instead of reading past the end.
class ByteReader {
public:
    explicit ByteReader(std::string_view in) : in_(in) {}

    bool bytes(std::size_t n, std::string_view& out) {
        if (in_.size() - pos_ < n) return false;
        out = in_.substr(pos_, n);
        pos_ += n;
        return true;
    }

    bool u16(std::uint16_t& v) {
        std::string_view b;
        if (!bytes(2, b)) return false;
        v = static_cast<std::uint16_t>(static_cast<unsigned char>(b[0]) | (static_cast<unsigned char>(b[1]) << 8));
        return true;
    }

    bool u64(std::uint64_t& v) {
        std::string_view b;
        if (!bytes(8, b)) return false;
        v = 0;
        for (int i = 7; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(b[static_cast<std::size_t>(i)]);
        return true;
    }

    bool f64(double& v) {
        std::uint64_t bits = 0;
        if (!u64(bits)) return false;
        v = std::bit_cast<double>(bits);
        return true;
    }

    std::size_t remaining() const noexcept { return in_.size() - pos_; }

private:
    std::string_view in_;
    std::size_t pos_ = 0;
};

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view bytes);

} // namespace har::detail
