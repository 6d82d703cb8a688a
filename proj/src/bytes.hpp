#pragma once

// Little-endian byte encoding shared by the feature and model containers.

#include <bit>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <type_traits>

#include "oodkit/error.hpp"

namespace oodkit {

class ByteWriter {
public:
    void raw(const void* data, std::size_t size) {
        const auto* p = static_cast<const char*>(data);
        bytes_.append(p, size);
    }
    template <typename U>
    void uint(U value) {
        static_assert(std::is_unsigned_v<U>);
        for (std::size_t i = 0; i < sizeof(U); ++i) {
            bytes_.push_back(static_cast<char>((value >> (8 * i)) & 0xffu));
        }
    }
    void i64(std::int64_t v) { uint(static_cast<std::uint64_t>(v)); }
    void f64(double v) { uint(std::bit_cast<std::uint64_t>(v)); }
    void f32(float v) { uint(std::bit_cast<std::uint32_t>(v)); }

    std::string take() { return std::move(bytes_); }

private:
    std::string bytes_;
};

class ByteReader {
public:
    ByteReader(const std::string& bytes, const std::filesystem::path& path) : bytes_(bytes), path_(path) {}

    void need(std::size_t size) const {
        if (bytes_.size() - pos_ < size) {
            fail_io("truncated file: " + path_.string());
        }
    }
    std::string raw(std::size_t size) {
        need(size);
        std::string out = bytes_.substr(pos_, size);
        pos_ += size;
        return out;
    }
    template <typename U>
    U uint() {
        need(sizeof(U));
        U value = 0;
        for (std::size_t i = 0; i < sizeof(U); ++i) {
            value |= static_cast<U>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
        }
        pos_ += sizeof(U);
        return value;
    }
    std::int64_t i64() { return static_cast<std::int64_t>(uint<std::uint64_t>()); }
    double f64() { return std::bit_cast<double>(uint<std::uint64_t>()); }
    float f32() { return std::bit_cast<float>(uint<std::uint32_t>()); }
    std::size_t remaining() const { return bytes_.size() - pos_; }

private:
    const std::string& bytes_;
    const std::filesystem::path& path_;
    std::size_t pos_ = 0;
};

inline std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b) {
    if (a != 0 && b > std::numeric_limits<std::uint64_t>::max() / a) {
        fail_validation("feature dimensions overflow");
    }
    return a * b;
}

}  // namespace oodkit
