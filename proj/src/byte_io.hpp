#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cstddef>
#include <cstring>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "gann/types.hpp"

namespace gann::detail {

// Little-endian scalar (de)serialisation for the index file.
class ByteWriter {
public:
    template <typename T>
    void put(T v) {
        static_assert(std::is_trivially_copyable_v<T>);
        if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
            auto raw = std::bit_cast<std::array<std::byte, sizeof(T)>>(v);
            std::reverse(raw.begin(), raw.end());
            buf_.insert(buf_.end(), raw.begin(), raw.end());
        } else {
            const auto* p = reinterpret_cast<const std::byte*>(&v);
            buf_.insert(buf_.end(), p, p + sizeof(T));
        }
    }
    void raw(std::span<const std::byte> bytes) { buf_.insert(buf_.end(), bytes.begin(), bytes.end()); }
    std::vector<std::byte> take() && { return std::move(buf_); }

private:
    std::vector<std::byte> buf_;
};

class ByteReader {
public:
    explicit ByteReader(std::span<const std::byte> bytes) : bytes_(bytes) {}

    template <typename T>
    T get() {
        need(sizeof(T));
        std::array<std::byte, sizeof(T)> raw;
        std::memcpy(raw.data(), bytes_.data() + pos_, sizeof(T));
        if constexpr (std::endian::native == std::endian::big) std::reverse(raw.begin(), raw.end());
        pos_ += sizeof(T);
        return std::bit_cast<T>(raw);
    }
    std::span<const std::byte> take(std::size_t count) {
        need(count);
        auto s = bytes_.subspan(pos_, count);
        pos_ += count;
        return s;
    }
    bool done() const noexcept { return pos_ == bytes_.size(); }

private:
    void need(std::size_t count) const {
        if (bytes_.size() - pos_ < count) throw FormatError("index data truncated at byte " + std::to_string(pos_));
    }
    std::span<const std::byte> bytes_;
    std::size_t pos_ = 0;
};

}  // namespace gann::detail
