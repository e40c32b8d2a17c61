#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qkdrelay {

using Bytes = std::vector<std::uint8_t>;
using BytesView = std::span<const std::uint8_t>;

std::string to_hex(BytesView data);
Bytes from_hex(std::string_view hex);  // throws FormatError on odd length / bad digit

std::string to_base64(BytesView data);
Bytes from_base64(std::string_view text);  // throws FormatError on bad input

inline void put_u16_be(Bytes& out, std::uint16_t value) {
    out.push_back(static_cast<std::uint8_t>(value >> 8));
    out.push_back(static_cast<std::uint8_t>(value & 0xff));
}

inline std::uint16_t get_u16_be(BytesView data, std::size_t offset) {
    return static_cast<std::uint16_t>((data[offset] << 8) | data[offset + 1]);
}

inline void put_u32_be(Bytes& out, std::uint32_t value) {
    out.push_back(static_cast<std::uint8_t>(value >> 24));
    out.push_back(static_cast<std::uint8_t>((value >> 16) & 0xff));
    out.push_back(static_cast<std::uint8_t>((value >> 8) & 0xff));
    out.push_back(static_cast<std::uint8_t>(value & 0xff));
}

inline std::uint32_t get_u32_be(BytesView data, std::size_t offset) {
    return (static_cast<std::uint32_t>(data[offset]) << 24) |
           (static_cast<std::uint32_t>(data[offset + 1]) << 16) |
           (static_cast<std::uint32_t>(data[offset + 2]) << 8) |
           static_cast<std::uint32_t>(data[offset + 3]);
}

inline void append(Bytes& out, BytesView data) {
    out.insert(out.end(), data.begin(), data.end());
}

inline Bytes concat(std::initializer_list<BytesView> parts) {
    Bytes out;
    std::size_t total = 0;
    for (const auto& part : parts) total += part.size();
    out.reserve(total);
    for (const auto& part : parts) append(out, part);
    return out;
}

inline BytesView subview(BytesView data, std::size_t offset, std::size_t count) {
    return data.subspan(offset, count);
}

}  // namespace qkdrelay
