#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <cstring>
#include <functional>
#include <string>

#include "qkdrelay/bytes.hpp"

namespace qkdrelay {

class RngContext;

/// 16-byte network node identifier.
struct NodeId {
    std::array<std::uint8_t, 16> bytes{};

    auto operator<=>(const NodeId&) const = default;

    std::string to_hex() const;
    std::string short_hex() const;  // first 4 bytes, for human-readable output
    static NodeId from_hex(std::string_view hex);  // FormatError unless 32 hex digits
    static NodeId random(RngContext& rng);

    BytesView view() const { return BytesView(bytes.data(), bytes.size()); }
};

/// 32-byte secret distributed by every protocol run.
struct Secret {
    std::array<std::uint8_t, 32> bytes{};

    bool operator==(const Secret&) const = default;

    std::string to_hex() const;
    static Secret random(RngContext& rng);

    BytesView view() const { return BytesView(bytes.data(), bytes.size()); }
};

/// Unordered pair of adjacent nodes naming one QKD link.
struct LinkId {
    NodeId a;  // normalized: a < b
    NodeId b;

    auto operator<=>(const LinkId&) const = default;

    static LinkId between(const NodeId& x, const NodeId& y) {
        return (x < y) ? LinkId{x, y} : LinkId{y, x};
    }

    bool has_endpoint(const NodeId& node) const { return node == a || node == b; }

    NodeId peer_of(const NodeId& node) const {
        return node == a ? b : a;
    }

    std::string to_string() const { return a.short_hex() + "-" + b.short_hex(); }
};

}  // namespace qkdrelay

template <>
struct std::hash<qkdrelay::NodeId> {
    std::size_t operator()(const qkdrelay::NodeId& id) const noexcept {
        std::uint64_t word = 0;
        std::memcpy(&word, id.bytes.data(), sizeof(word));
        return std::hash<std::uint64_t>{}(word);
    }
};
