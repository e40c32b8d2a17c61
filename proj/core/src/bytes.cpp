#include "qkdrelay/bytes.hpp"

#include <array>
#include <cstring>

#include "qkdrelay/errors.hpp"
#include "qkdrelay/rng.hpp"
#include "qkdrelay/types.hpp"

namespace qkdrelay {

namespace {

constexpr char kHexDigits[] = "0123456789abcdef";

int hex_value(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

constexpr char kB64Alphabet[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::array<std::int8_t, 256> build_b64_table() {
    std::array<std::int8_t, 256> table{};
    table.fill(-1);
    for (int i = 0; i < 64; ++i) {
        table[static_cast<unsigned char>(kB64Alphabet[i])] = static_cast<std::int8_t>(i);
    }
    return table;
}

}  // namespace

std::string to_hex(BytesView data) {
    std::string out;
    out.reserve(data.size() * 2);
    for (std::uint8_t byte : data) {
        out.push_back(kHexDigits[byte >> 4]);
        out.push_back(kHexDigits[byte & 0x0f]);
    }
    return out;
}

Bytes from_hex(std::string_view hex) {
    if (hex.size() % 2 != 0) {
        throw FormatError("hex string has odd length");
    }
    Bytes out;
    out.reserve(hex.size() / 2);
    for (std::size_t i = 0; i < hex.size(); i += 2) {
        int hi = hex_value(hex[i]);
        int lo = hex_value(hex[i + 1]);
        if (hi < 0 || lo < 0) {
            throw FormatError("invalid hex digit");
        }
        out.push_back(static_cast<std::uint8_t>((hi << 4) | lo));
    }
    return out;
}

std::string to_base64(BytesView data) {
    std::string out;
    out.reserve((data.size() + 2) / 3 * 4);
    std::size_t i = 0;
    for (; i + 3 <= data.size(); i += 3) {
        std::uint32_t group = (data[i] << 16) | (data[i + 1] << 8) | data[i + 2];
        out.push_back(kB64Alphabet[(group >> 18) & 0x3f]);
        out.push_back(kB64Alphabet[(group >> 12) & 0x3f]);
        out.push_back(kB64Alphabet[(group >> 6) & 0x3f]);
        out.push_back(kB64Alphabet[group & 0x3f]);
    }
    std::size_t rest = data.size() - i;
    if (rest == 1) {
        std::uint32_t group = data[i] << 16;
        out.push_back(kB64Alphabet[(group >> 18) & 0x3f]);
        out.push_back(kB64Alphabet[(group >> 12) & 0x3f]);
        out.append("==");
    } else if (rest == 2) {
        std::uint32_t group = (data[i] << 16) | (data[i + 1] << 8);
        out.push_back(kB64Alphabet[(group >> 18) & 0x3f]);
        out.push_back(kB64Alphabet[(group >> 12) & 0x3f]);
        out.push_back(kB64Alphabet[(group >> 6) & 0x3f]);
        out.push_back('=');
    }
    return out;
}

Bytes from_base64(std::string_view text) {
    static const std::array<std::int8_t, 256> table = build_b64_table();
    if (text.size() % 4 != 0) {
        throw FormatError("base64 length not a multiple of 4");
    }
    Bytes out;
    out.reserve(text.size() / 4 * 3);
    for (std::size_t i = 0; i < text.size(); i += 4) {
        int vals[4];
        int pad = 0;
        for (int j = 0; j < 4; ++j) {
            char c = text[i + j];
            if (c == '=') {
                if (i + 4 != text.size() || j < 2) {
                    throw FormatError("misplaced base64 padding");
                }
                vals[j] = 0;
                ++pad;
            } else {
                if (pad > 0) {
                    throw FormatError("data after base64 padding");
                }
                int v = table[static_cast<unsigned char>(c)];
                if (v < 0) {
                    throw FormatError("invalid base64 character");
                }
                vals[j] = v;
            }
        }
        std::uint32_t group = (vals[0] << 18) | (vals[1] << 12) | (vals[2] << 6) | vals[3];
        out.push_back(static_cast<std::uint8_t>((group >> 16) & 0xff));
        if (pad < 2) out.push_back(static_cast<std::uint8_t>((group >> 8) & 0xff));
        if (pad < 1) out.push_back(static_cast<std::uint8_t>(group & 0xff));
    }
    return out;
}

std::string NodeId::to_hex() const {
    return qkdrelay::to_hex(view());
}

std::string NodeId::short_hex() const {
    return qkdrelay::to_hex(BytesView(bytes.data(), 4));
}

NodeId NodeId::from_hex(std::string_view hex) {
    Bytes raw = qkdrelay::from_hex(hex);
    if (raw.size() != 16) {
        throw FormatError("node id must be 16 bytes (32 hex digits)");
    }
    NodeId id;
    std::memcpy(id.bytes.data(), raw.data(), raw.size());
    return id;
}

NodeId NodeId::random(RngContext& rng) {
    NodeId id;
    rng.fill(id.bytes);
    return id;
}

std::string Secret::to_hex() const {
    return qkdrelay::to_hex(view());
}

Secret Secret::random(RngContext& rng) {
    Secret secret;
    rng.fill(secret.bytes);
    return secret;
}

}  // namespace qkdrelay
