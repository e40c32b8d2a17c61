#include "qkdrelay/onion.hpp"

#include <algorithm>
#include <cstring>

#include "qkdrelay/errors.hpp"

namespace qkdrelay {

namespace {

constexpr std::uint8_t kTagRelay = 0x00;
constexpr std::uint8_t kTagFinal = 0x01;
constexpr std::size_t kNodeIdBytes = 16;
constexpr std::size_t kSecretBytes = 32;
constexpr std::size_t kSigLenFieldBytes = 2;
constexpr char kAuthDomain[] = "qkdrelay.onion.auth.v1";

std::size_t padded_blocks_len(std::size_t plaintext_len) {
    return kBlockBytes * (plaintext_len / kBlockBytes + 1);
}

/// Message covered by a layer's authentication block: a fixed domain
/// prefix, the variant and layer tag, then the layer's payload (next hop
/// and inner onion for relays, the secret for the final layer).
Bytes auth_message(OnionVariant variant, std::uint8_t tag, BytesView payload) {
    Bytes msg;
    msg.reserve(sizeof(kAuthDomain) - 1 + 2 + payload.size());
    msg.insert(msg.end(), kAuthDomain, kAuthDomain + sizeof(kAuthDomain) - 1);
    msg.push_back(static_cast<std::uint8_t>(variant));
    msg.push_back(tag);
    append(msg, payload);
    return msg;
}

Bytes make_auth_block(OnionVariant variant, std::uint8_t tag, BytesView payload,
                      const CircuitKeys& keys, std::size_t layer_index,
                      const SigKeyPair* signer) {
    Bytes msg = auth_message(variant, tag, payload);
    if (variant == OnionVariant::ext_hmac256) {
        MacTag mac = mac_tag(keys[layer_index].mac_key, msg);
        return Bytes(mac.begin(), mac.end());
    }
    const SigScheme scheme = ext_auth_scheme(variant);
    if (signer == nullptr || signer->scheme != scheme) {
        throw ConfigError(std::string("variant ") +
                          std::string(onion_variant_name(variant)) +
                          " needs a " + std::string(sig_scheme_name(scheme)) +
                          " signing key");
    }
    SigMaterial material = sig_sign(*signer, msg);
    Bytes block;
    block.reserve(auth_block_bytes(variant));
    append(block, material.public_key);
    put_u16_be(block, static_cast<std::uint16_t>(material.signature.size()));
    append(block, material.signature);
    block.resize(auth_block_bytes(variant), 0x00);  // pad to the fixed size
    return block;
}

void check_auth_block(OnionVariant variant, std::uint8_t tag, BytesView payload,
                      BytesView block, const ExtAuth& auth) {
    Bytes msg = auth_message(variant, tag, payload);
    if (variant == OnionVariant::ext_hmac256) {
        if (!auth.mac_key) {
            throw ConfigError("peeling an ext_hmac256 layer needs a MAC key");
        }
        MacTag tag_bytes{};
        std::memcpy(tag_bytes.data(), block.data(), tag_bytes.size());
        if (!mac_verify(*auth.mac_key, msg, tag_bytes)) {
            throw AuthError("layer MAC does not verify");
        }
        return;
    }
    const SigScheme scheme = ext_auth_scheme(variant);
    const std::size_t pk_len = sig_public_key_bytes(scheme);
    const std::size_t sig_len_expected = sig_signature_bytes(scheme);
    SigMaterial material;
    material.scheme = scheme;
    material.public_key.assign(block.begin(), block.begin() + pk_len);
    const std::size_t sig_len = get_u16_be(block, pk_len);
    if (sig_len != sig_len_expected) {
        throw AuthError("signature length field is corrupt");
    }
    material.signature.assign(block.begin() + pk_len + kSigLenFieldBytes,
                              block.begin() + pk_len + kSigLenFieldBytes + sig_len);
    if (auth.expected_public_key && material.public_key != *auth.expected_public_key) {
        throw AuthError("embedded public key does not match the pinned key");
    }
    if (!sig_verify(material, msg)) {
        throw AuthError("layer signature does not verify");
    }
}

Bytes decrypt_layer(const SymKey& enc_key, BytesView body) {
    try {
        return sym_decrypt(enc_key, body);
    } catch (const LengthError& e) {
        throw DecryptError(std::string("layer does not decrypt: ") + e.what());
    } catch (const PaddingError& e) {
        throw DecryptError(std::string("layer does not decrypt: ") + e.what());
    }
}

struct ParsedLayer {
    std::uint8_t tag;
    BytesView auth_block;  // empty for the plain variant
    BytesView payload;
};

ParsedLayer parse_layer(OnionVariant variant, BytesView plaintext) {
    const std::size_t auth_len = auth_block_bytes(variant);
    if (plaintext.size() < 1 + auth_len) {
        throw FormatError("layer too short for its header");
    }
    ParsedLayer parsed;
    parsed.tag = plaintext[0];
    parsed.auth_block = plaintext.subspan(1, auth_len);
    parsed.payload = plaintext.subspan(1 + auth_len);
    if (parsed.tag == kTagFinal) {
        if (parsed.payload.size() != kSecretBytes) {
            throw FormatError("final layer payload must be a 32-byte secret");
        }
    } else if (parsed.tag == kTagRelay) {
        if (parsed.payload.size() < kNodeIdBytes + kIvBytes + kBlockBytes ||
            (parsed.payload.size() - kNodeIdBytes - kIvBytes) % kBlockBytes != 0) {
            throw FormatError("relay layer payload has an impossible length");
        }
    } else {
        throw FormatError("unknown layer tag");
    }
    return parsed;
}

PeelResult to_result(OnionVariant variant, const ParsedLayer& parsed) {
    if (parsed.tag == kTagFinal) {
        FinalSecret result;
        std::memcpy(result.secret.bytes.data(), parsed.payload.data(), kSecretBytes);
        return result;
    }
    RelayStep step;
    std::memcpy(step.next_hop.bytes.data(), parsed.payload.data(), kNodeIdBytes);
    step.inner.variant = variant;
    step.inner.body.assign(parsed.payload.begin() + kNodeIdBytes,
                           parsed.payload.end());
    return step;
}

OnionFrame build(const Secret& secret, std::span<const NodeId> hops,
                 const CircuitKeys& keys, OnionVariant variant,
                 const SigKeyPair* signer, RngContext& rng) {
    if (hops.empty()) {
        throw ConfigError("an onion needs at least one layer");
    }
    if (keys.size() != hops.size()) {
        throw ConfigError("got " + std::to_string(keys.size()) + " key sets for " +
                          std::to_string(hops.size()) + " hops");
    }
    const bool ext = is_ext_variant(variant);
    Bytes current;
    for (std::size_t idx = hops.size(); idx-- > 0;) {
        const bool innermost = (idx == hops.size() - 1);
        Bytes payload;
        std::uint8_t tag = innermost ? kTagFinal : kTagRelay;
        if (innermost) {
            payload.assign(secret.bytes.begin(), secret.bytes.end());
        } else {
            payload.reserve(kNodeIdBytes + current.size());
            append(payload, hops[idx + 1].view());
            append(payload, current);
        }
        Bytes plaintext;
        plaintext.reserve(1 + auth_block_bytes(variant) + payload.size());
        plaintext.push_back(tag);
        if (ext) {
            append(plaintext, make_auth_block(variant, tag, payload, keys, idx, signer));
        }
        append(plaintext, payload);
        current = sym_encrypt(keys[idx].enc_key, plaintext, rng);
    }
    return OnionFrame{variant, std::move(current)};
}

}  // namespace

std::string_view onion_variant_name(OnionVariant variant) {
    switch (variant) {
    case OnionVariant::orr: return "Orr";
    case OnionVariant::ext_hmac256: return "ExtHmac256";
    case OnionVariant::ext_falcon1024: return "ExtFalcon1024";
    case OnionVariant::ext_dilithium3: return "ExtDilithium3";
    }
    throw FormatError("unknown onion variant");
}

bool is_ext_variant(OnionVariant variant) {
    return variant == OnionVariant::ext_hmac256 ||
           variant == OnionVariant::ext_falcon1024 ||
           variant == OnionVariant::ext_dilithium3;
}

SigScheme ext_auth_scheme(OnionVariant variant) {
    switch (variant) {
    case OnionVariant::ext_hmac256: return SigScheme::hmac256;
    case OnionVariant::ext_falcon1024: return SigScheme::falcon1024;
    case OnionVariant::ext_dilithium3: return SigScheme::dilithium3;
    case OnionVariant::orr: break;
    }
    throw UnsupportedSchemeError("the plain variant carries no authentication block");
}

std::size_t auth_block_bytes(OnionVariant variant) {
    switch (variant) {
    case OnionVariant::orr:
        return 0;
    case OnionVariant::ext_hmac256:
        return kMacTagBytes;
    case OnionVariant::ext_falcon1024:
        return kFalconPublicKeyBytes + kSigLenFieldBytes + kFalconSignatureBytes;
    case OnionVariant::ext_dilithium3:
        return kDilithiumPublicKeyBytes + kSigLenFieldBytes + kDilithiumSignatureBytes;
    }
    throw FormatError("unknown onion variant");
}

std::size_t onion_size(OnionVariant variant, std::size_t n_layers) {
    if (n_layers == 0) {
        throw ConfigError("an onion needs at least one layer");
    }
    const std::size_t auth = auth_block_bytes(variant);
    std::size_t size = kIvBytes + padded_blocks_len(1 + auth + kSecretBytes);
    for (std::size_t i = 1; i < n_layers; ++i) {
        size = kIvBytes + padded_blocks_len(1 + auth + kNodeIdBytes + size);
    }
    return size;
}

OnionFrame build_onion(const Secret& secret, std::span<const NodeId> hops,
                       const CircuitKeys& keys, RngContext& rng) {
    return build(secret, hops, keys, OnionVariant::orr, nullptr, rng);
}

OnionFrame build_onion_ext(const Secret& secret, std::span<const NodeId> hops,
                           const CircuitKeys& keys, OnionVariant variant,
                           const SigKeyPair* signer, RngContext& rng) {
    if (!is_ext_variant(variant)) {
        throw ConfigError("build_onion_ext needs an extended variant");
    }
    return build(secret, hops, keys, variant, signer, rng);
}

PeelResult peel_layer(const OnionFrame& frame, const SymKey& enc_key) {
    if (frame.variant != OnionVariant::orr) {
        throw FormatError("peel_layer handles the plain variant only");
    }
    Bytes plaintext = decrypt_layer(enc_key, frame.body);
    ParsedLayer parsed = parse_layer(frame.variant, plaintext);
    return to_result(frame.variant, parsed);
}

PeelResult peel_layer_ext(const OnionFrame& frame, const SymKey& enc_key,
                          const ExtAuth& auth) {
    if (!is_ext_variant(frame.variant)) {
        throw FormatError("peel_layer_ext handles the extended variants only");
    }
    Bytes plaintext = decrypt_layer(enc_key, frame.body);
    ParsedLayer parsed = parse_layer(frame.variant, plaintext);
    check_auth_block(frame.variant, parsed.tag, parsed.payload, parsed.auth_block,
                     auth);
    return to_result(frame.variant, parsed);
}

Bytes frame_encode(const OnionFrame& frame) {
    if (frame.body.size() > 0xffff) {
        throw FormatError("onion body of " + std::to_string(frame.body.size()) +
                          " bytes exceeds the 2-byte wire length field");
    }
    Bytes wire;
    wire.reserve(frame_overhead_bytes() + frame.body.size());
    wire.push_back(static_cast<std::uint8_t>(frame.variant));
    put_u16_be(wire, static_cast<std::uint16_t>(frame.body.size()));
    append(wire, frame.body);
    return wire;
}

OnionFrame frame_decode(BytesView wire) {
    if (wire.size() < frame_overhead_bytes()) {
        throw FormatError("frame shorter than its header");
    }
    const std::uint8_t variant_byte = wire[0];
    if (variant_byte < static_cast<std::uint8_t>(OnionVariant::orr) ||
        variant_byte > static_cast<std::uint8_t>(OnionVariant::ext_dilithium3)) {
        throw FormatError("unknown frame variant byte");
    }
    const std::size_t body_len = get_u16_be(wire, 1);
    if (wire.size() != frame_overhead_bytes() + body_len) {
        throw FormatError("frame length field does not match the payload");
    }
    OnionFrame frame;
    frame.variant = static_cast<OnionVariant>(variant_byte);
    frame.body.assign(wire.begin() + frame_overhead_bytes(), wire.end());
    return frame;
}

}  // namespace qkdrelay
