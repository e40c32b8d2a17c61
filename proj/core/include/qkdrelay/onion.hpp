#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "qkdrelay/crypto.hpp"
#include "qkdrelay/types.hpp"

namespace qkdrelay {

/// Layered-onion flavors.  The plain variant protects routing information
/// only; the extended variants add a per-layer authentication block that is
/// checked before a relay forwards anything.
enum class OnionVariant : std::uint8_t {
    orr = 0x01,
    ext_hmac256 = 0x02,
    ext_falcon1024 = 0x03,
    ext_dilithium3 = 0x04,
};

std::string_view onion_variant_name(OnionVariant variant);
bool is_ext_variant(OnionVariant variant);
/// Signature scheme backing an extended variant's authentication block.
SigScheme ext_auth_scheme(OnionVariant variant);  // UnsupportedScheme for orr

/// Size of the authentication block embedded in each layer: nothing for the
/// plain variant, one MAC tag for ext_hmac256, and public key || 2-byte
/// signature length || fixed-size signature for the signature variants.
std::size_t auth_block_bytes(OnionVariant variant);

/// Exact byte length of an onion with `n_layers` layers (n_layers >= 1).
std::size_t onion_size(OnionVariant variant, std::size_t n_layers);

/// Per-node key material for one circuit, ordered from the first relay to
/// the destination.  The MAC key is only consumed by ext_hmac256.
struct LayerKeySet {
    SymKey enc_key;
    SymKey mac_key;
};
using CircuitKeys = std::vector<LayerKeySet>;

struct OnionFrame {
    OnionVariant variant{};
    Bytes body;
};

struct RelayStep {
    NodeId next_hop;
    OnionFrame inner;
};

struct FinalSecret {
    Secret secret;
};

using PeelResult = std::variant<RelayStep, FinalSecret>;

/// Builds a plain onion for `hops` (first relay ... destination); the
/// innermost layer carries the secret.
OnionFrame build_onion(const Secret& secret, std::span<const NodeId> hops,
                       const CircuitKeys& keys, RngContext& rng);

/// Builds an authenticated onion.  `signer` must be a key pair of the
/// matching scheme for the signature variants and may be null for
/// ext_hmac256.
OnionFrame build_onion_ext(const Secret& secret, std::span<const NodeId> hops,
                           const CircuitKeys& keys, OnionVariant variant,
                           const SigKeyPair* signer, RngContext& rng);

/// Removes one layer of a plain onion.  Throws DecryptError when the
/// ciphertext does not decrypt under `enc_key` and FormatError when the
/// decrypted layer is structurally invalid.
PeelResult peel_layer(const OnionFrame& frame, const SymKey& enc_key);

/// Verification material for one relay peeling an extended onion.
struct ExtAuth {
    /// Required for ext_hmac256.
    std::optional<SymKey> mac_key;
    /// Optional pin for the signature variants: when set, the public key
    /// embedded in the layer must match it bit for bit.
    std::optional<Bytes> expected_public_key;
};

/// Removes one layer of an extended onion, checking the authentication
/// block first.  Throws AuthError when verification fails.
PeelResult peel_layer_ext(const OnionFrame& frame, const SymKey& enc_key,
                          const ExtAuth& auth);

/// Wire format: 1-byte variant || 2-byte big-endian body length || body.
Bytes frame_encode(const OnionFrame& frame);
OnionFrame frame_decode(BytesView wire);

/// Bytes frame_encode would emit for a body of the given size.
constexpr std::size_t frame_overhead_bytes() { return 3; }

}  // namespace qkdrelay
