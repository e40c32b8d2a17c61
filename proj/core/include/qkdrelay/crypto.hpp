#pragma once

#include <array>
#include <cstdint>
#include <string_view>

#include "qkdrelay/bytes.hpp"
#include "qkdrelay/rng.hpp"

namespace qkdrelay {

// Symmetric primitives: AES-256-CBC with PKCS#7 padding, HMAC-SHA-256.
inline constexpr std::size_t kSymKeyBytes = 32;
inline constexpr std::size_t kBlockBytes = 16;
inline constexpr std::size_t kIvBytes = 16;
inline constexpr std::size_t kMacTagBytes = 32;

// Kyber-768 KEM.
inline constexpr std::size_t kKemPublicKeyBytes = 1184;
inline constexpr std::size_t kKemSecretKeyBytes = 2400;
inline constexpr std::size_t kKemCiphertextBytes = 1088;
inline constexpr std::size_t kKemSharedSecretBytes = 32;

// Signature schemes.
inline constexpr std::size_t kFalconPublicKeyBytes = 1793;
inline constexpr std::size_t kFalconSignatureBytes = 1280;  // padded format: fixed
inline constexpr std::size_t kDilithiumPublicKeyBytes = 1952;
inline constexpr std::size_t kDilithiumSignatureBytes = 3293;

struct SymKey {
    std::array<std::uint8_t, kSymKeyBytes> bytes{};

    bool operator==(const SymKey&) const = default;

    static SymKey from(BytesView data);  // MalformedKey unless 32 bytes
    static SymKey random(RngContext& rng);
    BytesView view() const { return BytesView(bytes.data(), bytes.size()); }
};

using MacTag = std::array<std::uint8_t, kMacTagBytes>;

/// Ciphertext length for AES-256-CBC with a prepended IV and PKCS#7 padding.
constexpr std::size_t sym_ciphertext_len(std::size_t plaintext_len) {
    return kIvBytes + kBlockBytes * (plaintext_len / kBlockBytes + 1);
}

/// Fresh random IV (from rng) is prepended to the returned ciphertext.
Bytes sym_encrypt(const SymKey& key, BytesView plaintext, RngContext& rng);

/// Throws LengthError if the input cannot be a CBC ciphertext and
/// PaddingError if the padding check fails after decryption.
Bytes sym_decrypt(const SymKey& key, BytesView ciphertext);

MacTag mac_tag(const SymKey& key, BytesView message);
bool mac_verify(const SymKey& key, BytesView message, const MacTag& tag);  // constant-time

struct KemKeyPair {
    Bytes public_key;
    Bytes secret_key;
};

struct KemEncapsulation {
    Bytes ciphertext;
    Bytes shared_secret;
};

KemKeyPair kem_keygen(RngContext& rng);
KemEncapsulation kem_encapsulate(BytesView public_key, RngContext& rng);
Bytes kem_decapsulate(BytesView secret_key, BytesView ciphertext);

enum class SigScheme : std::uint8_t {
    hmac256 = 1,     // symmetric authenticator (HMAC-SHA-256)
    falcon1024 = 2,  // Falcon-1024, padded signature format
    dilithium3 = 3,  // Dilithium3
};

std::string_view sig_scheme_name(SigScheme scheme);
std::size_t sig_public_key_bytes(SigScheme scheme);
std::size_t sig_signature_bytes(SigScheme scheme);  // fixed length on the wire
bool sig_backend_available(SigScheme scheme);

struct SigKeyPair {
    SigScheme scheme{};
    Bytes public_key;
    Bytes secret_key;
};

struct SigMaterial {
    SigScheme scheme{};
    Bytes public_key;
    Bytes signature;
};

/// scheme must be falcon1024 or dilithium3; hmac256 uses mac_tag/mac_verify.
SigKeyPair sig_keygen(SigScheme scheme, RngContext& rng);
SigMaterial sig_sign(const SigKeyPair& signing_key, BytesView message);
bool sig_verify(const SigMaterial& material, BytesView message);

/// XOR of two equal-length buffers; throws LengthMismatch otherwise.
Bytes otp_xor(BytesView a, BytesView b);
void otp_xor_inplace(std::span<std::uint8_t> target, BytesView pad);

/// Derives a 32-byte key from KEM shared-secret material and a label
/// (SHAKE256 over secret || label).
SymKey kdf_expand(BytesView secret, std::string_view label);

/// Re-checks the backend size constants at runtime; throws ConfigError with
/// a diagnostic naming the mismatched constant.
void verify_backend_constants();

}  // namespace qkdrelay
