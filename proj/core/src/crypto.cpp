#include "qkdrelay/crypto.hpp"

#include <openssl/core_names.h>
#include <openssl/crypto.h>
#include <openssl/evp.h>
#include <openssl/params.h>

#include <cstring>
#include <memory>

#include "qkdrelay/errors.hpp"

extern "C" {
#include <fips202.h>
}

// PQClean backends.  Function-level declarations are pulled in here rather
// than through the per-scheme api.h headers because the three schemes define
// colliding unprefixed helper macros.
extern "C" {
int PQCLEAN_KYBER768_CLEAN_crypto_kem_keypair(uint8_t* pk, uint8_t* sk);
int PQCLEAN_KYBER768_CLEAN_crypto_kem_enc(uint8_t* ct, uint8_t* ss, const uint8_t* pk);
int PQCLEAN_KYBER768_CLEAN_crypto_kem_dec(uint8_t* ss, const uint8_t* ct, const uint8_t* sk);

int PQCLEAN_FALCONPADDED1024_CLEAN_crypto_sign_keypair(uint8_t* pk, uint8_t* sk);
int PQCLEAN_FALCONPADDED1024_CLEAN_crypto_sign_signature(
    uint8_t* sig, size_t* siglen, const uint8_t* m, size_t mlen, const uint8_t* sk);
int PQCLEAN_FALCONPADDED1024_CLEAN_crypto_sign_verify(
    const uint8_t* sig, size_t siglen, const uint8_t* m, size_t mlen, const uint8_t* pk);

int PQCLEAN_DILITHIUM3_CLEAN_crypto_sign_keypair(uint8_t* pk, uint8_t* sk);
int PQCLEAN_DILITHIUM3_CLEAN_crypto_sign_signature(
    uint8_t* sig, size_t* siglen, const uint8_t* m, size_t mlen, const uint8_t* sk);
int PQCLEAN_DILITHIUM3_CLEAN_crypto_sign_verify(
    const uint8_t* sig, size_t siglen, const uint8_t* m, size_t mlen, const uint8_t* pk);
}

namespace qkdrelay {

namespace {

constexpr std::size_t kFalconSecretKeyBytes = 2305;
constexpr std::size_t kDilithiumSecretKeyBytes = 4000;

struct CipherCtxDeleter {
    void operator()(EVP_CIPHER_CTX* ctx) const { EVP_CIPHER_CTX_free(ctx); }
};
using CipherCtx = std::unique_ptr<EVP_CIPHER_CTX, CipherCtxDeleter>;

struct MacCtxDeleter {
    void operator()(EVP_MAC_CTX* ctx) const { EVP_MAC_CTX_free(ctx); }
};
using MacCtx = std::unique_ptr<EVP_MAC_CTX, MacCtxDeleter>;

EVP_MAC* hmac_algorithm() {
    static EVP_MAC* mac = EVP_MAC_fetch(nullptr, "HMAC", nullptr);
    return mac;
}

// Explicitly fetched once: the legacy EVP_aes_256_cbc() constant forces an
// implicit provider fetch on every init, which dominates small-message cost.
const EVP_CIPHER* aes256_cbc() {
    static EVP_CIPHER* cipher = EVP_CIPHER_fetch(nullptr, "AES-256-CBC", nullptr);
    return cipher;
}

// One reusable cipher context per thread; re-keyed on every call.
EVP_CIPHER_CTX* thread_cipher_ctx() {
    thread_local CipherCtx ctx(EVP_CIPHER_CTX_new());
    if (!ctx) {
        throw KemFailureError("cipher context allocation failed");
    }
    return ctx.get();
}

// One HMAC context per thread with the digest bound once; EVP_MAC_init with
// null params re-keys it while keeping the digest, skipping the SHA-256
// fetch that a fresh context pays on every call.
EVP_MAC_CTX* thread_hmac_ctx() {
    thread_local MacCtx ctx = [] {
        MacCtx fresh(EVP_MAC_CTX_new(hmac_algorithm()));
        char digest_name[] = "SHA256";
        OSSL_PARAM params[] = {
            OSSL_PARAM_construct_utf8_string(OSSL_MAC_PARAM_DIGEST, digest_name, 0),
            OSSL_PARAM_construct_end(),
        };
        if (!fresh || EVP_MAC_CTX_set_params(fresh.get(), params) != 1) {
            throw KemFailureError("HMAC context initialization failed");
        }
        return fresh;
    }();
    return ctx.get();
}

}  // namespace

SymKey SymKey::from(BytesView data) {
    if (data.size() != kSymKeyBytes) {
        throw MalformedKeyError("symmetric key must be 32 bytes, got " +
                                std::to_string(data.size()));
    }
    SymKey key;
    std::memcpy(key.bytes.data(), data.data(), kSymKeyBytes);
    return key;
}

SymKey SymKey::random(RngContext& rng) {
    SymKey key;
    rng.fill(key.bytes);
    return key;
}

Bytes sym_encrypt(const SymKey& key, BytesView plaintext, RngContext& rng) {
    Bytes out(sym_ciphertext_len(plaintext.size()));
    rng.fill({out.data(), kIvBytes});

    EVP_CIPHER_CTX* ctx = thread_cipher_ctx();
    if (EVP_EncryptInit_ex(ctx, aes256_cbc(), nullptr, key.bytes.data(),
                           out.data()) != 1) {
        throw KemFailureError("cipher context initialization failed");
    }
    int len1 = 0;
    int len2 = 0;
    if (EVP_EncryptUpdate(ctx, out.data() + kIvBytes, &len1,
                          plaintext.data(), static_cast<int>(plaintext.size())) != 1 ||
        EVP_EncryptFinal_ex(ctx, out.data() + kIvBytes + len1, &len2) != 1) {
        throw KemFailureError("encryption failed");
    }
    if (kIvBytes + static_cast<std::size_t>(len1 + len2) != out.size()) {
        throw LengthError("unexpected ciphertext length from backend");
    }
    return out;
}

Bytes sym_decrypt(const SymKey& key, BytesView ciphertext) {
    if (ciphertext.size() < kIvBytes + kBlockBytes ||
        (ciphertext.size() - kIvBytes) % kBlockBytes != 0) {
        throw LengthError("ciphertext length " + std::to_string(ciphertext.size()) +
                          " is not an IV plus whole blocks");
    }
    EVP_CIPHER_CTX* ctx = thread_cipher_ctx();
    if (EVP_DecryptInit_ex(ctx, aes256_cbc(), nullptr, key.bytes.data(),
                           ciphertext.data()) != 1) {
        throw KemFailureError("cipher context initialization failed");
    }
    Bytes out(ciphertext.size() - kIvBytes);
    int len1 = 0;
    int len2 = 0;
    if (EVP_DecryptUpdate(ctx, out.data(), &len1, ciphertext.data() + kIvBytes,
                          static_cast<int>(ciphertext.size() - kIvBytes)) != 1) {
        throw DecryptError("decryption failed");
    }
    if (EVP_DecryptFinal_ex(ctx, out.data() + len1, &len2) != 1) {
        throw PaddingError("bad PKCS#7 padding");
    }
    out.resize(static_cast<std::size_t>(len1 + len2));
    return out;
}

MacTag mac_tag(const SymKey& key, BytesView message) {
    EVP_MAC_CTX* ctx = thread_hmac_ctx();
    MacTag tag{};
    std::size_t out_len = 0;
    if (EVP_MAC_init(ctx, key.bytes.data(), key.bytes.size(), nullptr) != 1 ||
        EVP_MAC_update(ctx, message.data(), message.size()) != 1 ||
        EVP_MAC_final(ctx, tag.data(), &out_len, tag.size()) != 1 ||
        out_len != tag.size()) {
        throw KemFailureError("HMAC computation failed");
    }
    return tag;
}

bool mac_verify(const SymKey& key, BytesView message, const MacTag& tag) {
    MacTag expected = mac_tag(key, message);
    return CRYPTO_memcmp(expected.data(), tag.data(), tag.size()) == 0;
}

KemKeyPair kem_keygen(RngContext& rng) {
    ScopedRngHook hook(rng);
    KemKeyPair pair;
    pair.public_key.resize(kKemPublicKeyBytes);
    pair.secret_key.resize(kKemSecretKeyBytes);
    if (PQCLEAN_KYBER768_CLEAN_crypto_kem_keypair(pair.public_key.data(),
                                                  pair.secret_key.data()) != 0) {
        throw KemFailureError("KEM key generation failed");
    }
    return pair;
}

KemEncapsulation kem_encapsulate(BytesView public_key, RngContext& rng) {
    if (public_key.size() != kKemPublicKeyBytes) {
        throw MalformedKeyError("KEM public key must be " +
                                std::to_string(kKemPublicKeyBytes) + " bytes, got " +
                                std::to_string(public_key.size()));
    }
    ScopedRngHook hook(rng);
    KemEncapsulation result;
    result.ciphertext.resize(kKemCiphertextBytes);
    result.shared_secret.resize(kKemSharedSecretBytes);
    if (PQCLEAN_KYBER768_CLEAN_crypto_kem_enc(result.ciphertext.data(),
                                              result.shared_secret.data(),
                                              public_key.data()) != 0) {
        throw KemFailureError("KEM encapsulation failed");
    }
    return result;
}

Bytes kem_decapsulate(BytesView secret_key, BytesView ciphertext) {
    if (secret_key.size() != kKemSecretKeyBytes) {
        throw MalformedKeyError("KEM secret key must be " +
                                std::to_string(kKemSecretKeyBytes) + " bytes, got " +
                                std::to_string(secret_key.size()));
    }
    if (ciphertext.size() != kKemCiphertextBytes) {
        throw MalformedKeyError("KEM ciphertext must be " +
                                std::to_string(kKemCiphertextBytes) + " bytes, got " +
                                std::to_string(ciphertext.size()));
    }
    Bytes shared_secret(kKemSharedSecretBytes);
    if (PQCLEAN_KYBER768_CLEAN_crypto_kem_dec(shared_secret.data(), ciphertext.data(),
                                              secret_key.data()) != 0) {
        throw KemFailureError("KEM decapsulation failed");
    }
    return shared_secret;
}

std::string_view sig_scheme_name(SigScheme scheme) {
    switch (scheme) {
    case SigScheme::hmac256: return "Hmac256";
    case SigScheme::falcon1024: return "Falcon1024";
    case SigScheme::dilithium3: return "Dilithium3";
    }
    throw UnsupportedSchemeError("unknown signature scheme");
}

std::size_t sig_public_key_bytes(SigScheme scheme) {
    switch (scheme) {
    case SigScheme::hmac256: return 0;
    case SigScheme::falcon1024: return kFalconPublicKeyBytes;
    case SigScheme::dilithium3: return kDilithiumPublicKeyBytes;
    }
    throw UnsupportedSchemeError("unknown signature scheme");
}

std::size_t sig_signature_bytes(SigScheme scheme) {
    switch (scheme) {
    case SigScheme::hmac256: return kMacTagBytes;
    case SigScheme::falcon1024: return kFalconSignatureBytes;
    case SigScheme::dilithium3: return kDilithiumSignatureBytes;
    }
    throw UnsupportedSchemeError("unknown signature scheme");
}

bool sig_backend_available(SigScheme scheme) {
    switch (scheme) {
    case SigScheme::hmac256:
    case SigScheme::falcon1024:
    case SigScheme::dilithium3:
        return true;
    }
    return false;
}

SigKeyPair sig_keygen(SigScheme scheme, RngContext& rng) {
    ScopedRngHook hook(rng);
    SigKeyPair pair;
    pair.scheme = scheme;
    switch (scheme) {
    case SigScheme::falcon1024:
        pair.public_key.resize(kFalconPublicKeyBytes);
        pair.secret_key.resize(kFalconSecretKeyBytes);
        if (PQCLEAN_FALCONPADDED1024_CLEAN_crypto_sign_keypair(
                pair.public_key.data(), pair.secret_key.data()) != 0) {
            throw KemFailureError("Falcon key generation failed");
        }
        return pair;
    case SigScheme::dilithium3:
        pair.public_key.resize(kDilithiumPublicKeyBytes);
        pair.secret_key.resize(kDilithiumSecretKeyBytes);
        if (PQCLEAN_DILITHIUM3_CLEAN_crypto_sign_keypair(pair.public_key.data(),
                                                         pair.secret_key.data()) != 0) {
            throw KemFailureError("Dilithium key generation failed");
        }
        return pair;
    case SigScheme::hmac256:
        break;
    }
    throw UnsupportedSchemeError(
        "sig_keygen supports Falcon1024 and Dilithium3; Hmac256 uses mac_tag");
}

SigMaterial sig_sign(const SigKeyPair& signing_key, BytesView message) {
    SigMaterial material;
    material.scheme = signing_key.scheme;
    material.public_key = signing_key.public_key;
    std::size_t sig_len = 0;
    switch (signing_key.scheme) {
    case SigScheme::falcon1024:
        if (signing_key.secret_key.size() != kFalconSecretKeyBytes) {
            throw MalformedKeyError("Falcon secret key has wrong length");
        }
        material.signature.resize(kFalconSignatureBytes);
        if (PQCLEAN_FALCONPADDED1024_CLEAN_crypto_sign_signature(
                material.signature.data(), &sig_len, message.data(), message.size(),
                signing_key.secret_key.data()) != 0) {
            throw KemFailureError("Falcon signing failed");
        }
        material.signature.resize(sig_len);
        return material;
    case SigScheme::dilithium3:
        if (signing_key.secret_key.size() != kDilithiumSecretKeyBytes) {
            throw MalformedKeyError("Dilithium secret key has wrong length");
        }
        material.signature.resize(kDilithiumSignatureBytes);
        if (PQCLEAN_DILITHIUM3_CLEAN_crypto_sign_signature(
                material.signature.data(), &sig_len, message.data(), message.size(),
                signing_key.secret_key.data()) != 0) {
            throw KemFailureError("Dilithium signing failed");
        }
        material.signature.resize(sig_len);
        return material;
    case SigScheme::hmac256:
        break;
    }
    throw UnsupportedSchemeError(
        "sig_sign supports Falcon1024 and Dilithium3; Hmac256 uses mac_tag");
}

bool sig_verify(const SigMaterial& material, BytesView message) {
    switch (material.scheme) {
    case SigScheme::falcon1024:
        if (material.public_key.size() != kFalconPublicKeyBytes) {
            throw MalformedKeyError("Falcon public key has wrong length");
        }
        return PQCLEAN_FALCONPADDED1024_CLEAN_crypto_sign_verify(
                   material.signature.data(), material.signature.size(),
                   message.data(), message.size(), material.public_key.data()) == 0;
    case SigScheme::dilithium3:
        if (material.public_key.size() != kDilithiumPublicKeyBytes) {
            throw MalformedKeyError("Dilithium public key has wrong length");
        }
        return PQCLEAN_DILITHIUM3_CLEAN_crypto_sign_verify(
                   material.signature.data(), material.signature.size(),
                   message.data(), message.size(), material.public_key.data()) == 0;
    case SigScheme::hmac256:
        break;
    }
    throw UnsupportedSchemeError(
        "sig_verify supports Falcon1024 and Dilithium3; Hmac256 uses mac_verify");
}

Bytes otp_xor(BytesView a, BytesView b) {
    if (a.size() != b.size()) {
        throw LengthMismatchError("XOR operands differ: " + std::to_string(a.size()) +
                                  " vs " + std::to_string(b.size()) + " bytes");
    }
    Bytes out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        out[i] = a[i] ^ b[i];
    }
    return out;
}

void otp_xor_inplace(std::span<std::uint8_t> target, BytesView pad) {
    if (target.size() != pad.size()) {
        throw LengthMismatchError("XOR operands differ: " +
                                  std::to_string(target.size()) + " vs " +
                                  std::to_string(pad.size()) + " bytes");
    }
    for (std::size_t i = 0; i < target.size(); ++i) {
        target[i] ^= pad[i];
    }
}

SymKey kdf_expand(BytesView secret, std::string_view label) {
    shake256incctx state;
    shake256_inc_init(&state);
    static constexpr char kDomain[] = "qkdrelay.kdf.v1";
    shake256_inc_absorb(&state, reinterpret_cast<const std::uint8_t*>(kDomain),
                        sizeof(kDomain) - 1);
    shake256_inc_absorb(&state, secret.data(), secret.size());
    shake256_inc_absorb(&state, reinterpret_cast<const std::uint8_t*>(label.data()),
                        label.size());
    shake256_inc_finalize(&state);
    SymKey key;
    shake256_inc_squeeze(key.bytes.data(), key.bytes.size(), &state);
    shake256_inc_ctx_release(&state);
    return key;
}

void verify_backend_constants() {
    auto check = [](bool ok, const char* what) {
        if (!ok) {
            throw ConfigError(std::string("backend constant mismatch: ") + what);
        }
    };
    check(EVP_CIPHER_get_key_length(EVP_aes_256_cbc()) == kSymKeyBytes,
          "AES-256 key length");
    check(EVP_CIPHER_get_block_size(EVP_aes_256_cbc()) == kBlockBytes,
          "AES block size");
    check(EVP_CIPHER_get_iv_length(EVP_aes_256_cbc()) == kIvBytes, "AES IV length");
    check(hmac_algorithm() != nullptr, "HMAC backend");

    RngContext rng(0x636f6e7374u);
    KemKeyPair kem_pair = kem_keygen(rng);
    check(kem_pair.public_key.size() == kKemPublicKeyBytes, "KEM public key bytes");
    check(kem_pair.secret_key.size() == kKemSecretKeyBytes, "KEM secret key bytes");
    KemEncapsulation encap = kem_encapsulate(kem_pair.public_key, rng);
    check(encap.ciphertext.size() == kKemCiphertextBytes, "KEM ciphertext bytes");
    check(encap.shared_secret.size() == kKemSharedSecretBytes,
          "KEM shared secret bytes");
    check(kem_decapsulate(kem_pair.secret_key, encap.ciphertext) == encap.shared_secret,
          "KEM round trip");

    const std::uint8_t probe[4] = {'s', 'e', 'l', 'f'};
    SigKeyPair falcon = sig_keygen(SigScheme::falcon1024, rng);
    check(falcon.public_key.size() == kFalconPublicKeyBytes, "Falcon public key bytes");
    SigMaterial falcon_sig = sig_sign(falcon, BytesView(probe, sizeof(probe)));
    check(falcon_sig.signature.size() == kFalconSignatureBytes,
          "Falcon signature bytes");
    check(sig_verify(falcon_sig, BytesView(probe, sizeof(probe))),
          "Falcon round trip");

    SigKeyPair dilithium = sig_keygen(SigScheme::dilithium3, rng);
    check(dilithium.public_key.size() == kDilithiumPublicKeyBytes,
          "Dilithium public key bytes");
    SigMaterial dilithium_sig = sig_sign(dilithium, BytesView(probe, sizeof(probe)));
    check(dilithium_sig.signature.size() == kDilithiumSignatureBytes,
          "Dilithium signature bytes");
    check(sig_verify(dilithium_sig, BytesView(probe, sizeof(probe))),
          "Dilithium round trip");
}

}  // namespace qkdrelay
