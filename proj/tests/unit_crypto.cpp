#include "doctest.h"

#include <string_view>

#include "qkdrelay/bytes.hpp"
#include "qkdrelay/crypto.hpp"
#include "qkdrelay/errors.hpp"
#include "qkdrelay/rng.hpp"

using namespace qkdrelay;

namespace {

Bytes str_bytes(std::string_view s) {
    return Bytes(s.begin(), s.end());
}

const SymKey kTestKey = SymKey::from(from_hex(
    "000102030405060708090a0b0c0d0e0f101112131415161718191a1b1c1d1e1f"));

}  // namespace

TEST_CASE("ciphertext length formula covers all padding cases") {
    CHECK(sym_ciphertext_len(0) == 32);
    CHECK(sym_ciphertext_len(1) == 32);
    CHECK(sym_ciphertext_len(15) == 32);
    CHECK(sym_ciphertext_len(16) == 48);   // full block still gains a padding block
    CHECK(sym_ciphertext_len(17) == 48);
    CHECK(sym_ciphertext_len(32) == 64);
    CHECK(sym_ciphertext_len(43) == 64);

    RngContext rng(1);
    for (std::size_t len : {std::size_t{0}, std::size_t{1}, std::size_t{15},
                            std::size_t{16}, std::size_t{17}, std::size_t{255}}) {
        Bytes ct = sym_encrypt(kTestKey, rng.bytes(len), rng);
        CHECK(ct.size() == sym_ciphertext_len(len));
    }
}

TEST_CASE("CBC decryption matches an external encryption oracle") {
    // Ciphertexts produced with `openssl enc -aes-256-cbc -nosalt` using the
    // key above and IV 00112233445566778899aabbccddeeff.
    const Bytes iv = from_hex("00112233445566778899aabbccddeeff");

    Bytes ct43 = concat({iv, from_hex(
        "c95332aa8f70782fc360f150a1a19422157ccad3b3ae7438b259b176527840be"
        "142e245ca1c1bc9724e9caf12fb45a62")});
    CHECK(sym_decrypt(kTestKey, ct43) ==
          str_bytes("The quick brown fox jumps over the lazy dog"));

    Bytes ct16 = concat({iv, from_hex(
        "de3a42aa280bdf48bfad9db8e0bc8471c3ad43e933bb1b968ce01fac93217cee")});
    CHECK(sym_decrypt(kTestKey, ct16) == str_bytes("exactly 16 bytes"));
}

TEST_CASE("CBC round-trips with a fresh IV per call") {
    RngContext rng(2);
    Bytes plaintext = str_bytes("layered encryption payload");
    Bytes ct1 = sym_encrypt(kTestKey, plaintext, rng);
    Bytes ct2 = sym_encrypt(kTestKey, plaintext, rng);
    CHECK(ct1 != ct2);  // fresh IV each call
    CHECK(sym_decrypt(kTestKey, ct1) == plaintext);
    CHECK(sym_decrypt(kTestKey, ct2) == plaintext);

    Bytes empty = sym_encrypt(kTestKey, Bytes{}, rng);
    CHECK(sym_decrypt(kTestKey, empty) == Bytes{});
}

TEST_CASE("CBC decryption distinguishes length and padding failures") {
    RngContext rng(3);
    Bytes ct = sym_encrypt(kTestKey, str_bytes("payload"), rng);

    Bytes truncated(ct.begin(), ct.end() - 1);
    CHECK_THROWS_AS(sym_decrypt(kTestKey, truncated), LengthError);
    CHECK_THROWS_AS(sym_decrypt(kTestKey, Bytes(16, 0)), LengthError);

    Bytes wrong_key_ct = ct;
    SymKey other = SymKey::random(rng);
    CHECK_THROWS_AS((void)sym_decrypt(other, wrong_key_ct), PaddingError);

    Bytes flipped = ct;
    flipped.back() ^= 0x01;  // corrupt the padding block
    CHECK_THROWS_AS((void)sym_decrypt(kTestKey, flipped), PaddingError);
}

TEST_CASE("HMAC matches an external reference and verifies in constant time") {
    // Expected digests computed with an independent HMAC-SHA-256
    // implementation using the 32-byte key 0b0b...0b.
    SymKey mac_key = SymKey::from(Bytes(32, 0x0b));
    Bytes msg = str_bytes("what do ya want for nothing?");

    MacTag tag = mac_tag(mac_key, msg);
    CHECK(to_hex(BytesView(tag.data(), tag.size())) ==
          "c3f2649c34ea24e4d62a2c7e868bbea0233c9d4c2cc300794db76aa18d6822d8");

    MacTag empty_tag = mac_tag(mac_key, Bytes{});
    CHECK(to_hex(BytesView(empty_tag.data(), empty_tag.size())) ==
          "5177e637aaac0b50e5dca8bb05b0b571444bd59b9b0d834d50681af21fc14b1e");

    CHECK(mac_verify(mac_key, msg, tag));
    MacTag bad = tag;
    bad[31] ^= 0x80;
    CHECK_FALSE(mac_verify(mac_key, msg, bad));
    CHECK_FALSE(mac_verify(kTestKey, msg, tag));  // wrong key
}

TEST_CASE("KEM round-trips with the documented object sizes") {
    RngContext rng(4);
    KemKeyPair pair = kem_keygen(rng);
    CHECK(pair.public_key.size() == 1184);
    CHECK(pair.secret_key.size() == 2400);

    KemEncapsulation encap = kem_encapsulate(pair.public_key, rng);
    CHECK(encap.ciphertext.size() == 1088);
    CHECK(encap.shared_secret.size() == 32);

    CHECK(kem_decapsulate(pair.secret_key, encap.ciphertext) == encap.shared_secret);
}

TEST_CASE("KEM is deterministic under a seeded context") {
    RngContext rng_a(5);
    RngContext rng_b(5);
    KemKeyPair a = kem_keygen(rng_a);
    KemKeyPair b = kem_keygen(rng_b);
    CHECK(a.public_key == b.public_key);
    CHECK(a.secret_key == b.secret_key);

    KemEncapsulation ea = kem_encapsulate(a.public_key, rng_a);
    KemEncapsulation eb = kem_encapsulate(b.public_key, rng_b);
    CHECK(ea.ciphertext == eb.ciphertext);
    CHECK(ea.shared_secret == eb.shared_secret);
}

TEST_CASE("KEM decapsulation with the wrong key yields a different secret") {
    RngContext rng(6);
    KemKeyPair right = kem_keygen(rng);
    KemKeyPair wrong = kem_keygen(rng);
    KemEncapsulation encap = kem_encapsulate(right.public_key, rng);
    CHECK(kem_decapsulate(wrong.secret_key, encap.ciphertext) != encap.shared_secret);
}

TEST_CASE("KEM rejects malformed inputs") {
    RngContext rng(7);
    CHECK_THROWS_AS((void)kem_encapsulate(rng.bytes(1183), rng), MalformedKeyError);
    KemKeyPair pair = kem_keygen(rng);
    CHECK_THROWS_AS((void)kem_decapsulate(rng.bytes(10), rng.bytes(1088)),
                    MalformedKeyError);
    CHECK_THROWS_AS((void)kem_decapsulate(pair.secret_key, rng.bytes(1087)),
                    MalformedKeyError);
}

TEST_CASE("signature schemes expose their documented sizes") {
    CHECK(sig_public_key_bytes(SigScheme::hmac256) == 0);
    CHECK(sig_signature_bytes(SigScheme::hmac256) == 32);
    CHECK(sig_public_key_bytes(SigScheme::falcon1024) == 1793);
    CHECK(sig_signature_bytes(SigScheme::falcon1024) == 1280);
    CHECK(sig_public_key_bytes(SigScheme::dilithium3) == 1952);
    CHECK(sig_signature_bytes(SigScheme::dilithium3) == 3293);

    CHECK(sig_backend_available(SigScheme::hmac256));
    CHECK(sig_backend_available(SigScheme::falcon1024));
    CHECK(sig_backend_available(SigScheme::dilithium3));
}

TEST_CASE("Falcon signatures round-trip at a fixed length") {
    RngContext rng(8);
    SigKeyPair pair = sig_keygen(SigScheme::falcon1024, rng);
    CHECK(pair.public_key.size() == 1793);
    CHECK(pair.secret_key.size() == 2305);

    Bytes msg = str_bytes("sign me");
    SigMaterial material = sig_sign(pair, msg);
    CHECK(material.signature.size() == 1280);
    CHECK(material.public_key == pair.public_key);
    CHECK(sig_verify(material, msg));

    SigMaterial bad_sig = material;
    bad_sig.signature[100] ^= 0x01;
    CHECK_FALSE(sig_verify(bad_sig, msg));
    CHECK_FALSE(sig_verify(material, str_bytes("sign mf")));
}

TEST_CASE("Dilithium signatures round-trip at a fixed length") {
    RngContext rng(9);
    SigKeyPair pair = sig_keygen(SigScheme::dilithium3, rng);
    CHECK(pair.public_key.size() == 1952);

    Bytes msg = str_bytes("authenticate this layer");
    SigMaterial material = sig_sign(pair, msg);
    CHECK(material.signature.size() == 3293);
    CHECK(sig_verify(material, msg));

    SigMaterial bad_sig = material;
    bad_sig.signature[0] ^= 0xff;
    CHECK_FALSE(sig_verify(bad_sig, msg));
    CHECK_FALSE(sig_verify(material, str_bytes("authenticate that layer")));
}

TEST_CASE("the symmetric authenticator is not routed through sig_sign") {
    RngContext rng(10);
    CHECK_THROWS_AS((void)sig_keygen(SigScheme::hmac256, rng), UnsupportedSchemeError);
    SigKeyPair fake{SigScheme::hmac256, {}, {}};
    CHECK_THROWS_AS((void)sig_sign(fake, str_bytes("x")), UnsupportedSchemeError);
    SigMaterial fake_material{SigScheme::hmac256, {}, {}};
    CHECK_THROWS_AS((void)sig_verify(fake_material, str_bytes("x")),
                    UnsupportedSchemeError);
}

TEST_CASE("XOR combine is an involution and enforces matching lengths") {
    RngContext rng(11);
    Bytes a = rng.bytes(64);
    Bytes pad = rng.bytes(64);
    Bytes combined = otp_xor(a, pad);
    CHECK(combined != a);
    CHECK(otp_xor(combined, pad) == a);
    CHECK(otp_xor(a, a) == Bytes(64, 0));

    CHECK_THROWS_AS((void)otp_xor(a, rng.bytes(63)), LengthMismatchError);

    Bytes target = a;
    otp_xor_inplace(target, pad);
    CHECK(target == combined);
    CHECK_THROWS_AS(otp_xor_inplace(target, rng.bytes(1)), LengthMismatchError);
}

TEST_CASE("key derivation matches the SHAKE256 reference expansion") {
    // Expected values computed with an independent SHAKE256 implementation
    // over "qkdrelay.kdf.v1" || secret || label.
    Bytes secret(32);
    for (std::size_t i = 0; i < secret.size(); ++i) {
        secret[i] = static_cast<std::uint8_t>(i);
    }
    CHECK(to_hex(kdf_expand(secret, "enc").view()) ==
          "e3f9cba59fd328c93530913c5454ab957b83c6847252e6d9f0f4c3860979532d");
    CHECK(to_hex(kdf_expand(secret, "mac").view()) ==
          "7a21855e656fab84f24ebce8d2cf27cbcd5b6aa0b1a4f78bb448e3f7ca744237");
    CHECK(to_hex(kdf_expand(Bytes{}, "").view()) ==
          "7870cfdd2d1e0f2c85997e7504c8e74e1da7ad4fbe20c3f9925d7dfeef202958");
}

TEST_CASE("malformed symmetric keys are rejected") {
    CHECK_THROWS_AS((void)SymKey::from(Bytes(31, 0)), MalformedKeyError);
    CHECK_THROWS_AS((void)SymKey::from(Bytes(33, 0)), MalformedKeyError);
}

TEST_CASE("backend constant verification passes") {
    CHECK_NOTHROW(verify_backend_constants());
}
