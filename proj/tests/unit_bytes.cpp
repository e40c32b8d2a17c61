#include "doctest.h"

#include "qkdrelay/bytes.hpp"
#include "qkdrelay/errors.hpp"
#include "qkdrelay/rng.hpp"
#include "qkdrelay/types.hpp"

using namespace qkdrelay;

namespace {

Bytes str_bytes(std::string_view s) {
    return Bytes(s.begin(), s.end());
}

}  // namespace

TEST_CASE("hex encoding round-trips and rejects bad input") {
    CHECK(to_hex(Bytes{}) == "");
    CHECK(to_hex(Bytes{0x00, 0xff, 0x5a}) == "00ff5a");
    CHECK(from_hex("00ff5a") == Bytes{0x00, 0xff, 0x5a});
    CHECK(from_hex("00FF5A") == Bytes{0x00, 0xff, 0x5a});

    RngContext rng(7);
    Bytes data = rng.bytes(129);
    CHECK(from_hex(to_hex(data)) == data);

    CHECK_THROWS_AS(from_hex("abc"), FormatError);
    CHECK_THROWS_AS(from_hex("zz"), FormatError);
}

TEST_CASE("base64 matches the RFC 4648 vectors") {
    CHECK(to_base64(Bytes{}) == "");
    CHECK(to_base64(str_bytes("f")) == "Zg==");
    CHECK(to_base64(str_bytes("fo")) == "Zm8=");
    CHECK(to_base64(str_bytes("foo")) == "Zm9v");
    CHECK(to_base64(str_bytes("foob")) == "Zm9vYg==");
    CHECK(to_base64(str_bytes("fooba")) == "Zm9vYmE=");
    CHECK(to_base64(str_bytes("foobar")) == "Zm9vYmFy");

    CHECK(from_base64("") == Bytes{});
    CHECK(from_base64("Zg==") == str_bytes("f"));
    CHECK(from_base64("Zm8=") == str_bytes("fo"));
    CHECK(from_base64("Zm9v") == str_bytes("foo"));
    CHECK(from_base64("Zm9vYg==") == str_bytes("foob"));
    CHECK(from_base64("Zm9vYmE=") == str_bytes("fooba"));
    CHECK(from_base64("Zm9vYmFy") == str_bytes("foobar"));
}

TEST_CASE("base64 round-trips random data and rejects malformed text") {
    RngContext rng(11);
    for (std::size_t len : {std::size_t{1}, std::size_t{2}, std::size_t{3},
                            std::size_t{256}, std::size_t{1088}}) {
        Bytes data = rng.bytes(len);
        CHECK(from_base64(to_base64(data)) == data);
    }

    CHECK_THROWS_AS(from_base64("Zg="), FormatError);    // not a multiple of 4
    CHECK_THROWS_AS(from_base64("Zg=a"), FormatError);   // data after padding
    CHECK_THROWS_AS(from_base64("===="), FormatError);   // padding only
    CHECK_THROWS_AS(from_base64("Zm9$"), FormatError);   // bad character
}

TEST_CASE("big-endian integer helpers round-trip") {
    Bytes buf;
    put_u16_be(buf, 0xbeef);
    put_u32_be(buf, 0x01020304u);
    REQUIRE(buf.size() == 6);
    CHECK(buf == Bytes{0xbe, 0xef, 0x01, 0x02, 0x03, 0x04});
    CHECK(get_u16_be(buf, 0) == 0xbeef);
    CHECK(get_u32_be(buf, 2) == 0x01020304u);
}

TEST_CASE("concat joins parts in order") {
    Bytes a{1, 2};
    Bytes b{};
    Bytes c{3};
    CHECK(concat({a, b, c}) == Bytes{1, 2, 3});
}

TEST_CASE("node ids parse, print, and order deterministically") {
    NodeId id = NodeId::from_hex("000102030405060708090a0b0c0d0e0f");
    CHECK(id.to_hex() == "000102030405060708090a0b0c0d0e0f");
    CHECK(id.short_hex() == "00010203");
    CHECK_THROWS_AS(NodeId::from_hex("0001"), FormatError);

    RngContext rng(3);
    NodeId r1 = NodeId::random(rng);
    NodeId r2 = NodeId::random(rng);
    CHECK(r1 != r2);

    RngContext rng_again(3);
    CHECK(NodeId::random(rng_again) == r1);
}

TEST_CASE("links normalize their endpoint order") {
    NodeId x = NodeId::from_hex("ffeeddccbbaa99887766554433221100");
    NodeId y = NodeId::from_hex("000102030405060708090a0b0c0d0e0f");
    LinkId link1 = LinkId::between(x, y);
    LinkId link2 = LinkId::between(y, x);
    CHECK(link1 == link2);
    CHECK(link1.a == y);
    CHECK(link1.b == x);
    CHECK(link1.has_endpoint(x));
    CHECK(link1.has_endpoint(y));
    CHECK(link1.peer_of(x) == y);
    CHECK(link1.peer_of(y) == x);
}
