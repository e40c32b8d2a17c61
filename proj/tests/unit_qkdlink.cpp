#include "doctest.h"

#include "qkdrelay/errors.hpp"
#include "qkdrelay/qkdlink.hpp"
#include "qkdrelay/rng.hpp"

using namespace qkdrelay;

namespace {

struct Fixture {
    NodeId alice = NodeId::from_hex("aa000000000000000000000000000001");
    NodeId bob = NodeId::from_hex("bb000000000000000000000000000002");
    NodeId carol = NodeId::from_hex("cc000000000000000000000000000003");
    LinkId ab = LinkId::between(alice, bob);
};

}  // namespace

TEST_CASE("key id strings use 8-4-4-4-12 formatting and round-trip") {
    Bytes id = from_hex("0123456789abcdef0011223344556677");
    std::string text = format_key_id(id);
    CHECK(text == "01234567-89ab-cdef-0011-223344556677");
    CHECK(parse_key_id(text) == id);

    CHECK_THROWS_AS((void)parse_key_id("0123456789abcdef0011223344556677"),
                    FormatError);
    CHECK_THROWS_AS((void)parse_key_id("01234567-89ab-cdef-0011-22334455667"),
                    FormatError);
    CHECK_THROWS_AS((void)format_key_id(Bytes(8, 0)), FormatError);
}

TEST_CASE("issued keys resolve to identical pads on the peer end") {
    Fixture f;
    KmeStore store(1234);
    store.add_link(f.ab);

    std::vector<QkdPad> issued = store.get_enc_keys(f.ab, f.alice, 3, 256);
    REQUIRE(issued.size() == 3);
    for (const QkdPad& pad : issued) {
        CHECK(pad.key_id.size() == 16);
        CHECK(pad.pad.size() == 32);
    }
    CHECK(issued[0].key_id != issued[1].key_id);
    CHECK(issued[0].pad != issued[1].pad);

    std::vector<Bytes> ids{issued[0].key_id, issued[1].key_id, issued[2].key_id};
    std::vector<QkdPad> resolved = store.get_dec_keys(f.ab, f.bob, ids);
    REQUIRE(resolved.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(resolved[i].key_id == issued[i].key_id);
        CHECK(resolved[i].pad == issued[i].pad);
    }
}

TEST_CASE("separately constructed stores with one seed serve identical bytes") {
    Fixture f;
    KmeStore store_x(777);
    KmeStore store_y(777);
    store_x.add_link(f.ab);
    store_y.add_link(f.ab);

    std::vector<QkdPad> issued = store_x.get_enc_keys(f.ab, f.alice, 2, 512);
    std::vector<QkdPad> resolved =
        store_y.get_dec_keys(f.ab, f.bob, {issued[0].key_id, issued[1].key_id});
    CHECK(resolved[0].pad == issued[0].pad);
    CHECK(resolved[1].pad == issued[1].pad);

    KmeStore store_z(778);  // different seed, same link: different stream
    store_z.add_link(f.ab);
    CHECK_THROWS_AS(
        (void)store_z.get_dec_keys(f.ab, f.bob, {issued[0].key_id}),
        UnknownKeyIdError);  // the id's MAC does not verify under another seed
}

TEST_CASE("requests on unknown links or from outsiders are rejected") {
    Fixture f;
    KmeStore store(5);
    store.add_link(f.ab);

    LinkId bc = LinkId::between(f.bob, f.carol);
    CHECK_THROWS_AS((void)store.get_enc_keys(bc, f.bob, 1, 256), UnknownLinkError);
    CHECK_THROWS_AS((void)store.status(bc, f.bob), UnknownLinkError);
    CHECK_THROWS_AS((void)store.get_enc_keys(f.ab, f.carol, 1, 256),
                    UnauthorizedError);
    CHECK_THROWS_AS((void)store.get_dec_keys(f.ab, f.carol, {}), UnauthorizedError);
}

TEST_CASE("key id misuse is reported precisely") {
    Fixture f;
    KmeStore store(6);
    store.add_link(f.ab);
    std::vector<QkdPad> issued = store.get_enc_keys(f.ab, f.alice, 1, 256);
    const Bytes& id = issued[0].key_id;

    // The issuing end cannot resolve its own identifier.
    CHECK_THROWS_AS((void)store.get_dec_keys(f.ab, f.alice, {id}),
                    UnauthorizedError);

    // Forged or foreign identifiers are unknown.
    Bytes forged = id;
    forged[10] ^= 0x01;
    CHECK_THROWS_AS((void)store.get_dec_keys(f.ab, f.bob, {forged}),
                    UnknownKeyIdError);
    CHECK_THROWS_AS((void)store.get_dec_keys(f.ab, f.bob, {Bytes(4, 0)}),
                    UnknownKeyIdError);

    // First resolution succeeds, replays are refused.
    CHECK_NOTHROW((void)store.get_dec_keys(f.ab, f.bob, {id}));
    CHECK_THROWS_AS((void)store.get_dec_keys(f.ab, f.bob, {id}),
                    AlreadyConsumedError);
}

TEST_CASE("size and count limits are enforced") {
    Fixture f;
    KmeStore store(7);
    store.add_link(f.ab);

    CHECK_THROWS_AS((void)store.get_enc_keys(f.ab, f.alice, 0, 256), LengthError);
    CHECK_THROWS_AS((void)store.get_enc_keys(f.ab, f.alice, 129, 256), LengthError);
    CHECK_THROWS_AS((void)store.get_enc_keys(f.ab, f.alice, 1, 0), LengthError);
    CHECK_THROWS_AS((void)store.get_enc_keys(f.ab, f.alice, 1, 12), LengthError);

    // Requests are sized in bits; an 800-bit request yields 100 bytes.
    std::vector<QkdPad> pads = store.get_enc_keys(f.ab, f.alice, 1, 800);
    CHECK(pads[0].pad.size() == 100);
}

TEST_CASE("finite pools drain per issued key and then report Exhausted") {
    Fixture f;
    KmeStore store(8);
    LinkOptions options;
    options.finite_pool_keys = 8;
    store.add_link(f.ab, options);

    KmeStatus before = store.status(f.ab, f.alice);
    CHECK(before.stored_key_count == 8);
    CHECK(before.max_key_count == 8);

    (void)store.get_enc_keys(f.ab, f.alice, 5, 256);
    KmeStatus after = store.status(f.ab, f.alice);
    CHECK(after.stored_key_count == 3);

    CHECK_THROWS_AS((void)store.get_enc_keys(f.ab, f.bob, 4, 256), ExhaustedError);
    CHECK_NOTHROW((void)store.get_enc_keys(f.ab, f.bob, 3, 256));
    CHECK_THROWS_AS((void)store.get_enc_keys(f.ab, f.alice, 1, 256), ExhaustedError);
}

TEST_CASE("status describes the link from the caller's perspective") {
    Fixture f;
    KmeStore store(9);
    store.add_link(f.ab);

    KmeStatus from_alice = store.status(f.ab, f.alice);
    CHECK(from_alice.source == f.alice);
    CHECK(from_alice.target == f.bob);
    CHECK(from_alice.key_size_bits == 256);
    CHECK(from_alice.max_keys_per_request == 128);
    CHECK(from_alice.stored_key_count > 0);

    KmeStatus from_bob = store.status(f.ab, f.bob);
    CHECK(from_bob.source == f.bob);
    CHECK(from_bob.target == f.alice);
}

TEST_CASE("clients address links by peer and share one store") {
    Fixture f;
    KmeStore store(10);
    store.add_link(f.ab);

    DirectKmeClient alice_client(store, f.alice);
    DirectKmeClient bob_client(store, f.bob);

    std::vector<QkdPad> issued = alice_client.get_enc_keys(f.bob, 1, 256);
    std::vector<QkdPad> resolved = bob_client.get_dec_keys(f.alice,
                                                           {issued[0].key_id});
    CHECK(resolved[0].pad == issued[0].pad);
    CHECK(alice_client.status(f.bob).target == f.bob);
}

TEST_CASE("draw_link_pad issues and resolves in one step") {
    Fixture f;
    KmeStore store(11);
    store.add_link(f.ab);
    QkdPad pad = draw_link_pad(store, f.ab, f.alice, 48);
    CHECK(pad.pad.size() == 48);
    // The helper already consumed the id on the peer end.
    CHECK_THROWS_AS((void)store.get_dec_keys(f.ab, f.bob, {pad.key_id}),
                    AlreadyConsumedError);
}
