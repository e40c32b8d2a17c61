#include "doctest.h"

#include "httplib.h"
#include "json.hpp"
#include "qkdrelay/errors.hpp"
#include "qkdrelay/qkdlink.hpp"
#include "qkdrelay/qkdlink_http.hpp"

using namespace qkdrelay;
using nlohmann::json;

namespace {

struct ServerFixture {
    NodeId alice = NodeId::from_hex("aa000000000000000000000000000001");
    NodeId bob = NodeId::from_hex("bb000000000000000000000000000002");
    KmeStore store{4242};
    KmeHttpServer server{store, alice};
    int port = 0;

    ServerFixture() {
        store.add_link(LinkId::between(alice, bob));
        port = server.start();
    }
};

}  // namespace

TEST_CASE("the status route reports ETSI-style fields") {
    ServerFixture f;
    httplib::Client http("127.0.0.1", f.port);
    auto res = http.Get("/api/v1/keys/" + f.bob.to_hex() + "/status");
    REQUIRE(res);
    REQUIRE(res->status == 200);
    json body = json::parse(res->body);
    CHECK(body.at("source_KME_ID") == f.alice.to_hex());
    CHECK(body.at("target_KME_ID") == f.bob.to_hex());
    CHECK(body.at("key_size") == 256);
    CHECK(body.at("max_key_per_request") == 128);
    CHECK(body.contains("stored_key_count"));
    CHECK(body.contains("max_key_count"));
}

TEST_CASE("enc_keys returns a keys container with base64 material") {
    ServerFixture f;
    httplib::Client http("127.0.0.1", f.port);
    auto res = http.Get("/api/v1/keys/" + f.bob.to_hex() +
                        "/enc_keys?number=2&size=256");
    REQUIRE(res);
    REQUIRE(res->status == 200);
    json body = json::parse(res->body);
    REQUIRE(body.at("keys").size() == 2);
    for (const json& entry : body["keys"]) {
        Bytes id = parse_key_id(entry.at("key_ID").get<std::string>());
        CHECK(id.size() == 16);
        CHECK(from_base64(entry.at("key").get<std::string>()).size() == 32);
    }

    // Omitted parameters fall back to one key of the link's default size.
    auto res_default = http.Get("/api/v1/keys/" + f.bob.to_hex() + "/enc_keys");
    REQUIRE(res_default);
    REQUIRE(res_default->status == 200);
    json defaults = json::parse(res_default->body);
    REQUIRE(defaults.at("keys").size() == 1);
    CHECK(from_base64(defaults["keys"][0].at("key").get<std::string>()).size() == 32);
}

TEST_CASE("dec_keys resolves ids posted in a key_IDs array") {
    ServerFixture f;
    KmeHttpServer bob_server(f.store, f.bob);
    int bob_port = bob_server.start();

    httplib::Client alice_http("127.0.0.1", f.port);
    httplib::Client bob_http("127.0.0.1", bob_port);

    auto issued = alice_http.Get("/api/v1/keys/" + f.bob.to_hex() +
                                 "/enc_keys?number=1&size=256");
    REQUIRE(issued);
    json issued_body = json::parse(issued->body);
    std::string key_id = issued_body["keys"][0]["key_ID"];
    std::string key_b64 = issued_body["keys"][0]["key"];

    json request{{"key_IDs", json::array({json{{"key_ID", key_id}}})}};
    auto resolved = bob_http.Post("/api/v1/keys/" + f.alice.to_hex() + "/dec_keys",
                                  request.dump(), "application/json");
    REQUIRE(resolved);
    REQUIRE(resolved->status == 200);
    json resolved_body = json::parse(resolved->body);
    CHECK(resolved_body["keys"][0]["key_ID"] == key_id);
    CHECK(resolved_body["keys"][0]["key"] == key_b64);

    // Replay: 409 with a machine-readable code.
    auto replay = bob_http.Post("/api/v1/keys/" + f.alice.to_hex() + "/dec_keys",
                                request.dump(), "application/json");
    REQUIRE(replay);
    CHECK(replay->status == 409);
    CHECK(json::parse(replay->body).at("code") == "AlreadyConsumed");
}

TEST_CASE("HTTP failures carry status codes matching the error kind") {
    ServerFixture f;
    httplib::Client http("127.0.0.1", f.port);

    auto unknown = http.Get(
        "/api/v1/keys/cc000000000000000000000000000003/status");
    REQUIRE(unknown);
    CHECK(unknown->status == 404);
    CHECK(json::parse(unknown->body).at("code") == "UnknownLink");

    auto bad_number = http.Get("/api/v1/keys/" + f.bob.to_hex() +
                               "/enc_keys?number=0");
    REQUIRE(bad_number);
    CHECK(bad_number->status == 400);

    auto bad_body = http.Post("/api/v1/keys/" + f.bob.to_hex() + "/dec_keys",
                              "not json", "application/json");
    REQUIRE(bad_body);
    CHECK(bad_body->status == 400);
    CHECK(json::parse(bad_body->body).at("code") == "FormatError");

    // The issuing side cannot resolve its own id: 401.
    auto issued = http.Get("/api/v1/keys/" + f.bob.to_hex() + "/enc_keys");
    json issued_body = json::parse(issued->body);
    json request{{"key_IDs",
                  json::array({json{{"key_ID", issued_body["keys"][0]["key_ID"]}}})}};
    auto own = http.Post("/api/v1/keys/" + f.bob.to_hex() + "/dec_keys",
                         request.dump(), "application/json");
    REQUIRE(own);
    CHECK(own->status == 401);
    CHECK(json::parse(own->body).at("code") == "Unauthorized");
}

TEST_CASE("an exhausted finite pool maps to 503") {
    NodeId alice = NodeId::from_hex("aa000000000000000000000000000001");
    NodeId bob = NodeId::from_hex("bb000000000000000000000000000002");
    KmeStore store(4243);
    LinkOptions options;
    options.finite_pool_keys = 1;
    store.add_link(LinkId::between(alice, bob), options);
    KmeHttpServer server(store, alice);
    int port = server.start();

    httplib::Client http("127.0.0.1", port);
    auto first = http.Get("/api/v1/keys/" + bob.to_hex() + "/enc_keys");
    REQUIRE(first);
    CHECK(first->status == 200);
    auto second = http.Get("/api/v1/keys/" + bob.to_hex() + "/enc_keys");
    REQUIRE(second);
    CHECK(second->status == 503);
    CHECK(json::parse(second->body).at("code") == "Exhausted");
}

TEST_CASE("the REST client mirrors the in-process client") {
    ServerFixture f;
    HttpKmeClient client("127.0.0.1", f.port);

    KmeStatus status = client.status(f.bob);
    CHECK(status.source == f.alice);
    CHECK(status.target == f.bob);
    CHECK(status.key_size_bits == 256);

    std::vector<QkdPad> issued = client.get_enc_keys(f.bob, 2, 512);
    REQUIRE(issued.size() == 2);
    CHECK(issued[0].pad.size() == 64);

    DirectKmeClient bob_client(f.store, f.bob);
    std::vector<QkdPad> resolved = bob_client.get_dec_keys(f.alice,
                                                           {issued[0].key_id});
    CHECK(resolved[0].pad == issued[0].pad);

    CHECK_THROWS_AS((void)client.get_enc_keys(f.bob, 0, 256), LengthError);
    NodeId stranger = NodeId::from_hex("dd000000000000000000000000000004");
    CHECK_THROWS_AS((void)client.status(stranger), UnknownLinkError);
}

TEST_CASE("two REST endpoints with one seed serve identical key bytes") {
    NodeId alice = NodeId::from_hex("aa000000000000000000000000000001");
    NodeId bob = NodeId::from_hex("bb000000000000000000000000000002");
    LinkId link = LinkId::between(alice, bob);

    // Independent store instances, as if running on two machines.
    KmeStore store_a(31337);
    KmeStore store_b(31337);
    store_a.add_link(link);
    store_b.add_link(link);
    KmeHttpServer server_a(store_a, alice);
    KmeHttpServer server_b(store_b, bob);
    HttpKmeClient client_a("127.0.0.1", server_a.start());
    HttpKmeClient client_b("127.0.0.1", server_b.start());

    std::vector<QkdPad> issued = client_a.get_enc_keys(bob, 1, 256);
    std::vector<QkdPad> resolved = client_b.get_dec_keys(alice,
                                                         {issued[0].key_id});
    CHECK(resolved[0].pad == issued[0].pad);
    CHECK_THROWS_AS((void)client_b.get_dec_keys(alice, {issued[0].key_id}),
                    AlreadyConsumedError);
}
