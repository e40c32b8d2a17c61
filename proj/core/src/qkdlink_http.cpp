#include "qkdrelay/qkdlink_http.hpp"

#include <functional>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "qkdrelay/errors.hpp"

namespace qkdrelay {

namespace {

using nlohmann::json;

constexpr char kPeerPattern[] = "([0-9a-fA-F]{32})";

struct HttpFailure {
    int status;
    Errc code;
    std::string message;
};

HttpFailure to_http_failure(const Error& error) {
    int status = 500;
    switch (error.code()) {
    case Errc::unknown_link:
    case Errc::unknown_key_id:
        status = 404;
        break;
    case Errc::unauthorized:
        status = 401;
        break;
    case Errc::already_consumed:
        status = 409;
        break;
    case Errc::exhausted:
        status = 503;
        break;
    case Errc::length:
    case Errc::format:
        status = 400;
        break;
    default:
        status = 500;
        break;
    }
    return {status, error.code(), error.what()};
}

void write_failure(httplib::Response& res, const HttpFailure& failure) {
    json body;
    body["message"] = failure.message;
    body["code"] = errc_name(failure.code);
    res.status = failure.status;
    res.set_content(body.dump(), "application/json");
}

void guard(httplib::Response& res, const std::function<void()>& body) {
    try {
        body();
    } catch (const Error& error) {
        write_failure(res, to_http_failure(error));
    } catch (const std::exception& ex) {
        write_failure(res, {500, Errc::io, ex.what()});
    }
}

json keys_to_json(const std::vector<QkdPad>& pads) {
    json keys = json::array();
    for (const QkdPad& pad : pads) {
        keys.push_back({{"key_ID", pad.key_id_str()}, {"key", to_base64(pad.pad)}});
    }
    return json{{"keys", std::move(keys)}};
}

[[noreturn]] void throw_by_code(std::string_view code, const std::string& message) {
    if (code == "UnknownLink") throw UnknownLinkError(message);
    if (code == "UnknownKeyId") throw UnknownKeyIdError(message);
    if (code == "Unauthorized") throw UnauthorizedError(message);
    if (code == "AlreadyConsumed") throw AlreadyConsumedError(message);
    if (code == "Exhausted") throw ExhaustedError(message);
    if (code == "LengthError") throw LengthError(message);
    if (code == "FormatError") throw FormatError(message);
    throw IoError(message);
}

}  // namespace

struct KmeHttpServer::Impl {
    KmeStore& store;
    NodeId owner;
    httplib::Server server;
    std::thread worker;
    int bound_port = -1;

    Impl(KmeStore& store_in, const NodeId& owner_in)
        : store(store_in), owner(owner_in) {
        install_routes();
    }

    LinkId link_for(const std::string& peer_hex) const {
        return LinkId::between(owner, NodeId::from_hex(peer_hex));
    }

    void handle_enc(const std::string& peer_hex, std::size_t number,
                    std::size_t size_bits, bool size_given, httplib::Response& res) {
        LinkId link = link_for(peer_hex);
        if (!size_given) {
            size_bits = store.status(link, owner).key_size_bits;
        }
        std::vector<QkdPad> pads = store.get_enc_keys(link, owner, number, size_bits);
        res.set_content(keys_to_json(pads).dump(), "application/json");
    }

    void install_routes() {
        const std::string base = std::string("/api/v1/keys/") + kPeerPattern;

        server.Get(base + "/status",
                   [this](const httplib::Request& req, httplib::Response& res) {
            guard(res, [&] {
                LinkId link = link_for(req.matches[1]);
                KmeStatus st = store.status(link, owner);
                json body{
                    {"source_KME_ID", st.source.to_hex()},
                    {"target_KME_ID", st.target.to_hex()},
                    {"master_SAE_ID", st.source.to_hex()},
                    {"slave_SAE_ID", st.target.to_hex()},
                    {"key_size", st.key_size_bits},
                    {"stored_key_count", st.stored_key_count},
                    {"max_key_count", st.max_key_count},
                    {"max_key_per_request", st.max_keys_per_request},
                    {"max_key_size", st.max_key_size_bits},
                    {"min_key_size", st.min_key_size_bits},
                };
                res.set_content(body.dump(), "application/json");
            });
        });

        server.Get(base + "/enc_keys",
                   [this](const httplib::Request& req, httplib::Response& res) {
            guard(res, [&] {
                std::size_t number = 1;
                std::size_t size_bits = 0;
                bool size_given = false;
                if (req.has_param("number")) {
                    number = static_cast<std::size_t>(
                        std::stoull(req.get_param_value("number")));
                }
                if (req.has_param("size")) {
                    size_bits = static_cast<std::size_t>(
                        std::stoull(req.get_param_value("size")));
                    size_given = true;
                }
                handle_enc(req.matches[1], number, size_bits, size_given, res);
            });
        });

        server.Post(base + "/enc_keys",
                    [this](const httplib::Request& req, httplib::Response& res) {
            guard(res, [&] {
                json body = json::parse(req.body, nullptr, false);
                if (body.is_discarded()) {
                    throw FormatError("request body is not valid JSON");
                }
                std::size_t number = body.value("number", std::size_t{1});
                bool size_given = body.contains("size");
                std::size_t size_bits = body.value("size", std::size_t{0});
                handle_enc(req.matches[1], number, size_bits, size_given, res);
            });
        });

        server.Post(base + "/dec_keys",
                    [this](const httplib::Request& req, httplib::Response& res) {
            guard(res, [&] {
                json body = json::parse(req.body, nullptr, false);
                if (body.is_discarded() || !body.contains("key_IDs") ||
                    !body["key_IDs"].is_array()) {
                    throw FormatError("request body must carry a key_IDs array");
                }
                std::vector<Bytes> ids;
                for (const json& entry : body["key_IDs"]) {
                    if (!entry.contains("key_ID") || !entry["key_ID"].is_string()) {
                        throw FormatError("key_IDs entries must carry key_ID strings");
                    }
                    ids.push_back(parse_key_id(entry["key_ID"].get<std::string>()));
                }
                LinkId link = link_for(req.matches[1]);
                std::vector<QkdPad> pads = store.get_dec_keys(link, owner, ids);
                res.set_content(keys_to_json(pads).dump(), "application/json");
            });
        });
    }
};

KmeHttpServer::KmeHttpServer(KmeStore& store, const NodeId& owner)
    : impl_(std::make_unique<Impl>(store, owner)) {}

KmeHttpServer::~KmeHttpServer() {
    stop();
}

int KmeHttpServer::start(const std::string& host, int port) {
    if (port == 0) {
        impl_->bound_port = impl_->server.bind_to_any_port(host);
        if (impl_->bound_port < 0) {
            throw IoError("could not bind an ephemeral port on " + host);
        }
    } else {
        if (!impl_->server.bind_to_port(host, port)) {
            throw IoError("could not bind " + host + ":" + std::to_string(port));
        }
        impl_->bound_port = port;
    }
    impl_->worker = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return impl_->bound_port;
}

void KmeHttpServer::stop() {
    if (impl_->worker.joinable()) {
        impl_->server.stop();
        impl_->worker.join();
    }
}

int KmeHttpServer::port() const {
    return impl_->bound_port;
}

const NodeId& KmeHttpServer::owner() const {
    return impl_->owner;
}

struct HttpKmeClient::Impl {
    httplib::Client client;

    Impl(const std::string& host, int port) : client(host, port) {
        client.set_connection_timeout(5, 0);
        client.set_read_timeout(10, 0);
    }

    json request_json(const httplib::Result& result) {
        if (!result) {
            throw IoError("HTTP request failed: " +
                          httplib::to_string(result.error()));
        }
        json body = json::parse(result->body, nullptr, false);
        if (result->status != 200) {
            std::string message = "HTTP " + std::to_string(result->status);
            std::string code;
            if (!body.is_discarded() && body.contains("message")) {
                message = body["message"].get<std::string>();
            }
            if (!body.is_discarded() && body.contains("code")) {
                code = body["code"].get<std::string>();
            }
            throw_by_code(code, message);
        }
        if (body.is_discarded()) {
            throw FormatError("response body is not valid JSON");
        }
        return body;
    }

    std::vector<QkdPad> parse_keys(const json& body) {
        if (!body.contains("keys") || !body["keys"].is_array()) {
            throw FormatError("response body must carry a keys array");
        }
        std::vector<QkdPad> pads;
        for (const json& entry : body["keys"]) {
            QkdPad pad;
            pad.key_id = parse_key_id(entry.at("key_ID").get<std::string>());
            pad.pad = from_base64(entry.at("key").get<std::string>());
            pads.push_back(std::move(pad));
        }
        return pads;
    }
};

HttpKmeClient::HttpKmeClient(const std::string& host, int port)
    : impl_(std::make_unique<Impl>(host, port)) {}

HttpKmeClient::~HttpKmeClient() = default;

std::vector<QkdPad> HttpKmeClient::get_enc_keys(const NodeId& peer,
                                                std::size_t number,
                                                std::size_t size_bits) {
    std::string path = "/api/v1/keys/" + peer.to_hex() + "/enc_keys?number=" +
                       std::to_string(number) + "&size=" + std::to_string(size_bits);
    return impl_->parse_keys(impl_->request_json(impl_->client.Get(path)));
}

std::vector<QkdPad> HttpKmeClient::get_dec_keys(const NodeId& peer,
                                                const std::vector<Bytes>& key_ids) {
    json ids = json::array();
    for (const Bytes& id : key_ids) {
        ids.push_back({{"key_ID", format_key_id(id)}});
    }
    json body{{"key_IDs", std::move(ids)}};
    std::string path = "/api/v1/keys/" + peer.to_hex() + "/dec_keys";
    return impl_->parse_keys(impl_->request_json(
        impl_->client.Post(path, body.dump(), "application/json")));
}

KmeStatus HttpKmeClient::status(const NodeId& peer) {
    std::string path = "/api/v1/keys/" + peer.to_hex() + "/status";
    json body = impl_->request_json(impl_->client.Get(path));
    KmeStatus st;
    st.source = NodeId::from_hex(body.at("source_KME_ID").get<std::string>());
    st.target = NodeId::from_hex(body.at("target_KME_ID").get<std::string>());
    st.key_size_bits = body.at("key_size").get<std::size_t>();
    st.stored_key_count = body.at("stored_key_count").get<std::uint64_t>();
    st.max_key_count = body.at("max_key_count").get<std::uint64_t>();
    st.max_keys_per_request = body.at("max_key_per_request").get<std::size_t>();
    st.max_key_size_bits = body.at("max_key_size").get<std::size_t>();
    st.min_key_size_bits = body.at("min_key_size").get<std::size_t>();
    return st;
}

}  // namespace qkdrelay
