#pragma once

#include <memory>
#include <string>

#include "qkdrelay/qkdlink.hpp"
#include "qkdrelay/types.hpp"

namespace qkdrelay {

/// Serves one node's key-management entity over REST.
///
/// Routes (peer ids are 32 hex digits):
///   GET  /api/v1/keys/{peer_id}/status
///   GET  /api/v1/keys/{peer_id}/enc_keys?number=N&size=BITS
///   POST /api/v1/keys/{peer_id}/enc_keys   {"number": N, "size": BITS}
///   POST /api/v1/keys/{peer_id}/dec_keys   {"key_IDs": [{"key_ID": "..."}]}
///
/// Key containers are returned as {"keys": [{"key_ID": "...", "key": "<b64>"}]}.
class KmeHttpServer {
public:
    KmeHttpServer(KmeStore& store, const NodeId& owner);
    ~KmeHttpServer();

    KmeHttpServer(const KmeHttpServer&) = delete;
    KmeHttpServer& operator=(const KmeHttpServer&) = delete;

    /// Binds and starts serving in a background thread; returns the bound
    /// port.  Pass port 0 for an ephemeral port.  Throws IoError on failure.
    int start(const std::string& host = "127.0.0.1", int port = 0);
    void stop();
    int port() const;
    const NodeId& owner() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// KmeClient speaking the REST interface of a KmeHttpServer.
class HttpKmeClient : public KmeClient {
public:
    HttpKmeClient(const std::string& host, int port);
    ~HttpKmeClient() override;

    std::vector<QkdPad> get_enc_keys(const NodeId& peer, std::size_t number,
                                     std::size_t size_bits) override;
    std::vector<QkdPad> get_dec_keys(const NodeId& peer,
                                     const std::vector<Bytes>& key_ids) override;
    KmeStatus status(const NodeId& peer) override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace qkdrelay
