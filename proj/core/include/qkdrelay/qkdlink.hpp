#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "qkdrelay/bytes.hpp"
#include "qkdrelay/types.hpp"

namespace qkdrelay {

/// One key served by a key-management entity: an opaque 16-byte identifier
/// plus the key material itself.
struct QkdPad {
    Bytes key_id;  // 16 bytes
    Bytes pad;

    std::string key_id_str() const;  // canonical UUID-style formatting
};

std::string format_key_id(BytesView key_id);
Bytes parse_key_id(std::string_view text);  // FormatError on malformed input

struct KmeStatus {
    NodeId source;  // the end this status was requested from
    NodeId target;  // the peer across the link
    std::size_t key_size_bits = 0;
    std::uint64_t stored_key_count = 0;
    std::uint64_t max_key_count = 0;
    std::size_t max_keys_per_request = 0;
    std::size_t max_key_size_bits = 0;
    std::size_t min_key_size_bits = 0;
};

struct LinkOptions {
    std::size_t default_key_size_bits = 256;
    std::size_t max_keys_per_request = 128;
    std::size_t max_key_size_bits = 1 << 20;
    std::size_t min_key_size_bits = 8;
    /// If set, the link serves at most this many keys before Exhausted.
    std::optional<std::uint64_t> finite_pool_keys;
};

/// Deterministic simulated key-management entity.
///
/// Key material is derived from (seed, link, key id) alone, so two stores
/// constructed with the same seed serve bit-identical pads for the same key
/// identifiers.  Identifiers are self-authenticating: they embed an issue
/// counter, the key size, the issuing end, and a truncated MAC under the
/// per-link secret, which lets an independent instance validate identifiers
/// it never issued.
class KmeStore {
public:
    explicit KmeStore(std::uint64_t seed);
    ~KmeStore();

    KmeStore(const KmeStore&) = delete;
    KmeStore& operator=(const KmeStore&) = delete;

    void add_link(const LinkId& link, const LinkOptions& options = {});
    bool has_link(const LinkId& link) const;

    /// Issues `number` fresh keys of `size_bits` to `caller` (one end of the
    /// link).  The peer retrieves them later through get_dec_keys.
    std::vector<QkdPad> get_enc_keys(const LinkId& link, const NodeId& caller,
                                     std::size_t number, std::size_t size_bits);

    /// Resolves previously issued identifiers for the non-issuing end.
    /// Each identifier may be resolved once; replays raise AlreadyConsumed.
    std::vector<QkdPad> get_dec_keys(const LinkId& link, const NodeId& caller,
                                     const std::vector<Bytes>& key_ids);

    KmeStatus status(const LinkId& link, const NodeId& caller) const;

    std::uint64_t seed() const { return seed_; }

private:
    struct LinkState;

    const LinkState& link_state(const LinkId& link) const;
    LinkState& link_state(const LinkId& link);

    std::uint64_t seed_;
    mutable std::mutex mutex_;
    std::map<LinkId, std::unique_ptr<LinkState>> links_;
};

/// Client interface used by protocol code; bound to one node, addressing
/// links by the peer across them.
class KmeClient {
public:
    virtual ~KmeClient() = default;

    virtual std::vector<QkdPad> get_enc_keys(const NodeId& peer, std::size_t number,
                                             std::size_t size_bits) = 0;
    virtual std::vector<QkdPad> get_dec_keys(const NodeId& peer,
                                             const std::vector<Bytes>& key_ids) = 0;
    virtual KmeStatus status(const NodeId& peer) = 0;
};

/// In-process client calling straight into a KmeStore.
class DirectKmeClient : public KmeClient {
public:
    DirectKmeClient(KmeStore& store, const NodeId& owner)
        : store_(&store), owner_(owner) {}

    std::vector<QkdPad> get_enc_keys(const NodeId& peer, std::size_t number,
                                     std::size_t size_bits) override;
    std::vector<QkdPad> get_dec_keys(const NodeId& peer,
                                     const std::vector<Bytes>& key_ids) override;
    KmeStatus status(const NodeId& peer) override;

private:
    KmeStore* store_;
    NodeId owner_;
};

/// Issues one key of `pad_bytes` bytes to `issuer` and immediately resolves
/// it from the peer end, returning the shared pad.  Test/utility helper.
QkdPad draw_link_pad(KmeStore& store, const LinkId& link, const NodeId& issuer,
                     std::size_t pad_bytes);

}  // namespace qkdrelay
