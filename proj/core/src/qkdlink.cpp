#include "qkdrelay/qkdlink.hpp"

#include <array>
#include <cstring>
#include <set>

#include "qkdrelay/crypto.hpp"
#include "qkdrelay/errors.hpp"

extern "C" {
#include <fips202.h>
}

namespace qkdrelay {

namespace {

constexpr std::size_t kKeyIdBytes = 16;
constexpr std::uint64_t kInfinitePoolReported = 1u << 20;
constexpr std::uint8_t kIssuerIsBFlag = 0x01;

Bytes shake256_expand(std::string_view domain, BytesView part1, BytesView part2,
                      std::size_t out_len) {
    shake256incctx state;
    shake256_inc_init(&state);
    shake256_inc_absorb(&state, reinterpret_cast<const std::uint8_t*>(domain.data()),
                        domain.size());
    shake256_inc_absorb(&state, part1.data(), part1.size());
    shake256_inc_absorb(&state, part2.data(), part2.size());
    shake256_inc_finalize(&state);
    Bytes out(out_len);
    shake256_inc_squeeze(out.data(), out.size(), &state);
    shake256_inc_ctx_release(&state);
    return out;
}

}  // namespace

std::string QkdPad::key_id_str() const {
    return format_key_id(key_id);
}

std::string format_key_id(BytesView key_id) {
    if (key_id.size() != kKeyIdBytes) {
        throw FormatError("key id must be 16 bytes");
    }
    std::string hex = to_hex(key_id);
    return hex.substr(0, 8) + "-" + hex.substr(8, 4) + "-" + hex.substr(12, 4) + "-" +
           hex.substr(16, 4) + "-" + hex.substr(20, 12);
}

Bytes parse_key_id(std::string_view text) {
    if (text.size() != 36 || text[8] != '-' || text[13] != '-' || text[18] != '-' ||
        text[23] != '-') {
        throw FormatError("key id must use 8-4-4-4-12 formatting");
    }
    std::string hex;
    hex.reserve(32);
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (i == 8 || i == 13 || i == 18 || i == 23) continue;
        hex.push_back(text[i]);
    }
    return from_hex(hex);
}

struct KmeStore::LinkState {
    LinkId link;
    LinkOptions options;
    SymKey link_secret;
    std::array<std::uint32_t, 2> issue_counters{};  // per issuing end (a, b)
    std::uint64_t keys_issued = 0;
    std::set<Bytes> consumed;
};

KmeStore::KmeStore(std::uint64_t seed) : seed_(seed) {}

KmeStore::~KmeStore() = default;

void KmeStore::add_link(const LinkId& link, const LinkOptions& options) {
    std::lock_guard lock(mutex_);
    auto state = std::make_unique<LinkState>();
    state->link = link;
    state->options = options;
    std::uint8_t seed_le[8];
    for (int i = 0; i < 8; ++i) {
        seed_le[i] = static_cast<std::uint8_t>(seed_ >> (8 * i));
    }
    Bytes endpoint_ids = concat({link.a.view(), link.b.view()});
    state->link_secret = SymKey::from(shake256_expand(
        "qkdrelay.kme.link.v1", BytesView(seed_le, sizeof(seed_le)), endpoint_ids,
        kSymKeyBytes));
    links_[link] = std::move(state);
}

bool KmeStore::has_link(const LinkId& link) const {
    std::lock_guard lock(mutex_);
    return links_.contains(link);
}

const KmeStore::LinkState& KmeStore::link_state(const LinkId& link) const {
    auto it = links_.find(link);
    if (it == links_.end()) {
        throw UnknownLinkError("no QKD link " + link.to_string());
    }
    return *it->second;
}

KmeStore::LinkState& KmeStore::link_state(const LinkId& link) {
    return const_cast<LinkState&>(
        static_cast<const KmeStore*>(this)->link_state(link));
}

std::vector<QkdPad> KmeStore::get_enc_keys(const LinkId& link, const NodeId& caller,
                                           std::size_t number,
                                           std::size_t size_bits) {
    std::lock_guard lock(mutex_);
    LinkState& state = link_state(link);
    if (!link.has_endpoint(caller)) {
        throw UnauthorizedError("caller " + caller.short_hex() +
                                " is not an endpoint of " + link.to_string());
    }
    const LinkOptions& opts = state.options;
    if (number == 0 || number > opts.max_keys_per_request) {
        throw LengthError("requested key count " + std::to_string(number) +
                          " outside [1, " + std::to_string(opts.max_keys_per_request) +
                          "]");
    }
    if (size_bits == 0 || size_bits % 8 != 0 || size_bits < opts.min_key_size_bits ||
        size_bits > opts.max_key_size_bits) {
        throw LengthError("key size " + std::to_string(size_bits) +
                          " bits is not a supported multiple of 8");
    }
    if (opts.finite_pool_keys &&
        state.keys_issued + number > *opts.finite_pool_keys) {
        throw ExhaustedError("link " + link.to_string() + " has " +
                             std::to_string(*opts.finite_pool_keys - state.keys_issued) +
                             " keys left, requested " + std::to_string(number));
    }

    const bool issuer_is_b = (caller == link.b);
    const std::size_t size_bytes = size_bits / 8;
    std::vector<QkdPad> out;
    out.reserve(number);
    for (std::size_t k = 0; k < number; ++k) {
        std::uint32_t counter = state.issue_counters[issuer_is_b ? 1 : 0]++;
        Bytes id;
        id.reserve(kKeyIdBytes);
        put_u32_be(id, counter);
        id.push_back(static_cast<std::uint8_t>((size_bytes >> 16) & 0xff));
        id.push_back(static_cast<std::uint8_t>((size_bytes >> 8) & 0xff));
        id.push_back(static_cast<std::uint8_t>(size_bytes & 0xff));
        id.push_back(issuer_is_b ? kIssuerIsBFlag : 0x00);
        MacTag tag = mac_tag(state.link_secret, id);
        id.insert(id.end(), tag.begin(), tag.begin() + 8);

        QkdPad pad;
        pad.pad = shake256_expand("qkdrelay.kme.pad.v1", state.link_secret.view(), id,
                                  size_bytes);
        pad.key_id = std::move(id);
        out.push_back(std::move(pad));
    }
    state.keys_issued += number;
    return out;
}

std::vector<QkdPad> KmeStore::get_dec_keys(const LinkId& link, const NodeId& caller,
                                           const std::vector<Bytes>& key_ids) {
    std::lock_guard lock(mutex_);
    LinkState& state = link_state(link);
    if (!link.has_endpoint(caller)) {
        throw UnauthorizedError("caller " + caller.short_hex() +
                                " is not an endpoint of " + link.to_string());
    }
    std::vector<QkdPad> out;
    out.reserve(key_ids.size());
    for (const Bytes& id : key_ids) {
        if (id.size() != kKeyIdBytes) {
            throw UnknownKeyIdError("key id has wrong length");
        }
        MacTag tag = mac_tag(state.link_secret, BytesView(id.data(), 8));
        if (!std::equal(tag.begin(), tag.begin() + 8, id.begin() + 8)) {
            throw UnknownKeyIdError("key id " + format_key_id(id) +
                                    " was not issued on " + link.to_string());
        }
        const bool issuer_is_b = (id[7] & kIssuerIsBFlag) != 0;
        const NodeId issuer = issuer_is_b ? link.b : link.a;
        if (caller == issuer) {
            throw UnauthorizedError("issuing end cannot resolve its own key id");
        }
        if (state.consumed.contains(id)) {
            throw AlreadyConsumedError("key id " + format_key_id(id) +
                                       " was already resolved");
        }
        const std::size_t size_bytes =
            (static_cast<std::size_t>(id[4]) << 16) |
            (static_cast<std::size_t>(id[5]) << 8) | id[6];
        QkdPad pad;
        pad.key_id = id;
        pad.pad = shake256_expand("qkdrelay.kme.pad.v1", state.link_secret.view(), id,
                                  size_bytes);
        state.consumed.insert(id);
        out.push_back(std::move(pad));
    }
    if (out.size() != key_ids.size()) {
        throw KeyCountMismatchError("resolved " + std::to_string(out.size()) +
                                    " of " + std::to_string(key_ids.size()) +
                                    " key ids");
    }
    return out;
}

KmeStatus KmeStore::status(const LinkId& link, const NodeId& caller) const {
    std::lock_guard lock(mutex_);
    const LinkState& state = link_state(link);
    if (!link.has_endpoint(caller)) {
        throw UnauthorizedError("caller " + caller.short_hex() +
                                " is not an endpoint of " + link.to_string());
    }
    const LinkOptions& opts = state.options;
    KmeStatus status;
    status.source = caller;
    status.target = link.peer_of(caller);
    status.key_size_bits = opts.default_key_size_bits;
    if (opts.finite_pool_keys) {
        status.max_key_count = *opts.finite_pool_keys;
        status.stored_key_count = *opts.finite_pool_keys - state.keys_issued;
    } else {
        status.max_key_count = kInfinitePoolReported;
        status.stored_key_count = kInfinitePoolReported;
    }
    status.max_keys_per_request = opts.max_keys_per_request;
    status.max_key_size_bits = opts.max_key_size_bits;
    status.min_key_size_bits = opts.min_key_size_bits;
    return status;
}

std::vector<QkdPad> DirectKmeClient::get_enc_keys(const NodeId& peer,
                                                  std::size_t number,
                                                  std::size_t size_bits) {
    return store_->get_enc_keys(LinkId::between(owner_, peer), owner_, number,
                                size_bits);
}

std::vector<QkdPad> DirectKmeClient::get_dec_keys(const NodeId& peer,
                                                  const std::vector<Bytes>& key_ids) {
    return store_->get_dec_keys(LinkId::between(owner_, peer), owner_, key_ids);
}

KmeStatus DirectKmeClient::status(const NodeId& peer) {
    return store_->status(LinkId::between(owner_, peer), owner_);
}

QkdPad draw_link_pad(KmeStore& store, const LinkId& link, const NodeId& issuer,
                     std::size_t pad_bytes) {
    std::vector<QkdPad> issued = store.get_enc_keys(link, issuer, 1, pad_bytes * 8);
    std::vector<QkdPad> resolved =
        store.get_dec_keys(link, link.peer_of(issuer), {issued[0].key_id});
    if (resolved[0].pad != issued[0].pad) {
        throw KeyCountMismatchError("pad mismatch between link endpoints");
    }
    return issued[0];
}

}  // namespace qkdrelay
