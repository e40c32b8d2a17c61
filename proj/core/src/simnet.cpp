#include "qkdrelay/simnet.hpp"

#include <time.h>

#include <algorithm>
#include <condition_variable>
#include <deque>
#include <mutex>
#include <thread>
#include <utility>

namespace qkdrelay {

namespace {

/// Internal unwind signal: once one actor fails, every other actor is
/// released from its next blocking call with this and exits quietly.
struct AbortSignal {};

}  // namespace

/// Decorator excluding the key-management entity's compute from the calling
/// node's virtual clock: those cycles belong to a separate service, and an
/// HTTP-backed client would spend them in the server process anyway.
struct MeteredKme final : KmeClient {
    MeteredKme(KmeClient& inner, NodeContext& ctx)
        : inner_(inner), ctx_(ctx) {}

    std::vector<QkdPad> get_enc_keys(const NodeId& peer, std::size_t number,
                                     std::size_t size_bits) override {
        std::uint64_t before = thread_cpu_now_ns();
        auto result = inner_.get_enc_keys(peer, number, size_bits);
        ctx_.exclude_external_ns(thread_cpu_now_ns() - before);
        return result;
    }

    std::vector<QkdPad> get_dec_keys(
        const NodeId& peer, const std::vector<Bytes>& key_ids) override {
        std::uint64_t before = thread_cpu_now_ns();
        auto result = inner_.get_dec_keys(peer, key_ids);
        ctx_.exclude_external_ns(thread_cpu_now_ns() - before);
        return result;
    }

    KmeStatus status(const NodeId& peer) override {
        std::uint64_t before = thread_cpu_now_ns();
        KmeStatus result = inner_.status(peer);
        ctx_.exclude_external_ns(thread_cpu_now_ns() - before);
        return result;
    }

private:
    KmeClient& inner_;
    NodeContext& ctx_;
};

Topology Topology::line(std::size_t n_nodes, std::uint64_t seed) {
    if (n_nodes < 2) {
        throw ConfigError("line topology needs at least two nodes");
    }
    Topology topo;
    topo.seed = seed;
    RngContext rng(seed);
    topo.nodes.reserve(n_nodes);
    for (std::size_t i = 0; i < n_nodes; ++i) {
        topo.nodes.push_back(NodeId::random(rng));
    }
    topo.links.reserve(n_nodes - 1);
    for (std::size_t i = 0; i + 1 < n_nodes; ++i) {
        topo.links.push_back(LinkId::between(topo.nodes[i], topo.nodes[i + 1]));
    }
    return topo;
}

bool Topology::adjacent(const NodeId& x, const NodeId& y) const {
    LinkId candidate = LinkId::between(x, y);
    return std::find(links.begin(), links.end(), candidate) != links.end();
}

std::size_t Topology::index_of(const NodeId& node) const {
    auto it = std::find(nodes.begin(), nodes.end(), node);
    if (it == nodes.end()) {
        throw UnknownNodeError("node " + node.short_hex() +
                               " is not part of this topology");
    }
    return static_cast<std::size_t>(it - nodes.begin());
}

std::uint64_t thread_cpu_now_ns() {
    timespec ts{};
    clock_gettime(CLOCK_THREAD_CPUTIME_ID, &ts);
    return static_cast<std::uint64_t>(ts.tv_sec) * 1'000'000'000ull +
           static_cast<std::uint64_t>(ts.tv_nsec);
}

void CpuTimer::restart() { start_ns_ = thread_cpu_now_ns(); }

std::uint64_t CpuTimer::elapsed_ns() const {
    return thread_cpu_now_ns() - start_ns_;
}

struct Network::Impl {
    struct Slot {
        NodeId id;
        ActorBody body;
        std::deque<Message> mailbox;
        ObservationLog log;
        std::vector<VclockMark> marks;
        std::unique_ptr<KmeClient> kme;
        std::map<NodeId, std::uint64_t> next_seq_to;
    };

    Topology topo;
    KmeStore* store = nullptr;
    RngContext rng;
    Config config;

    std::mutex mu;
    std::condition_variable cv;
    std::vector<Slot> slots;
    std::vector<WireRecord> wire;
    std::vector<PadRecord> pads;
    std::optional<TamperRule> tamper;
    bool tamper_applied = false;
    std::optional<CapturedError> first_error;
    bool aborted = false;
    std::uint64_t total_payload = 0;
    std::size_t message_count = 0;
    bool started = false;
    std::chrono::steady_clock::time_point deadline{};

    Impl(const Topology& t, KmeStore& s, RngContext r, Config c)
        : topo(t), store(&s), rng(std::move(r)), config(std::move(c)) {
        slots.resize(topo.nodes.size());
        for (std::size_t i = 0; i < topo.nodes.size(); ++i) {
            slots[i].id = topo.nodes[i];
        }
        for (const LinkId& link : topo.links) {
            if (!store->has_link(link)) {
                store->add_link(link);
            }
        }
    }

    Slot& slot_of(const NodeId& node) { return slots[topo.index_of(node)]; }

    void fail(const NodeId& node, Errc code, std::string message) {
        std::lock_guard<std::mutex> lock(mu);
        if (!first_error) {
            first_error = CapturedError{node, code, std::move(message)};
        }
        aborted = true;
        cv.notify_all();
    }

    void post(const NodeId& from, const NodeId& to, MsgKind kind,
              Bytes payload, std::uint64_t sent_vtime) {
        std::unique_lock<std::mutex> lock(mu);
        if (aborted) {
            throw AbortSignal{};
        }
        if (!topo.adjacent(from, to)) {
            throw NoChannelError("no channel between " + from.short_hex() +
                                 " and " + to.short_hex());
        }
        if (tamper && !tamper_applied && tamper->from == from &&
            tamper->to == to && tamper->kind == kind) {
            if (tamper->payload_offset >= payload.size()) {
                throw ConfigError("tamper offset beyond payload size");
            }
            payload[tamper->payload_offset] ^= tamper->xor_mask;
            tamper_applied = true;
        }
        Slot& sender = slot_of(from);
        std::uint64_t seq = sender.next_seq_to[to]++;
        wire.push_back({from, to, kind,
                        static_cast<std::uint32_t>(payload.size()), seq});
        total_payload += payload.size();
        ++message_count;
        Slot& receiver = slot_of(to);
        receiver.mailbox.push_back(
            {kind, from, to, std::move(payload), sent_vtime, seq});
        cv.notify_all();
    }

    Message take(const NodeId& self) {
        std::unique_lock<std::mutex> lock(mu);
        Slot& slot = slot_of(self);
        while (slot.mailbox.empty()) {
            if (aborted) {
                throw AbortSignal{};
            }
            if (cv.wait_until(lock, deadline) == std::cv_status::timeout &&
                slot.mailbox.empty() && !aborted) {
                throw RunTimeoutError("node " + self.short_hex() +
                                      " still waiting at the run deadline");
            }
        }
        Message msg = std::move(slot.mailbox.front());
        slot.mailbox.pop_front();
        return msg;
    }
};

NodeContext::NodeContext(Network& net, const NodeId& self, RngContext rng)
    : net_(net), self_(self), rng_(std::move(rng)) {
    last_cpu_ns_ = thread_cpu_now_ns();
}

void NodeContext::accrue_work() {
    std::uint64_t now = thread_cpu_now_ns();
    vclock_ns_ += now - last_cpu_ns_;
    last_cpu_ns_ = now;
}

void NodeContext::send(const NodeId& to, MsgKind kind, Bytes payload) {
    accrue_work();
    net_.impl_->post(self_, to, kind, std::move(payload), vclock_ns_);
}

Message NodeContext::recv() {
    accrue_work();
    Message msg = net_.impl_->take(self_);
    const Network::Config& cfg = net_.impl_->config;
    std::uint64_t arrival = msg.sent_vtime_ns + cfg.hop_latency_ns +
                            cfg.byte_latency_ns * msg.payload.size();
    vclock_ns_ = std::max(vclock_ns_, arrival);
    // Time spent blocked is not compute; restart the work baseline.
    last_cpu_ns_ = thread_cpu_now_ns();
    return msg;
}

KmeClient& NodeContext::kme() {
    if (!metered_) {
        metered_ = std::make_unique<MeteredKme>(
            *net_.impl_->slot_of(self_).kme, *this);
    }
    return *metered_;
}

void NodeContext::observe(std::string phase, BytesView data) {
    accrue_work();
    std::lock_guard<std::mutex> lock(net_.impl_->mu);
    net_.impl_->slot_of(self_).log.append(std::move(phase), data);
}

void NodeContext::record_pad(PadRecord record) {
    accrue_work();
    std::lock_guard<std::mutex> lock(net_.impl_->mu);
    net_.impl_->pads.push_back(std::move(record));
}

void NodeContext::mark(std::string label) {
    accrue_work();
    std::lock_guard<std::mutex> lock(net_.impl_->mu);
    net_.impl_->slot_of(self_).marks.push_back({std::move(label), vclock_ns_});
}

Network::Network(const Topology& topology, KmeStore& kme, RngContext rng)
    : Network(topology, kme, std::move(rng), Config{}) {}

Network::Network(const Topology& topology, KmeStore& kme, RngContext rng,
                 Config config)
    : impl_(std::make_unique<Impl>(topology, kme, std::move(rng),
                                   std::move(config))) {}

Network::~Network() = default;

void Network::set_tamper(const TamperRule& rule) {
    if (impl_->started) {
        throw ConfigError("cannot change tamper rule after run started");
    }
    impl_->tamper = rule;
}

void Network::add_actor(const NodeId& node, ActorBody body) {
    if (impl_->started) {
        throw ConfigError("cannot add actors after run started");
    }
    Impl::Slot& slot = impl_->slot_of(node);
    if (slot.body) {
        throw ConfigError("node " + node.short_hex() + " already has an actor");
    }
    slot.body = std::move(body);
}

RunStats Network::run() {
    Impl& im = *impl_;
    if (im.started) {
        throw ConfigError("a network runs exactly once");
    }
    im.started = true;
    im.deadline = std::chrono::steady_clock::now() + im.config.run_timeout;

    // Per-node client and random stream, derived in topology order so a
    // run is a pure function of seeds.
    for (Impl::Slot& slot : im.slots) {
        if (im.config.kme_client_factory) {
            slot.kme = im.config.kme_client_factory(slot.id);
        } else {
            slot.kme = std::make_unique<DirectKmeClient>(*im.store, slot.id);
        }
    }

    std::vector<std::thread> threads;
    threads.reserve(im.slots.size());
    for (Impl::Slot& slot : im.slots) {
        if (!slot.body) {
            continue;
        }
        RngContext node_rng = im.rng.fork();
        threads.emplace_back(
            [this, &im, &slot](RngContext rng) {
                NodeContext ctx(*this, slot.id, std::move(rng));
                try {
                    slot.body(ctx);
                } catch (const AbortSignal&) {
                } catch (const Error& e) {
                    im.fail(slot.id, e.code(), e.what());
                } catch (const std::exception& e) {
                    im.fail(slot.id, Errc::io, e.what());
                }
            },
            std::move(node_rng));
    }
    for (std::thread& t : threads) {
        t.join();
    }

    return {im.first_error, im.total_payload, im.message_count,
            im.tamper_applied};
}

const Topology& Network::topology() const { return impl_->topo; }

const std::vector<WireRecord>& Network::wire_ledger() const {
    return impl_->wire;
}

const std::vector<PadRecord>& Network::pad_ledger() const {
    return impl_->pads;
}

const ObservationLog& Network::log_of(const NodeId& node) const {
    return impl_->slot_of(node).log;
}

const std::vector<VclockMark>& Network::marks_of(const NodeId& node) const {
    return impl_->slot_of(node).marks;
}

std::uint64_t Network::hop_latency_ns() const {
    return impl_->config.hop_latency_ns;
}

std::uint64_t Network::byte_latency_ns() const {
    return impl_->config.byte_latency_ns;
}

}  // namespace qkdrelay
