#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "qkdrelay/errors.hpp"
#include "qkdrelay/qkdlink.hpp"
#include "qkdrelay/rng.hpp"
#include "qkdrelay/types.hpp"

namespace qkdrelay {

struct Topology {
    std::vector<NodeId> nodes;  // line order
    std::vector<LinkId> links;  // one QKD link per adjacent pair
    std::uint64_t seed = 0;

    /// Deterministic line of n_nodes nodes: ids are derived from the seed,
    /// consecutive nodes share a link.
    static Topology line(std::size_t n_nodes, std::uint64_t seed);

    bool adjacent(const NodeId& x, const NodeId& y) const;
    std::size_t index_of(const NodeId& node) const;  // UnknownNode if absent
};

enum class MsgKind : std::uint8_t {
    circuit_setup = 1,  // onion-circuit establishment bundle
    onion_frame = 2,    // link-protected onion frame
    relay_secret = 3,   // hop-by-hop re-encrypted secret
    chain_c0 = 4,       // aggregation chain: initiator ciphertext
    chain_x = 5,        // aggregation chain: relay XOR contribution
    chain_cstar = 6,    // aggregation chain: re-encrypted ciphertext
};

struct Message {
    MsgKind kind{};
    NodeId from;
    NodeId to;
    Bytes payload;
    std::uint64_t sent_vtime_ns = 0;
    std::uint64_t channel_seq = 0;
};

struct WireRecord {
    NodeId from;
    NodeId to;
    MsgKind kind{};
    std::uint32_t payload_bytes = 0;
    std::uint64_t channel_seq = 0;
};

struct Observation {
    std::string phase;
    Bytes data;
};

/// Everything one node got to see in plaintext during a run, in order.
class ObservationLog {
public:
    void append(std::string phase, BytesView data) {
        entries_.push_back({std::move(phase), Bytes(data.begin(), data.end())});
    }
    const std::vector<Observation>& entries() const { return entries_; }

private:
    std::vector<Observation> entries_;
};

struct PadRecord {
    NodeId holder;      // node that held this pad in the clear
    LinkId link;
    Bytes key_id;
    Bytes pad;
    std::string purpose;
};

struct VclockMark {
    std::string label;
    std::uint64_t vtime_ns = 0;
};

/// Flips one payload byte of the first matching message, emulating
/// on-the-wire corruption between two adjacent nodes.
struct TamperRule {
    NodeId from;
    NodeId to;
    MsgKind kind{};
    std::size_t payload_offset = 0;
    std::uint8_t xor_mask = 0x01;
};

struct CapturedError {
    NodeId node;
    Errc code{};
    std::string message;
};

struct RunStats {
    std::optional<CapturedError> first_error;
    std::uint64_t total_payload_bytes = 0;
    std::size_t message_count = 0;
    bool tamper_applied = false;
};

/// Monotonic per-thread compute stopwatch (thread CPU time), immune to
/// preemption by other processes.
class CpuTimer {
public:
    CpuTimer() { restart(); }
    void restart();
    std::uint64_t elapsed_ns() const;

private:
    std::uint64_t start_ns_ = 0;
};

std::uint64_t thread_cpu_now_ns();

class Network;
struct MeteredKme;

/// Handed to each actor body; every interaction with the world goes through
/// it.  Virtual time accounting is automatic: compute time between calls is
/// measured on the thread CPU clock and added to the node's virtual clock,
/// and message delivery adds the configured hop latency.  Key-management
/// calls model a separate entity (in deployment, a KME reached over REST),
/// so the CPU they consume never enters the node's clock.
class NodeContext {
public:
    const NodeId& self() const { return self_; }

    void send(const NodeId& to, MsgKind kind, Bytes payload);
    Message recv();

    KmeClient& kme();
    RngContext& rng() { return rng_; }

    void observe(std::string phase, BytesView data);
    void record_pad(PadRecord record);
    void mark(std::string label);

    std::uint64_t vclock_ns() const { return vclock_ns_; }

private:
    friend class Network;
    friend struct MeteredKme;
    NodeContext(Network& net, const NodeId& self, RngContext rng);

    void accrue_work();
    void exclude_external_ns(std::uint64_t ns) { last_cpu_ns_ += ns; }

    Network& net_;
    NodeId self_;
    RngContext rng_;
    std::uint64_t vclock_ns_ = 0;
    std::uint64_t last_cpu_ns_ = 0;
    std::unique_ptr<KmeClient> metered_;
};

using ActorBody = std::function<void(NodeContext&)>;

/// Line network executing one protocol run: one thread per node, FIFO
/// mailboxes between adjacent nodes, a shared key-management store, and a
/// virtual clock per node.
///
/// Reported times combine measured per-node compute with the modeled
/// per-message hop latency; wall-clock scheduling effects never enter them.
class Network {
public:
    /// Context-switch-scale hop cost: the reference deployment runs every
    /// node as a thread on one host, so a hop costs an IPC round trip (two
    /// wakeups plus queueing), not a WAN round trip.
    static constexpr std::uint64_t kDefaultHopLatencyNs = 8'000;
    /// ~80 MB/s effective classical-channel throughput.
    static constexpr std::uint64_t kDefaultByteLatencyNs = 12;

    struct Config {
        /// Fixed cost charged to the receiver's virtual clock per delivered
        /// message (propagation plus per-message channel overhead).
        std::uint64_t hop_latency_ns = kDefaultHopLatencyNs;
        /// Serialization cost per payload byte on a classical channel;
        /// multiplied by the payload size and added on delivery.
        std::uint64_t byte_latency_ns = kDefaultByteLatencyNs;
        std::chrono::nanoseconds run_timeout = std::chrono::seconds(20);
        /// Override how per-node key-management clients are built (e.g. to
        /// reach a KME over its REST interface); defaults to in-process
        /// calls into the shared store.
        std::function<std::unique_ptr<KmeClient>(const NodeId&)>
            kme_client_factory;
    };

    Network(const Topology& topology, KmeStore& kme, RngContext rng);
    Network(const Topology& topology, KmeStore& kme, RngContext rng,
            Config config);
    ~Network();

    Network(const Network&) = delete;
    Network& operator=(const Network&) = delete;

    void set_tamper(const TamperRule& rule);
    void add_actor(const NodeId& node, ActorBody body);

    /// Runs every actor to completion and returns what happened.  The first
    /// error thrown by an actor ends the run; remaining actors are released.
    RunStats run();

    const Topology& topology() const;
    const std::vector<WireRecord>& wire_ledger() const;
    const std::vector<PadRecord>& pad_ledger() const;
    const ObservationLog& log_of(const NodeId& node) const;
    const std::vector<VclockMark>& marks_of(const NodeId& node) const;
    std::uint64_t hop_latency_ns() const;
    std::uint64_t byte_latency_ns() const;

private:
    friend class NodeContext;
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace qkdrelay
