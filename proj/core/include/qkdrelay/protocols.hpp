#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include "qkdrelay/crypto.hpp"
#include "qkdrelay/onion.hpp"
#include "qkdrelay/simnet.hpp"

namespace qkdrelay {

/// The four key-distribution models.
enum class Model : std::uint8_t {
    kr = 1,       // hop-by-hop re-encryption; every relay handles the secret
    tn = 2,       // XOR aggregation at one designated trusted node
    orr = 3,      // layered onion over per-hop KEM-derived keys
    orr_ext = 4,  // onion with per-layer end-to-end authentication
};

std::string_view model_name(Model model);
Model model_from_name(std::string_view name);  // FormatError if unknown

/// One line circuit: the initiator plus `n` circuit nodes; the last circuit
/// node is the destination, the earlier ones relay.
struct Circuit {
    NodeId initiator;
    std::vector<NodeId> hops;

    std::size_t n() const { return hops.size(); }
    const NodeId& destination() const { return hops.back(); }

    /// Aggregation node for the trusted-node model: the middle circuit
    /// node, pulled back to the last relay when the middle would be the
    /// destination.  Needs at least two circuit nodes.
    std::size_t trusted_index() const;

    /// First topology node initiates; the rest are the circuit in order.
    static Circuit from_topology(const Topology& topology);
};

/// On-the-wire corruption of one protocol data unit.
struct TamperSpec {
    /// Which leg to corrupt: 0 is initiator -> hops[0], leg i>0 is
    /// hops[i-1] -> hops[i].
    std::size_t leg = 0;
    /// Byte to flip inside the link-protected unit that follows the 16-byte
    /// key id (for the onion models that unit is the encoded frame, header
    /// included); for the chain models the offset indexes the chain value
    /// itself.
    std::size_t frame_offset = 0;
    std::uint8_t xor_mask = 0x01;

    /// Spec targeting byte `offset` of the onion frame body on `leg`.
    static TamperSpec body_byte(std::size_t leg, std::size_t offset,
                                std::uint8_t mask = 0x01) {
        return {leg, frame_overhead_bytes() + offset, mask};
    }
};

struct RunConfig {
    Model model = Model::kr;
    /// Layer format used by orr_ext; must be one of the ext_* variants.
    OnionVariant ext_variant = OnionVariant::ext_hmac256;
    /// Circuit nodes (relays plus destination); the initiator is extra.
    std::size_t n_nodes = 3;
    std::uint64_t seed = 1;
    std::uint64_t hop_latency_ns = Network::kDefaultHopLatencyNs;
    std::uint64_t byte_latency_ns = Network::kDefaultByteLatencyNs;
    std::optional<TamperSpec> tamper;
    /// Optional override for how nodes reach their key store (e.g. REST).
    std::function<std::unique_ptr<KmeClient>(const NodeId&)> kme_client_factory;
};

enum class RunStatus : std::uint8_t {
    delivered = 1,         // destination recovered exactly the sent secret
    corrupt_delivery = 2,  // transfer finished but the destination got garbage
    protocol_error = 3,    // a node aborted the run (authentication, format..)
};

std::string_view run_status_name(RunStatus status);

struct RunTimings {
    /// Cryptographic construction cost of the model's ciphertext: the
    /// initiator's encryption, plus the trusted node's aggregation fold for
    /// the trusted-node model.  Measured on thread CPU clocks.
    std::uint64_t encryption_ns = 0;
    /// Virtual elapsed time from secret generation at the initiator to
    /// recovery at the destination.
    std::uint64_t distribution_ns = 0;
    /// Virtual elapsed time to establish the onion circuit (KEM pass plus
    /// acknowledgement); zero for the models without a setup phase.
    std::uint64_t setup_ns = 0;
};

struct RunOutcome {
    RunStatus status = RunStatus::protocol_error;
    Secret sent;
    std::optional<Secret> delivered;
    std::optional<CapturedError> error;
    RunTimings timings;
    std::uint64_t wire_bytes = 0;
    std::size_t message_count = 0;
    bool tampered = false;
};

/// Everything a finished run leaves behind, self-contained so audits and
/// reports never depend on live network state.
struct RunResult {
    Model model = Model::kr;
    OnionVariant variant = OnionVariant::orr;  // meaningful for onion models
    RunOutcome outcome;
    Circuit circuit;
    Topology topology;
    std::vector<WireRecord> wire;
    std::vector<PadRecord> pads;
    std::map<NodeId, std::vector<Observation>> observations;
    std::uint64_t hop_latency_ns = 0;
    std::uint64_t byte_latency_ns = 0;
};

/// Builds the line, runs the configured model once and collects the
/// evidence.  Deterministic content for a given config; timings are
/// measured, not replayed.
RunResult run_protocol(const RunConfig& config);

}  // namespace qkdrelay
