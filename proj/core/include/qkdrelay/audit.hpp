#pragma once

#include <string>
#include <vector>

#include "qkdrelay/protocols.hpp"

namespace qkdrelay {

/// What one node could recover from the plaintext material it handled.
struct NodeAudit {
    NodeId node;
    /// The run's 32-byte secret appeared in this node's decrypted data.
    bool observed_secret = false;
    /// Circuit identities recoverable from this node's decrypted data.
    std::vector<NodeId> seen_circuit_ids;
};

/// Per-run confidentiality evidence, derived from observation and pad
/// ledgers rather than from the protocols' own claims.
struct AuditReport {
    Model model = Model::kr;
    NodeAudit initiator;
    std::vector<NodeAudit> intermediates;  // relay circuit nodes, in order
    NodeAudit destination;
    std::size_t intermediates_with_secret = 0;

    // Trusted-node model only.
    std::size_t trusted_index = 0;
    /// The aggregation node's recorded inputs, combined with any single
    /// link pad, reconstruct the secret (checked for every link).
    bool trusted_reconstructs_with_any_pad = false;
};

AuditReport audit_run(const RunResult& result);

/// One human-readable line per property violation; empty means the run
/// matches its model's confidentiality contract.
struct AuditVerdict {
    bool ok = true;
    std::vector<std::string> violations;
};

AuditVerdict check_audit(const AuditReport& report, const RunResult& result);

}  // namespace qkdrelay
