#include "qkdrelay/audit.hpp"

#include <algorithm>

namespace qkdrelay {

namespace {

bool contains_bytes(BytesView haystack, BytesView needle) {
    if (needle.empty() || haystack.size() < needle.size()) {
        return false;
    }
    return std::search(haystack.begin(), haystack.end(), needle.begin(),
                       needle.end()) != haystack.end();
}

NodeAudit audit_node(const RunResult& result, const NodeId& node) {
    NodeAudit audit;
    audit.node = node;
    auto it = result.observations.find(node);
    if (it == result.observations.end()) {
        return audit;
    }
    std::vector<NodeId> identities;
    identities.push_back(result.circuit.initiator);
    identities.insert(identities.end(), result.circuit.hops.begin(),
                      result.circuit.hops.end());
    for (const Observation& obs : it->second) {
        if (contains_bytes(obs.data, result.outcome.sent.view())) {
            audit.observed_secret = true;
        }
        for (const NodeId& id : identities) {
            if (contains_bytes(obs.data, id.view())) {
                if (std::find(audit.seen_circuit_ids.begin(),
                              audit.seen_circuit_ids.end(),
                              id) == audit.seen_circuit_ids.end()) {
                    audit.seen_circuit_ids.push_back(id);
                }
            }
        }
    }
    return audit;
}

/// Replays the aggregation node's recorded inputs against every link pad:
/// each one on its own must complete the fold back to the secret.
bool trusted_collusion_recovers(const RunResult& result) {
    const Circuit& cir = result.circuit;
    const NodeId trusted = cir.hops[cir.trusted_index()];
    auto it = result.observations.find(trusted);
    if (it == result.observations.end()) {
        return false;
    }
    Bytes c0;
    std::map<std::size_t, Bytes> xs;
    for (const Observation& obs : it->second) {
        if (obs.phase == "chain_c0" && obs.data.size() == 32) {
            c0 = obs.data;
        } else if (obs.phase == "chain_x" && obs.data.size() == 33) {
            xs[obs.data[0]] = Bytes(obs.data.begin() + 1, obs.data.end());
        }
    }
    if (c0.empty() || xs.size() != cir.n() - 1) {
        return false;
    }

    BytesView secret = result.outcome.sent.view();
    Bytes fold = c0;
    for (std::size_t j = 0; j < cir.n(); ++j) {
        // fold == secret xor pad_j at this point; any pad_j completes it.
        LinkId link = LinkId::between(result.topology.nodes[j],
                                      result.topology.nodes[j + 1]);
        const PadRecord* pad = nullptr;
        for (const PadRecord& rec : result.pads) {
            if (rec.link == link && rec.purpose == "chain" &&
                rec.pad.size() == 32) {
                pad = &rec;
                break;
            }
        }
        if (pad == nullptr) {
            return false;
        }
        Bytes recovered = otp_xor(fold, pad->pad);
        if (!std::equal(recovered.begin(), recovered.end(), secret.begin(),
                        secret.end())) {
            return false;
        }
        if (j < xs.size()) {
            otp_xor_inplace(fold, xs.at(j));
        }
    }
    return true;
}

}  // namespace

AuditReport audit_run(const RunResult& result) {
    AuditReport report;
    report.model = result.model;
    report.initiator = audit_node(result, result.circuit.initiator);
    for (std::size_t i = 0; i + 1 < result.circuit.n(); ++i) {
        report.intermediates.push_back(
            audit_node(result, result.circuit.hops[i]));
        if (report.intermediates.back().observed_secret) {
            ++report.intermediates_with_secret;
        }
    }
    report.destination = audit_node(result, result.circuit.destination());
    if (result.model == Model::tn) {
        report.trusted_index = result.circuit.trusted_index();
        report.trusted_reconstructs_with_any_pad =
            trusted_collusion_recovers(result);
    }
    return report;
}

AuditVerdict check_audit(const AuditReport& report, const RunResult& result) {
    AuditVerdict verdict;
    auto violate = [&](std::string text) {
        verdict.ok = false;
        verdict.violations.push_back(std::move(text));
    };

    if (!report.destination.observed_secret) {
        violate("destination never recovered the secret");
    }
    switch (report.model) {
        case Model::kr:
            for (const NodeAudit& node : report.intermediates) {
                if (!node.observed_secret) {
                    violate("intermediate " + node.node.short_hex() +
                            " unexpectedly never saw the plain secret");
                }
            }
            break;
        case Model::tn:
            for (const NodeAudit& node : report.intermediates) {
                if (node.observed_secret) {
                    violate("relay " + node.node.short_hex() +
                            " observed the plain secret");
                }
            }
            if (!report.trusted_reconstructs_with_any_pad) {
                violate(
                    "aggregation node plus one link pad failed to "
                    "reconstruct the secret");
            }
            break;
        case Model::orr:
        case Model::orr_ext:
            for (std::size_t i = 0; i < report.intermediates.size(); ++i) {
                const NodeAudit& node = report.intermediates[i];
                if (node.observed_secret) {
                    violate("relay " + node.node.short_hex() +
                            " observed the plain secret");
                }
                const NodeId& successor = result.circuit.hops[i + 1];
                for (const NodeId& seen : node.seen_circuit_ids) {
                    if (!(seen == successor)) {
                        violate("relay " + node.node.short_hex() +
                                " could identify circuit member " +
                                seen.short_hex());
                    }
                }
                if (node.seen_circuit_ids.empty()) {
                    violate("relay " + node.node.short_hex() +
                            " never learned its successor");
                }
            }
            break;
    }
    return verdict;
}

}  // namespace qkdrelay
