#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qkdrelay/protocols.hpp"

namespace qkdrelay {

/// The benchmark grid: each listed model runs at each circuit size for the
/// given number of independently seeded iterations.
struct ExperimentPlan {
    std::vector<Model> models = {Model::kr, Model::tn, Model::orr,
                                 Model::orr_ext};
    OnionVariant ext_variant = OnionVariant::ext_hmac256;
    std::vector<std::size_t> node_counts = {3, 5, 7, 9, 11};
    std::size_t iterations = 100;
    std::uint64_t base_seed = 1;
    std::uint64_t hop_latency_ns = Network::kDefaultHopLatencyNs;
    std::uint64_t byte_latency_ns = Network::kDefaultByteLatencyNs;
};

struct Stats {
    double mean = 0.0;
    double median = 0.0;  // robust against scheduler-induced spikes
    double min = 0.0;
    double max = 0.0;
    double stddev = 0.0;

    static Stats of(const std::vector<double>& samples);
};

struct ResultRow {
    Model model = Model::kr;
    OnionVariant variant = OnionVariant::orr;  // onion models only
    std::size_t nodes = 0;
    std::size_t iterations = 0;
    std::size_t delivered = 0;  // runs that recovered the exact secret
    Stats encryption_us;
    Stats distribution_us;
    Stats setup_us;
    Stats wire_bytes;
};

struct BenchReport {
    ExperimentPlan plan;
    std::vector<ResultRow> rows;

    const ResultRow* find(Model model, std::size_t nodes) const;
};

/// Deterministic per-run seed so any single run can be replayed.
std::uint64_t run_seed(std::uint64_t base_seed, Model model,
                       std::size_t nodes, std::size_t iteration);

BenchReport run_plan(const ExperimentPlan& plan);

/// One named pass/fail judgement over a report.
struct TrendCheck {
    std::string name;
    bool ok = false;
    std::string detail;
};

struct TrendReport {
    bool all_ok = true;
    std::vector<TrendCheck> checks;
};

/// Cost-scaling assertions: flat key relay, growing aggregation and onion
/// construction, superlinear authenticated construction, and the
/// cross-model orderings at the largest circuit size.
TrendReport check_trends(const BenchReport& report);

/// Per-variant frame and key-material accounting at one circuit size.
struct SizeRow {
    OnionVariant variant{};
    std::size_t nodes = 0;
    std::size_t onion_bytes = 0;       // layered frame body
    std::size_t public_key_bytes = 0;  // per-layer signer public key field
    std::size_t signature_bytes = 0;   // per-layer signature / tag field
    std::size_t ciphertext_bytes = 0;  // full link-protected unit on the wire
};

std::vector<SizeRow> size_table(std::size_t nodes);

}  // namespace qkdrelay
