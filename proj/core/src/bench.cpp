#include "qkdrelay/bench.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace qkdrelay {

namespace {

std::uint64_t mix64(std::uint64_t v) {
    v ^= v >> 33;
    v *= 0xff51afd7ed558ccdULL;
    v ^= v >> 33;
    v *= 0xc4ceb9fe1a85ec53ULL;
    v ^= v >> 33;
    return v;
}

std::string format_us(double value) {
    std::ostringstream out;
    out.precision(2);
    out << std::fixed << value;
    return out.str();
}

}  // namespace

Stats Stats::of(const std::vector<double>& samples) {
    Stats s;
    if (samples.empty()) {
        return s;
    }
    std::vector<double> sorted = samples;
    std::sort(sorted.begin(), sorted.end());
    s.min = sorted.front();
    s.max = sorted.back();
    const std::size_t mid = sorted.size() / 2;
    s.median = (sorted.size() % 2 == 1)
                   ? sorted[mid]
                   : (sorted[mid - 1] + sorted[mid]) / 2.0;
    double sum = 0.0;
    for (double x : sorted) {
        sum += x;
    }
    s.mean = sum / static_cast<double>(sorted.size());
    double sq = 0.0;
    for (double x : sorted) {
        sq += (x - s.mean) * (x - s.mean);
    }
    s.stddev = std::sqrt(sq / static_cast<double>(sorted.size()));
    return s;
}

const ResultRow* BenchReport::find(Model model, std::size_t nodes) const {
    for (const ResultRow& row : rows) {
        if (row.model == model && row.nodes == nodes) {
            return &row;
        }
    }
    return nullptr;
}

std::uint64_t run_seed(std::uint64_t base_seed, Model model,
                       std::size_t nodes, std::size_t iteration) {
    std::uint64_t x = mix64(base_seed ^ 0x71c9de95ab11efa3ULL);
    x = mix64(x ^ (static_cast<std::uint64_t>(model) * 0x9e3779b97f4a7c15ULL));
    x = mix64(x ^ (static_cast<std::uint64_t>(nodes) * 0xbf58476d1ce4e5b9ULL));
    x = mix64(x ^ static_cast<std::uint64_t>(iteration));
    return x;
}

BenchReport run_plan(const ExperimentPlan& plan) {
    if (plan.iterations == 0 || plan.models.empty() ||
        plan.node_counts.empty()) {
        throw ConfigError("an experiment needs models, sizes and iterations");
    }
    struct Cell {
        std::size_t delivered = 0;
        std::vector<double> enc_us;
        std::vector<double> dist_us;
        std::vector<double> setup_us;
        std::vector<double> wire;
    };
    const std::size_t n_cells =
        plan.models.size() * plan.node_counts.size();
    std::vector<Cell> cells(n_cells);
    for (Cell& cell : cells) {
        cell.enc_us.reserve(plan.iterations);
        cell.dist_us.reserve(plan.iterations);
        cell.setup_us.reserve(plan.iterations);
        cell.wire.reserve(plan.iterations);
    }

    // Iteration-major execution: every pass touches every cell once, so a
    // transient background-load burst spreads over the whole grid instead
    // of poisoning one (model, size) cell's statistics.  Seeds depend only
    // on the cell and iteration, never on execution order.
    for (std::size_t i = 0; i < plan.iterations; ++i) {
        std::size_t cell_index = 0;
        for (Model model : plan.models) {
            for (std::size_t nodes : plan.node_counts) {
                RunConfig cfg;
                cfg.model = model;
                cfg.ext_variant = plan.ext_variant;
                cfg.n_nodes = nodes;
                cfg.seed = run_seed(plan.base_seed, model, nodes, i);
                cfg.hop_latency_ns = plan.hop_latency_ns;
                cfg.byte_latency_ns = plan.byte_latency_ns;
                RunResult result = run_protocol(cfg);
                Cell& cell = cells[cell_index++];
                if (result.outcome.status == RunStatus::delivered) {
                    ++cell.delivered;
                }
                cell.enc_us.push_back(
                    static_cast<double>(
                        result.outcome.timings.encryption_ns) /
                    1000.0);
                cell.dist_us.push_back(
                    static_cast<double>(
                        result.outcome.timings.distribution_ns) /
                    1000.0);
                cell.setup_us.push_back(
                    static_cast<double>(result.outcome.timings.setup_ns) /
                    1000.0);
                cell.wire.push_back(
                    static_cast<double>(result.outcome.wire_bytes));
            }
        }
    }

    BenchReport report;
    report.plan = plan;
    std::size_t cell_index = 0;
    for (Model model : plan.models) {
        for (std::size_t nodes : plan.node_counts) {
            const Cell& cell = cells[cell_index++];
            ResultRow row;
            row.model = model;
            row.variant = (model == Model::orr_ext) ? plan.ext_variant
                                                    : OnionVariant::orr;
            row.nodes = nodes;
            row.iterations = plan.iterations;
            row.delivered = cell.delivered;
            row.encryption_us = Stats::of(cell.enc_us);
            row.distribution_us = Stats::of(cell.dist_us);
            row.setup_us = Stats::of(cell.setup_us);
            row.wire_bytes = Stats::of(cell.wire);
            report.rows.push_back(std::move(row));
        }
    }
    return report;
}

TrendReport check_trends(const BenchReport& report) {
    TrendReport out;
    auto add = [&](std::string name, bool ok, std::string detail) {
        out.all_ok = out.all_ok && ok;
        out.checks.push_back({std::move(name), ok, std::move(detail)});
    };
    const std::vector<std::size_t>& sizes = report.plan.node_counts;
    if (sizes.size() < 2) {
        add("grid", false, "need at least two circuit sizes");
        return out;
    }
    const std::size_t n_min = sizes.front();
    const std::size_t n_max = sizes.back();

    auto row = [&](Model m, std::size_t n) { return report.find(m, n); };
    auto missing = [&](Model m) {
        for (std::size_t n : sizes) {
            if (row(m, n) == nullptr) {
                return true;
            }
        }
        return false;
    };
    for (Model m :
         {Model::kr, Model::tn, Model::orr, Model::orr_ext}) {
        if (missing(m)) {
            add("grid", false,
                std::string("no complete data for ") +
                    std::string(model_name(m)));
            return out;
        }
    }

    // Key-relay construction cost is independent of the circuit size.
    {
        double lo = row(Model::kr, n_min)->encryption_us.mean;
        double hi = lo;
        for (std::size_t n : sizes) {
            lo = std::min(lo, row(Model::kr, n)->encryption_us.mean);
            hi = std::max(hi, row(Model::kr, n)->encryption_us.mean);
        }
        bool ok = lo > 0.0 && (hi / lo) < 2.0;
        add("kr_encryption_flat", ok,
            "max/min = " + format_us(lo > 0.0 ? hi / lo : 0.0) + " (< 2)");
    }

    // Aggregation and onion construction grow with the circuit.
    for (Model m : {Model::tn, Model::orr}) {
        bool ok = true;
        std::string series;
        double prev = -1.0;
        for (std::size_t n : sizes) {
            double mean = row(m, n)->encryption_us.mean;
            ok = ok && mean > prev;
            prev = mean;
            if (!series.empty()) {
                series += " < ";
            }
            series += format_us(mean);
        }
        add(std::string(model_name(m)) + "_encryption_increasing", ok,
            series + " us");
    }

    // Authenticated construction grows faster than linearly.  Judged on
    // medians: a single scheduler preemption landing inside the small-n
    // timed section would otherwise swing the ratio.
    {
        double t_min = row(Model::orr_ext, n_min)->encryption_us.median;
        double t_max = row(Model::orr_ext, n_max)->encryption_us.median;
        double linear = static_cast<double>(n_max) /
                        static_cast<double>(n_min);
        bool ok = t_min > 0.0 && (t_max / t_min) > linear;
        add("ext_encryption_superlinear", ok,
            "t(" + std::to_string(n_max) + ")/t(" + std::to_string(n_min) +
                ") = " + format_us(t_min > 0.0 ? t_max / t_min : 0.0) +
                " (> " + format_us(linear) + ")");
    }

    // Cross-model orderings at the largest size, judged on medians for the
    // same robustness reason.
    {
        double kr = row(Model::kr, n_max)->encryption_us.median;
        double tn = row(Model::tn, n_max)->encryption_us.median;
        double orr = row(Model::orr, n_max)->encryption_us.median;
        double ext = row(Model::orr_ext, n_max)->encryption_us.median;
        bool ok = kr < tn && tn < orr && orr < ext;
        add("encryption_order", ok,
            format_us(kr) + " < " + format_us(tn) + " < " + format_us(orr) +
                " < " + format_us(ext) + " us");
    }
    {
        double kr = row(Model::kr, n_max)->distribution_us.median;
        double tn = row(Model::tn, n_max)->distribution_us.median;
        double orr = row(Model::orr, n_max)->distribution_us.median;
        double ext = row(Model::orr_ext, n_max)->distribution_us.median;
        bool ok = kr < orr && orr < tn && tn < ext;
        add("distribution_order", ok,
            format_us(kr) + " < " + format_us(orr) + " < " + format_us(tn) +
                " < " + format_us(ext) + " us");
    }
    return out;
}

std::vector<SizeRow> size_table(std::size_t nodes) {
    std::vector<SizeRow> rows;
    for (OnionVariant variant :
         {OnionVariant::orr, OnionVariant::ext_hmac256,
          OnionVariant::ext_falcon1024, OnionVariant::ext_dilithium3}) {
        SizeRow row;
        row.variant = variant;
        row.nodes = nodes;
        row.onion_bytes = onion_size(variant, nodes);
        if (is_ext_variant(variant)) {
            SigScheme scheme = ext_auth_scheme(variant);
            row.public_key_bytes = sig_public_key_bytes(scheme);
            row.signature_bytes = sig_signature_bytes(scheme);
        }
        row.ciphertext_bytes =
            row.onion_bytes + frame_overhead_bytes() + 16;
        rows.push_back(row);
    }
    return rows;
}

}  // namespace qkdrelay
