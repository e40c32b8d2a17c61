// Command-line front end: runs the benchmark grid, prints the frame size
// tables, audits confidentiality properties of single runs, and serves a
// key-management endpoint over REST.
//
// Exit codes: 0 success, 2 usage error, 3 execution failure, 4 audit
// violation, 5 endpoint bind failure, 6 failed scaling assertion.

#include <atomic>
#include <chrono>
#include <csignal>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "qkdrelay/audit.hpp"
#include "qkdrelay/bench.hpp"
#include "qkdrelay/qkdlink_http.hpp"
#include "qkdrelay/report.hpp"

using namespace qkdrelay;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitRunFailure = 3;
constexpr int kExitAuditViolation = 4;
constexpr int kExitBindFailure = 5;
constexpr int kExitTrendFailure = 6;

std::vector<Model> parse_models(const std::vector<std::string>& names) {
    std::vector<Model> models;
    for (const std::string& name : names) {
        models.push_back(model_from_name(name));
    }
    return models;
}

OnionVariant parse_variant(const std::string& name) {
    for (OnionVariant variant :
         {OnionVariant::ext_hmac256, OnionVariant::ext_falcon1024,
          OnionVariant::ext_dilithium3}) {
        if (name == onion_variant_name(variant)) {
            return variant;
        }
    }
    if (name == "hmac") return OnionVariant::ext_hmac256;
    if (name == "falcon") return OnionVariant::ext_falcon1024;
    if (name == "dilithium") return OnionVariant::ext_dilithium3;
    throw ConfigError("unknown authenticated layer variant: " + name);
}

void emit(const std::string& body, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << body;
    } else {
        write_file(out_path, body);
        std::cerr << "wrote " << out_path << "\n";
    }
}

// --- REST-backed key delivery for audit runs ------------------------------
//
// Every node gets its own key store and REST endpoint, as if each ran on a
// separate machine.  The stores share one seed, so both ends of a link
// serve bit-identical pads for the same self-authenticating identifiers,
// with no shared in-process state.

class KmeFarm {
public:
    explicit KmeFarm(std::uint64_t seed) : seed_(seed) {}

    std::unique_ptr<KmeClient> client_for(const NodeId& node);

private:
    struct NodeKme {
        KmeStore store;
        KmeHttpServer server;
        int port;

        NodeKme(std::uint64_t seed, const NodeId& owner)
            : store(seed), server(store, owner), port(server.start()) {}
    };

    std::uint64_t seed_;
    std::mutex mutex_;
    std::map<NodeId, std::unique_ptr<NodeKme>> nodes_;
};

// Registers a link with the owner's store the first time that peer is
// addressed, then talks to the owner's endpoint like any REST client.
class LinkOnDemandClient final : public KmeClient {
public:
    LinkOnDemandClient(KmeStore& store, const NodeId& owner, int port)
        : store_(&store), owner_(owner), http_("127.0.0.1", port) {}

    std::vector<QkdPad> get_enc_keys(const NodeId& peer, std::size_t number,
                                     std::size_t size_bits) override {
        ensure_link(peer);
        return http_.get_enc_keys(peer, number, size_bits);
    }

    std::vector<QkdPad> get_dec_keys(
        const NodeId& peer, const std::vector<Bytes>& key_ids) override {
        ensure_link(peer);
        return http_.get_dec_keys(peer, key_ids);
    }

    KmeStatus status(const NodeId& peer) override {
        ensure_link(peer);
        return http_.status(peer);
    }

private:
    void ensure_link(const NodeId& peer) {
        LinkId link = LinkId::between(owner_, peer);
        if (!store_->has_link(link)) {
            store_->add_link(link);
        }
    }

    KmeStore* store_;
    NodeId owner_;
    HttpKmeClient http_;
};

std::unique_ptr<KmeClient> KmeFarm::client_for(const NodeId& node) {
    std::lock_guard lock(mutex_);
    auto it = nodes_.find(node);
    if (it == nodes_.end()) {
        it = nodes_.emplace(node, std::make_unique<NodeKme>(seed_, node))
                 .first;
    }
    return std::make_unique<LinkOnDemandClient>(it->second->store, node,
                                                it->second->port);
}

// --- subcommands ----------------------------------------------------------

struct BenchArgs {
    std::vector<std::string> models = {"KR", "TN", "ORR", "ORR-Ext"};
    std::vector<std::size_t> nodes = {3, 5, 7, 9, 11};
    std::size_t iterations = 100;
    std::uint64_t seed = 1;
    std::string ext_variant = "ExtHmac256";
    std::uint64_t hop_latency_ns = Network::kDefaultHopLatencyNs;
    std::uint64_t byte_latency_ns = Network::kDefaultByteLatencyNs;
    std::string format = "markdown";
    std::string out;
    bool assert_trends = false;
};

int cmd_bench(const BenchArgs& args) {
    ExperimentPlan plan;
    plan.models = parse_models(args.models);
    plan.ext_variant = parse_variant(args.ext_variant);
    plan.node_counts = args.nodes;
    plan.iterations = args.iterations;
    plan.base_seed = args.seed;
    plan.hop_latency_ns = args.hop_latency_ns;
    plan.byte_latency_ns = args.byte_latency_ns;

    BenchReport report = run_plan(plan);
    std::optional<TrendReport> trends;
    if (args.assert_trends) {
        trends = check_trends(report);
    }

    std::string body;
    if (args.format == "csv") {
        body = to_csv(report);
    } else if (args.format == "json") {
        body = to_json(report);
    } else if (args.format == "svg") {
        body = to_svg(report);
    } else {
        body = to_markdown(report, trends ? &*trends : nullptr);
    }
    emit(body, args.out);

    if (trends) {
        for (const TrendCheck& check : trends->checks) {
            std::cerr << (check.ok ? "ok   " : "FAIL ") << check.name << ": "
                      << check.detail << "\n";
        }
        if (!trends->all_ok) {
            return kExitTrendFailure;
        }
    }
    return kExitOk;
}

struct SizesArgs {
    std::size_t nodes = 5;
    std::string format = "markdown";
    std::string out;
};

int cmd_sizes(const SizesArgs& args) {
    std::vector<SizeRow> rows = size_table(args.nodes);
    emit(args.format == "csv" ? sizes_csv(rows) : sizes_markdown(rows),
         args.out);
    return kExitOk;
}

struct AuditArgs {
    std::vector<std::string> models = {"KR", "TN", "ORR", "ORR-Ext"};
    std::size_t nodes = 7;
    std::size_t runs = 10;
    std::uint64_t seed = 1;
    bool http_kme = false;
};

int cmd_audit(const AuditArgs& args) {
    bool all_ok = true;
    for (Model model : parse_models(args.models)) {
        std::size_t conforming = 0;
        std::vector<std::string> violations;
        for (std::size_t i = 0; i < args.runs; ++i) {
            RunConfig cfg;
            cfg.model = model;
            cfg.n_nodes = args.nodes;
            cfg.seed = run_seed(args.seed, model, args.nodes, i);
            std::optional<KmeFarm> farm;
            if (args.http_kme) {
                farm.emplace(cfg.seed);
                cfg.kme_client_factory = [&farm](const NodeId& node) {
                    return farm->client_for(node);
                };
            }
            RunResult result = run_protocol(cfg);
            AuditVerdict verdict =
                check_audit(audit_run(result), result);
            if (verdict.ok &&
                result.outcome.status == RunStatus::delivered) {
                ++conforming;
            } else {
                all_ok = false;
                if (result.outcome.status != RunStatus::delivered) {
                    violations.push_back(
                        "run " + std::to_string(i) + ": " +
                        std::string(run_status_name(result.outcome.status)));
                }
                for (const std::string& line : verdict.violations) {
                    violations.push_back("run " + std::to_string(i) + ": " +
                                         line);
                }
            }
        }
        std::cout << model_name(model) << "  n=" << args.nodes << "  "
                  << conforming << "/" << args.runs << " runs conform"
                  << (args.http_kme ? "  (REST key delivery)" : "") << "\n";
        for (const std::string& line : violations) {
            std::cout << "  violation: " << line << "\n";
        }
    }
    return all_ok ? kExitOk : kExitAuditViolation;
}

struct ServeArgs {
    std::uint64_t seed = 1;
    std::string host = "127.0.0.1";
    int port = 0;
    std::string owner;
    std::vector<std::string> peers;
};

std::atomic<bool> g_stop{false};

void handle_stop(int) { g_stop = true; }

int cmd_serve(const ServeArgs& args) {
    NodeId owner = NodeId::from_hex(args.owner);
    KmeStore store(args.seed);
    for (const std::string& peer_hex : args.peers) {
        store.add_link(LinkId::between(owner, NodeId::from_hex(peer_hex)));
    }

    KmeHttpServer server(store, owner);
    int port = 0;
    try {
        port = server.start(args.host, args.port);
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitBindFailure;
    }

    std::cout << "key-management endpoint for " << owner.to_hex()
              << " listening on " << args.host << ":" << port << "\n"
              << "  GET  /api/v1/keys/{peer_id}/status\n"
              << "  GET  /api/v1/keys/{peer_id}/enc_keys?number=N&size=BITS\n"
              << "  POST /api/v1/keys/{peer_id}/enc_keys\n"
              << "  POST /api/v1/keys/{peer_id}/dec_keys\n"
              << std::flush;

    std::signal(SIGINT, handle_stop);
    std::signal(SIGTERM, handle_stop);
    while (!g_stop) {
        std::this_thread::sleep_for(std::chrono::milliseconds(100));
    }
    server.stop();
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "QKD key-relay simulator: benchmarks, size tables, confidentiality "
        "audits and a REST key-management endpoint"};
    app.require_subcommand(1);

    BenchArgs bench;
    CLI::App* bench_cmd = app.add_subcommand(
        "bench", "Run the model/size benchmark grid and report statistics");
    bench_cmd->add_option("--models", bench.models,
                          "Models to run (KR TN ORR ORR-Ext)");
    bench_cmd->add_option("--nodes", bench.nodes,
                          "Circuit sizes (number of circuit nodes)");
    bench_cmd
        ->add_option("--iterations", bench.iterations,
                     "Seeded runs per (model, size) cell")
        ->check(CLI::PositiveNumber);
    bench_cmd->add_option("--seed", bench.seed, "Base seed for the grid");
    bench_cmd->add_option("--ext-variant", bench.ext_variant,
                          "Authenticated layer variant for ORR-Ext "
                          "(ExtHmac256, ExtFalcon1024, ExtDilithium3)");
    bench_cmd->add_option("--hop-latency-ns", bench.hop_latency_ns,
                          "Per-hop transport charge in nanoseconds");
    bench_cmd->add_option("--byte-latency-ns", bench.byte_latency_ns,
                          "Per-byte transport charge in nanoseconds");
    bench_cmd
        ->add_option("--format", bench.format, "Output format")
        ->check(CLI::IsMember({"markdown", "csv", "json", "svg"}));
    bench_cmd->add_option("--out", bench.out,
                          "Write the report here instead of stdout");
    bench_cmd->add_flag("--assert-trends", bench.assert_trends,
                        "Check the expected cost-scaling relations and fail "
                        "if any is violated");

    SizesArgs sizes;
    CLI::App* sizes_cmd = app.add_subcommand(
        "sizes", "Print per-variant onion and ciphertext sizes");
    sizes_cmd
        ->add_option("--nodes", sizes.nodes, "Circuit size for the table")
        ->check(CLI::PositiveNumber);
    sizes_cmd->add_option("--format", sizes.format, "Output format")
        ->check(CLI::IsMember({"markdown", "csv"}));
    sizes_cmd->add_option("--out", sizes.out,
                          "Write the table here instead of stdout");

    AuditArgs audit;
    CLI::App* audit_cmd = app.add_subcommand(
        "audit",
        "Re-derive confidentiality properties from run evidence and check "
        "them against each model's contract");
    audit_cmd->add_option("--models", audit.models, "Models to audit");
    audit_cmd
        ->add_option("--nodes", audit.nodes, "Circuit size to audit")
        ->check(CLI::PositiveNumber);
    audit_cmd->add_option("--runs", audit.runs, "Audited runs per model")
        ->check(CLI::PositiveNumber);
    audit_cmd->add_option("--seed", audit.seed, "Base seed");
    audit_cmd->add_flag(
        "--http-kme", audit.http_kme,
        "Serve every node's keys over a private REST endpoint instead of "
        "in-process calls");

    ServeArgs serve;
    CLI::App* serve_cmd = app.add_subcommand(
        "kms", "Key-management endpoint operations");
    CLI::App* serve_run = serve_cmd->add_subcommand(
        "serve", "Serve one node's keys over REST until interrupted");
    serve_run
        ->add_option("--owner", serve.owner,
                     "Owning node id (32 hex digits)")
        ->required();
    serve_run->add_option("--peer", serve.peers,
                          "Peer node id across a served link (repeatable)");
    serve_run->add_option("--seed", serve.seed, "Key material seed");
    serve_run->add_option("--host", serve.host, "Bind address");
    serve_run->add_option("--port", serve.port,
                          "Port (0 picks an ephemeral one)")
        ->check(CLI::Range(0, 65535));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*bench_cmd) {
            return cmd_bench(bench);
        }
        if (*sizes_cmd) {
            return cmd_sizes(sizes);
        }
        if (*audit_cmd) {
            return cmd_audit(audit);
        }
        if (*serve_run) {
            return cmd_serve(serve);
        }
        std::cerr << app.help();
        return kExitUsage;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const FormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRunFailure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRunFailure;
    }
}
