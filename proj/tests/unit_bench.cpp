#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <set>
#include <string_view>

#include "json.hpp"
#include "qkdrelay/bench.hpp"
#include "qkdrelay/report.hpp"

using namespace qkdrelay;

namespace {

Stats flat(double value) {
    Stats s;
    s.mean = s.median = s.min = s.max = value;
    s.stddev = 0.0;
    return s;
}

ResultRow make_row(Model model, std::size_t nodes, double enc, double dist) {
    ResultRow row;
    row.model = model;
    row.nodes = nodes;
    row.iterations = 1;
    row.delivered = 1;
    row.encryption_us = flat(enc);
    row.distribution_us = flat(dist);
    row.setup_us = flat(0.0);
    row.wire_bytes = flat(1000.0);
    return row;
}

// A handcrafted report that satisfies every scaling check: flat key relay,
// growing aggregation and construction, a doubling authenticated cost over
// a 5/3 size step, and the expected cross-model orders at the top size.
BenchReport synthetic_report() {
    BenchReport rep;
    rep.plan.node_counts = {3, 5};
    rep.plan.iterations = 1;
    rep.rows.push_back(make_row(Model::kr, 3, 1.0, 10.0));
    rep.rows.push_back(make_row(Model::kr, 5, 1.1, 20.0));
    rep.rows.push_back(make_row(Model::tn, 3, 2.0, 40.0));
    rep.rows.push_back(make_row(Model::tn, 5, 3.0, 60.0));
    rep.rows.push_back(make_row(Model::orr, 3, 3.0, 30.0));
    rep.rows.push_back(make_row(Model::orr, 5, 5.0, 50.0));
    rep.rows.push_back(make_row(Model::orr_ext, 3, 4.0, 50.0));
    rep.rows.push_back(make_row(Model::orr_ext, 5, 8.0, 80.0));
    return rep;
}

ResultRow* row_of(BenchReport& rep, Model model, std::size_t nodes) {
    return const_cast<ResultRow*>(rep.find(model, nodes));
}

const TrendCheck* check_named(const TrendReport& rep, std::string_view name) {
    for (const TrendCheck& check : rep.checks) {
        if (check.name == name) {
            return &check;
        }
    }
    return nullptr;
}

}  // namespace

TEST_CASE("summary statistics match hand-computed values") {
    Stats s = Stats::of({2, 4, 4, 4, 5, 5, 7, 9});
    CHECK(s.mean == doctest::Approx(5.0));
    CHECK(s.stddev == doctest::Approx(2.0));  // population, not sample
    CHECK(s.median == doctest::Approx(4.5));
    CHECK(s.min == doctest::Approx(2.0));
    CHECK(s.max == doctest::Approx(9.0));

    Stats odd = Stats::of({3, 1, 2});
    CHECK(odd.median == doctest::Approx(2.0));
    CHECK(odd.mean == doctest::Approx(2.0));

    Stats empty = Stats::of({});
    CHECK(empty.mean == 0.0);
    CHECK(empty.median == 0.0);
    CHECK(empty.min == 0.0);
    CHECK(empty.max == 0.0);
    CHECK(empty.stddev == 0.0);
}

TEST_CASE("per-run seeds are reproducible and collision-free") {
    CHECK(run_seed(1, Model::orr, 5, 3) == run_seed(1, Model::orr, 5, 3));

    std::set<std::uint64_t> seeds;
    for (Model m : {Model::kr, Model::tn, Model::orr, Model::orr_ext}) {
        for (std::size_t n : {3u, 5u, 7u, 9u, 11u}) {
            for (std::size_t i = 0; i < 100; ++i) {
                seeds.insert(run_seed(1, m, n, i));
            }
        }
    }
    CHECK(seeds.size() == 4 * 5 * 100);

    CHECK(run_seed(1, Model::kr, 3, 0) != run_seed(2, Model::kr, 3, 0));
}

TEST_CASE("size table matches the per-variant closed forms at five nodes") {
    std::vector<SizeRow> rows = size_table(5);
    REQUIRE(rows.size() == 4);

    CHECK(rows[0].variant == OnionVariant::orr);
    CHECK(rows[0].onion_bytes == 256);
    CHECK(rows[0].public_key_bytes == 0);
    CHECK(rows[0].signature_bytes == 0);
    CHECK(rows[0].ciphertext_bytes == 275);

    CHECK(rows[1].variant == OnionVariant::ext_hmac256);
    CHECK(rows[1].onion_bytes == 416);
    CHECK(rows[1].public_key_bytes == 0);
    CHECK(rows[1].signature_bytes == 32);
    CHECK(rows[1].ciphertext_bytes == 435);

    CHECK(rows[2].variant == OnionVariant::ext_falcon1024);
    CHECK(rows[2].onion_bytes == 15616);
    CHECK(rows[2].public_key_bytes == 1793);
    CHECK(rows[2].signature_bytes == 1280);
    CHECK(rows[2].ciphertext_bytes == 15635);

    CHECK(rows[3].variant == OnionVariant::ext_dilithium3);
    CHECK(rows[3].onion_bytes == 26496);
    CHECK(rows[3].public_key_bytes == 1952);
    CHECK(rows[3].signature_bytes == 3293);
    CHECK(rows[3].ciphertext_bytes == 26515);

    // Heavier authentication strictly dominates on the wire.
    for (std::size_t i = 1; i < rows.size(); ++i) {
        CHECK(rows[i - 1].ciphertext_bytes < rows[i].ciphertext_bytes);
    }
}

TEST_CASE("a small experiment fills every cell of the grid") {
    ExperimentPlan plan;
    plan.node_counts = {3, 5};
    plan.iterations = 3;
    plan.base_seed = 7;
    BenchReport rep = run_plan(plan);

    REQUIRE(rep.rows.size() == 8);  // 4 models x 2 sizes, model-major
    CHECK(rep.rows[0].model == Model::kr);
    CHECK(rep.rows[0].nodes == 3);
    CHECK(rep.rows[1].model == Model::kr);
    CHECK(rep.rows[1].nodes == 5);
    CHECK(rep.rows[2].model == Model::tn);

    for (const ResultRow& row : rep.rows) {
        CAPTURE(model_name(row.model));
        CAPTURE(row.nodes);
        CHECK(row.iterations == 3);
        CHECK(row.delivered == 3);
        CHECK(row.encryption_us.mean > 0.0);
        CHECK(row.distribution_us.mean > 0.0);
        // Payload framing is fixed per (model, size), so the wire volume
        // cannot vary across seeds.
        CHECK(row.wire_bytes.stddev == 0.0);
        if (row.model == Model::orr || row.model == Model::orr_ext) {
            CHECK(row.setup_us.mean > 0.0);
        } else {
            CHECK(row.setup_us.mean == 0.0);
        }
    }

    CHECK(rep.find(Model::orr, 5) != nullptr);
    CHECK(rep.find(Model::orr, 99) == nullptr);
}

TEST_CASE("experiment results are reproducible run to run") {
    ExperimentPlan plan;
    plan.models = {Model::kr, Model::tn};
    plan.node_counts = {3, 4};
    plan.iterations = 2;
    plan.base_seed = 99;
    BenchReport a = run_plan(plan);
    BenchReport b = run_plan(plan);
    REQUIRE(a.rows.size() == b.rows.size());
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        CHECK(a.rows[i].delivered == b.rows[i].delivered);
        CHECK(a.rows[i].wire_bytes.mean == b.rows[i].wire_bytes.mean);
    }
}

TEST_CASE("an empty experiment is rejected") {
    ExperimentPlan no_iters;
    no_iters.iterations = 0;
    CHECK_THROWS_AS((void)run_plan(no_iters), ConfigError);

    ExperimentPlan no_models;
    no_models.models.clear();
    CHECK_THROWS_AS((void)run_plan(no_models), ConfigError);

    ExperimentPlan no_sizes;
    no_sizes.node_counts.clear();
    CHECK_THROWS_AS((void)run_plan(no_sizes), ConfigError);
}

TEST_CASE("scaling checks accept a well-shaped report") {
    TrendReport trends = check_trends(synthetic_report());
    CHECK(trends.all_ok);
    REQUIRE(trends.checks.size() == 6);
    for (const TrendCheck& check : trends.checks) {
        CAPTURE(check.name);
        CAPTURE(check.detail);
        CHECK(check.ok);
    }
    CHECK(check_named(trends, "kr_encryption_flat") != nullptr);
    CHECK(check_named(trends, "TN_encryption_increasing") != nullptr);
    CHECK(check_named(trends, "ORR_encryption_increasing") != nullptr);
    CHECK(check_named(trends, "ext_encryption_superlinear") != nullptr);
    CHECK(check_named(trends, "encryption_order") != nullptr);
    CHECK(check_named(trends, "distribution_order") != nullptr);
}

TEST_CASE("each scaling check trips on the defect it watches for") {
    {
        BenchReport rep = synthetic_report();
        row_of(rep, Model::kr, 5)->encryption_us.mean = 3.0;  // 3x spread
        TrendReport trends = check_trends(rep);
        CHECK(!trends.all_ok);
        CHECK(!check_named(trends, "kr_encryption_flat")->ok);
        CHECK(check_named(trends, "encryption_order")->ok);
    }
    {
        BenchReport rep = synthetic_report();
        row_of(rep, Model::tn, 5)->encryption_us.mean = 1.5;  // shrinks
        TrendReport trends = check_trends(rep);
        CHECK(!check_named(trends, "TN_encryption_increasing")->ok);
        CHECK(check_named(trends, "ORR_encryption_increasing")->ok);
    }
    {
        BenchReport rep = synthetic_report();
        // Ratio 6/4 = 1.5 is below the 5/3 linear slope.
        row_of(rep, Model::orr_ext, 5)->encryption_us.median = 6.0;
        TrendReport trends = check_trends(rep);
        CHECK(!check_named(trends, "ext_encryption_superlinear")->ok);
        CHECK(check_named(trends, "encryption_order")->ok);
    }
    {
        BenchReport rep = synthetic_report();
        row_of(rep, Model::orr, 5)->encryption_us.median = 2.5;  // below TN
        TrendReport trends = check_trends(rep);
        CHECK(!check_named(trends, "encryption_order")->ok);
    }
    {
        BenchReport rep = synthetic_report();
        row_of(rep, Model::tn, 5)->distribution_us.median = 45.0;  // below ORR
        TrendReport trends = check_trends(rep);
        CHECK(!check_named(trends, "distribution_order")->ok);
    }
}

TEST_CASE("scaling checks demand a complete grid") {
    BenchReport rep = synthetic_report();
    rep.rows.erase(rep.rows.begin() + 3);  // drop TN at five nodes
    TrendReport trends = check_trends(rep);
    CHECK(!trends.all_ok);
    REQUIRE(trends.checks.size() == 1);
    CHECK(trends.checks[0].name == "grid");
    CHECK(trends.checks[0].detail.find("TN") != std::string::npos);

    BenchReport single = synthetic_report();
    single.plan.node_counts = {3};
    TrendReport short_trends = check_trends(single);
    CHECK(!short_trends.all_ok);
    CHECK(short_trends.checks[0].name == "grid");
}

TEST_CASE("the CSV table matches its golden form byte for byte") {
    BenchReport rep;
    ResultRow row;
    row.model = Model::kr;
    row.nodes = 3;
    row.iterations = 2;
    row.delivered = 2;
    row.encryption_us = Stats::of({1.0, 2.0});
    row.distribution_us = Stats::of({10.0, 20.0});
    row.setup_us = Stats::of({0.0, 0.0});
    row.wire_bytes = Stats::of({100.0, 100.0});
    rep.rows.push_back(row);

    const std::string want =
        "model,variant,nodes,iterations,delivered,"
        "enc_mean_us,enc_median_us,enc_min_us,enc_max_us,enc_stddev_us,"
        "dist_mean_us,dist_median_us,dist_min_us,dist_max_us,"
        "dist_stddev_us,setup_mean_us,wire_bytes_mean\n"
        "KR,-,3,2,2,1.500,1.500,1.000,2.000,0.500,"
        "15.000,15.000,10.000,20.000,5.000,0.000,100.0\n";
    CHECK(to_csv(rep) == want);
}

TEST_CASE("the JSON report parses back with the plan intact") {
    ExperimentPlan plan;
    plan.node_counts = {3, 5};
    plan.iterations = 2;
    plan.base_seed = 11;
    BenchReport rep = run_plan(plan);

    nlohmann::json doc = nlohmann::json::parse(to_json(rep));
    REQUIRE(doc.contains("plan"));
    REQUIRE(doc.contains("rows"));
    CHECK(doc["plan"]["models"] ==
          nlohmann::json({"KR", "TN", "ORR", "ORR-Ext"}));
    CHECK(doc["plan"]["ext_variant"] == "ExtHmac256");
    CHECK(doc["plan"]["node_counts"] == nlohmann::json({3, 5}));
    CHECK(doc["plan"]["iterations"] == 2);
    CHECK(doc["plan"]["base_seed"] == 11);
    CHECK(doc["plan"]["hop_latency_ns"] == Network::kDefaultHopLatencyNs);
    CHECK(doc["plan"]["byte_latency_ns"] == Network::kDefaultByteLatencyNs);

    REQUIRE(doc["rows"].size() == 8);
    const auto& first = doc["rows"][0];
    CHECK(first["model"] == "KR");
    CHECK(first["variant"] == "-");
    CHECK(first["nodes"] == 3);
    CHECK(first["delivered"] == 2);
    CHECK(first["encryption_us"]["mean"].get<double>() > 0.0);
    CHECK(first["distribution_us"]["median"].get<double>() > 0.0);
}

TEST_CASE("the markdown table lists every cell and appends verdicts") {
    BenchReport rep = synthetic_report();
    std::string plain = to_markdown(rep);
    CHECK(plain.find("| model | variant | nodes |") != std::string::npos);
    CHECK(plain.find("| KR | - | 3 | 1/1 |") != std::string::npos);
    CHECK(plain.find("| ORR-Ext | ExtHmac256 | 5 |") == std::string::npos);
    CHECK(plain.find("| ORR-Ext | Orr | 5 |") != std::string::npos);
    CHECK(plain.find("Scaling checks") == std::string::npos);

    TrendReport trends = check_trends(rep);
    std::string judged = to_markdown(rep, &trends);
    CHECK(judged.find("**Scaling checks** (all passed)") !=
          std::string::npos);
    CHECK(judged.find("distribution_order") != std::string::npos);

    trends.all_ok = false;
    trends.checks[0].ok = false;
    std::string failed = to_markdown(rep, &trends);
    CHECK(failed.find("(FAILURES)") != std::string::npos);
    CHECK(failed.find("- FAIL") != std::string::npos);
}

TEST_CASE("the size tables match their golden forms") {
    std::vector<SizeRow> rows = size_table(5);
    const std::string want_csv =
        "variant,nodes,onion_bytes,public_key_bytes,signature_bytes,"
        "ciphertext_bytes\n"
        "Orr,5,256,0,0,275\n"
        "ExtHmac256,5,416,0,32,435\n"
        "ExtFalcon1024,5,15616,1793,1280,15635\n"
        "ExtDilithium3,5,26496,1952,3293,26515\n";
    CHECK(sizes_csv(rows) == want_csv);

    std::string md = sizes_markdown(rows);
    CHECK(md.find("| variant | nodes |") != std::string::npos);
    CHECK(md.find("| ExtFalcon1024 | 5 | 15616 | 1793 | 1280 | 15635 |") !=
          std::string::npos);
}

TEST_CASE("the chart is a standalone SVG with one series per model") {
    BenchReport rep = synthetic_report();
    std::string svg = to_svg(rep);
    CHECK(svg.rfind("<svg ", 0) == 0);
    CHECK(svg.find("</svg>\n") == svg.size() - 7);
    CHECK(svg.find("circuit size (nodes)") != std::string::npos);
    CHECK(svg.find("mean distribution time (us)") != std::string::npos);

    std::size_t polylines = 0;
    for (std::size_t pos = svg.find("<polyline"); pos != std::string::npos;
         pos = svg.find("<polyline", pos + 1)) {
        ++polylines;
    }
    CHECK(polylines == 4);
    CHECK(svg.find(">KR<") != std::string::npos);
    CHECK(svg.find(">ORR-Ext<") != std::string::npos);
}

TEST_CASE("report files round-trip through the filesystem") {
    namespace fs = std::filesystem;
    fs::path path = fs::temp_directory_path() / "qkdrelay_report_check.csv";
    const std::string content = "alpha,beta\n1,2\n";
    write_file(path.string(), content);
    std::ifstream in(path, std::ios::binary);
    std::string back((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    CHECK(back == content);
    fs::remove(path);

    CHECK_THROWS_AS(write_file("/nonexistent-dir/out.csv", "x"), IoError);
}
