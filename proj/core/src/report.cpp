#include "qkdrelay/report.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "json.hpp"

namespace qkdrelay {

namespace {

using nlohmann::json;

std::string fmt(double value, int precision = 3) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(precision) << value;
    return out.str();
}

std::string variant_cell(const ResultRow& row) {
    if (row.model == Model::orr || row.model == Model::orr_ext) {
        return std::string(onion_variant_name(row.variant));
    }
    return "-";
}

json stats_to_json(const Stats& s) {
    return json{{"mean", s.mean},
                {"median", s.median},
                {"min", s.min},
                {"max", s.max},
                {"stddev", s.stddev}};
}

std::string mean_sd(const Stats& s) {
    return fmt(s.mean, 1) + " +/- " + fmt(s.stddev, 1);
}

}  // namespace

std::string to_csv(const BenchReport& report) {
    std::ostringstream out;
    out << "model,variant,nodes,iterations,delivered,"
           "enc_mean_us,enc_median_us,enc_min_us,enc_max_us,enc_stddev_us,"
           "dist_mean_us,dist_median_us,dist_min_us,dist_max_us,"
           "dist_stddev_us,setup_mean_us,wire_bytes_mean\n";
    for (const ResultRow& row : report.rows) {
        out << model_name(row.model) << ',' << variant_cell(row) << ','
            << row.nodes << ',' << row.iterations << ',' << row.delivered
            << ',' << fmt(row.encryption_us.mean) << ','
            << fmt(row.encryption_us.median) << ','
            << fmt(row.encryption_us.min) << ','
            << fmt(row.encryption_us.max) << ','
            << fmt(row.encryption_us.stddev) << ','
            << fmt(row.distribution_us.mean) << ','
            << fmt(row.distribution_us.median) << ','
            << fmt(row.distribution_us.min) << ','
            << fmt(row.distribution_us.max) << ','
            << fmt(row.distribution_us.stddev) << ','
            << fmt(row.setup_us.mean) << ',' << fmt(row.wire_bytes.mean, 1)
            << '\n';
    }
    return out.str();
}

std::string to_json(const BenchReport& report) {
    json plan;
    plan["models"] = json::array();
    for (Model m : report.plan.models) {
        plan["models"].push_back(std::string(model_name(m)));
    }
    plan["ext_variant"] =
        std::string(onion_variant_name(report.plan.ext_variant));
    plan["node_counts"] = report.plan.node_counts;
    plan["iterations"] = report.plan.iterations;
    plan["base_seed"] = report.plan.base_seed;
    plan["hop_latency_ns"] = report.plan.hop_latency_ns;
    plan["byte_latency_ns"] = report.plan.byte_latency_ns;

    json rows = json::array();
    for (const ResultRow& row : report.rows) {
        rows.push_back(json{
            {"model", std::string(model_name(row.model))},
            {"variant", variant_cell(row)},
            {"nodes", row.nodes},
            {"iterations", row.iterations},
            {"delivered", row.delivered},
            {"encryption_us", stats_to_json(row.encryption_us)},
            {"distribution_us", stats_to_json(row.distribution_us)},
            {"setup_us", stats_to_json(row.setup_us)},
            {"wire_bytes", stats_to_json(row.wire_bytes)},
        });
    }
    json doc{{"plan", std::move(plan)}, {"rows", std::move(rows)}};
    return doc.dump(2) + "\n";
}

std::string to_markdown(const BenchReport& report,
                        const TrendReport* trends) {
    std::ostringstream out;
    out << "| model | variant | nodes | delivered | encryption (us) | "
           "distribution (us) | setup (us) | wire bytes |\n";
    out << "|---|---|---:|---:|---:|---:|---:|---:|\n";
    for (const ResultRow& row : report.rows) {
        out << "| " << model_name(row.model) << " | " << variant_cell(row)
            << " | " << row.nodes << " | " << row.delivered << "/"
            << row.iterations << " | " << mean_sd(row.encryption_us)
            << " | " << mean_sd(row.distribution_us) << " | "
            << fmt(row.setup_us.mean, 1) << " | "
            << fmt(row.wire_bytes.mean, 0) << " |\n";
    }
    if (trends != nullptr) {
        out << "\n**Scaling checks** ("
            << (trends->all_ok ? "all passed" : "FAILURES") << ")\n\n";
        for (const TrendCheck& check : trends->checks) {
            out << "- " << (check.ok ? "ok  " : "FAIL") << "  "
                << check.name << ": " << check.detail << "\n";
        }
    }
    return out.str();
}

std::string sizes_csv(const std::vector<SizeRow>& rows) {
    std::ostringstream out;
    out << "variant,nodes,onion_bytes,public_key_bytes,signature_bytes,"
           "ciphertext_bytes\n";
    for (const SizeRow& row : rows) {
        out << onion_variant_name(row.variant) << ',' << row.nodes << ','
            << row.onion_bytes << ',' << row.public_key_bytes << ','
            << row.signature_bytes << ',' << row.ciphertext_bytes << '\n';
    }
    return out.str();
}

std::string sizes_markdown(const std::vector<SizeRow>& rows) {
    std::ostringstream out;
    out << "| variant | nodes | onion bytes | public key | signature | "
           "ciphertext |\n";
    out << "|---|---:|---:|---:|---:|---:|\n";
    for (const SizeRow& row : rows) {
        out << "| " << onion_variant_name(row.variant) << " | " << row.nodes
            << " | " << row.onion_bytes << " | " << row.public_key_bytes
            << " | " << row.signature_bytes << " | " << row.ciphertext_bytes
            << " |\n";
    }
    return out.str();
}

std::string to_svg(const BenchReport& report) {
    constexpr double kWidth = 640.0;
    constexpr double kHeight = 400.0;
    constexpr double kLeft = 70.0;
    constexpr double kRight = 140.0;
    constexpr double kTop = 30.0;
    constexpr double kBottom = 50.0;
    const double plot_w = kWidth - kLeft - kRight;
    const double plot_h = kHeight - kTop - kBottom;

    std::vector<std::size_t> sizes = report.plan.node_counts;
    std::sort(sizes.begin(), sizes.end());
    double y_max = 1.0;
    for (const ResultRow& row : report.rows) {
        y_max = std::max(y_max, row.distribution_us.mean);
    }
    y_max *= 1.1;
    const double x_min = static_cast<double>(sizes.front());
    const double x_span =
        std::max(1.0, static_cast<double>(sizes.back()) - x_min);

    auto x_of = [&](std::size_t n) {
        return kLeft + plot_w * (static_cast<double>(n) - x_min) / x_span;
    };
    auto y_of = [&](double v) { return kTop + plot_h * (1.0 - v / y_max); };

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
        << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << " "
        << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    out << "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "  <line x1=\"" << kLeft << "\" y1=\"" << kTop + plot_h
        << "\" x2=\"" << kLeft + plot_w << "\" y2=\"" << kTop + plot_h
        << "\" stroke=\"black\"/>\n";
    out << "  <line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\""
        << kLeft << "\" y2=\"" << kTop + plot_h << "\" stroke=\"black\"/>\n";
    for (std::size_t n : sizes) {
        out << "  <text x=\"" << x_of(n) << "\" y=\""
            << kTop + plot_h + 18.0
            << "\" text-anchor=\"middle\">" << n << "</text>\n";
    }
    for (int tick = 0; tick <= 4; ++tick) {
        double value = y_max * tick / 4.0;
        out << "  <text x=\"" << kLeft - 8.0 << "\" y=\""
            << y_of(value) + 4.0 << "\" text-anchor=\"end\">"
            << fmt(value, 0) << "</text>\n";
    }
    out << "  <text x=\"" << kLeft + plot_w / 2.0 << "\" y=\""
        << kHeight - 12.0
        << "\" text-anchor=\"middle\">circuit size (nodes)</text>\n";
    out << "  <text x=\"16\" y=\"" << kTop + plot_h / 2.0
        << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
        << kTop + plot_h / 2.0
        << ")\">mean distribution time (us)</text>\n";

    const struct {
        Model model;
        const char* color;
    } series[] = {
        {Model::kr, "#1f77b4"},
        {Model::tn, "#ff7f0e"},
        {Model::orr, "#2ca02c"},
        {Model::orr_ext, "#d62728"},
    };
    double legend_y = kTop + 10.0;
    for (const auto& s : series) {
        std::ostringstream points;
        bool any = false;
        for (std::size_t n : sizes) {
            const ResultRow* row = report.find(s.model, n);
            if (row == nullptr) {
                continue;
            }
            any = true;
            points << x_of(n) << ',' << y_of(row->distribution_us.mean)
                   << ' ';
        }
        if (!any) {
            continue;
        }
        out << "  <polyline fill=\"none\" stroke=\"" << s.color
            << "\" stroke-width=\"2\" points=\"" << points.str() << "\"/>\n";
        for (std::size_t n : sizes) {
            const ResultRow* row = report.find(s.model, n);
            if (row == nullptr) {
                continue;
            }
            out << "  <circle cx=\"" << x_of(n) << "\" cy=\""
                << y_of(row->distribution_us.mean) << "\" r=\"3\" fill=\""
                << s.color << "\"/>\n";
        }
        out << "  <line x1=\"" << kLeft + plot_w + 14.0 << "\" y1=\""
            << legend_y << "\" x2=\"" << kLeft + plot_w + 34.0 << "\" y2=\""
            << legend_y << "\" stroke=\"" << s.color
            << "\" stroke-width=\"2\"/>\n";
        out << "  <text x=\"" << kLeft + plot_w + 40.0 << "\" y=\""
            << legend_y + 4.0 << "\">" << model_name(s.model)
            << "</text>\n";
        legend_y += 18.0;
    }
    out << "</svg>\n";
    return out.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open " + path + " for writing");
    }
    out.write(content.data(),
              static_cast<std::streamsize>(content.size()));
    if (!out) {
        throw IoError("short write to " + path);
    }
}

}  // namespace qkdrelay
