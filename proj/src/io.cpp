#include "zial/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace zial {

namespace fs = std::filesystem;

std::string format_g17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (unsigned char b : bytes) {
        h ^= b;
        h *= 0x100000001B3ull;
    }
    return h;
}

std::string fnv1a64_hex(const std::string& bytes) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a64(bytes)));
    return buf;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void atomic_write_file(const fs::path& path, const std::string& contents) {
    fs::path dir = path.parent_path();
    if (dir.empty()) dir = ".";
    fs::path tmp = dir / (path.filename().string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write file: " + tmp.string());
        out << contents;
        if (!out) throw std::runtime_error("short write: " + tmp.string());
    }
    fs::rename(tmp, path);
}

void write_dataset_csv(const fs::path& path, const Dataset& ds, std::size_t d,
                       std::size_t d_prime) {
    std::ostringstream out;
    for (std::size_t c = 0; c < d; ++c) out << "x_" << c + 1 << ",";
    for (std::size_t c = 0; c < d_prime; ++c) out << "y_" << c + 1 << (c + 1 < d_prime ? "," : "\n");
    for (std::size_t i = 0; i < ds.n(); ++i) {
        if (ds.inputs[i].size() != d || ds.targets[i].size() != d_prime)
            throw std::invalid_argument("write_dataset_csv: sample dim mismatch");
        for (std::size_t c = 0; c < d; ++c) out << format_g17(ds.inputs[i][c]) << ",";
        for (std::size_t c = 0; c < d_prime; ++c)
            out << format_g17(ds.targets[i][c]) << (c + 1 < d_prime ? "," : "\n");
    }
    atomic_write_file(path, out.str());
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    fields.push_back(cur);
    return fields;
}

[[noreturn]] void csv_error(const fs::path& path, std::size_t lineno, const std::string& what) {
    throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": " + what);
}

}  // namespace

Dataset read_dataset_csv(const fs::path& path, std::size_t d, std::size_t d_prime) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open dataset: " + path.string());

    Dataset ds;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const std::vector<std::string> fields = split_csv_line(line);
        if (lineno == 1) {
            if (fields.size() != d + d_prime)
                csv_error(path, lineno,
                          "header has " + std::to_string(fields.size()) + " columns, expected " +
                              std::to_string(d + d_prime));
            if (fields.front() != "x_1")
                csv_error(path, lineno, "expected header starting with x_1");
            continue;
        }
        if (fields.size() != d + d_prime)
            csv_error(path, lineno,
                      "row has " + std::to_string(fields.size()) + " columns, expected " +
                          std::to_string(d + d_prime));
        Vector X(d), Y(d_prime);
        for (std::size_t c = 0; c < d + d_prime; ++c) {
            double v = 0.0;
            try {
                std::size_t used = 0;
                v = std::stod(fields[c], &used);
                if (used != fields[c].size()) throw std::invalid_argument("trailing junk");
            } catch (const std::exception&) {
                csv_error(path, lineno, "cannot parse number '" + fields[c] + "' in column " +
                                            std::to_string(c + 1));
            }
            if (!std::isfinite(v)) csv_error(path, lineno, "non-finite value");
            if (c < d)
                X[c] = v;
            else
                Y[c - d] = v;
        }
        ds.inputs.push_back(std::move(X));
        ds.targets.push_back(std::move(Y));
    }
    if (ds.n() == 0) throw std::runtime_error(path.string() + ": no samples");
    return ds;
}

std::string rate_table_csv(const RateTable& table) {
    std::ostringstream out;
    out << "n,replicate,voronoi_loss,alpha_err,l2_err,final_loss,converged,wall_ms\n";
    for (const RateRow& row : table.rows) {
        out << row.n << "," << row.replicate << "," << format_g17(row.voronoi_loss) << ","
            << format_g17(row.alpha_err) << "," << format_g17(row.l2_err) << ","
            << format_g17(row.final_loss) << "," << (row.converged ? "true" : "false") << ","
            << row.work_evals << "\n";
    }
    return out.str();
}

std::string fit_result_json(const FitResult& fr) {
    nlohmann::ordered_json j;
    j["atoms"] = nlohmann::ordered_json::array();
    for (const Atom& a : fr.G_hat.atoms) {
        nlohmann::ordered_json atom;
        atom["b"] = a.b;
        atom["p"] = a.p;
        j["atoms"].push_back(atom);
    }
    j["alpha"] = fr.alpha_hat;
    j["final_loss"] = fr.final_loss;
    j["iterations"] = fr.iterations_used;
    j["converged"] = fr.converged;
    return j.dump(2) + "\n";
}

std::string run_manifest_json(const RunManifest& m) {
    nlohmann::ordered_json j;
    j["config_hash"] = m.config_hash;
    j["artifact_version"] = m.artifact_version;
    j["wall_clock_seconds"] = m.wall_clock_seconds;
    j["master_seed"] = m.master_seed;
    j["outputs"] = m.outputs;
    return j.dump(2) + "\n";
}

fs::path manifest_path_for(const fs::path& output) {
    fs::path p = output;
    p.replace_extension(".manifest.json");
    return p;
}

namespace {

struct PlotSeries {
    std::vector<double> log_n;
    std::vector<double> log_v;
};

std::string svg_panel(const RateTable& table, std::size_t panel, const std::string& name,
                      double (*metric)(const MedianRow&), const SlopeFit& slope, double x0) {
    PlotSeries s;
    for (const MedianRow& mr : table.medians) {
        const double v = metric(mr);
        if (v > 0.0) {
            s.log_n.push_back(std::log10(static_cast<double>(mr.n)));
            s.log_v.push_back(std::log10(v));
        }
    }
    (void)panel;

    const double width = 400.0, height = 320.0;
    const double ml = 56.0, mr_ = 16.0, mt = 30.0, mb = 44.0;
    std::ostringstream out;
    out << "<g transform=\"translate(" << x0 << ",0)\">\n";
    out << "  <rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << width - ml - mr_
        << "\" height=\"" << height - mt - mb
        << "\" fill=\"white\" stroke=\"#444\" stroke-width=\"1\"/>\n";
    out << "  <text x=\"" << width / 2 << "\" y=\"18\" text-anchor=\"middle\" font-family=\"sans-serif\""
        << " font-size=\"13\">" << name << " vs n (log-log)</text>\n";

    if (s.log_n.size() >= 1) {
        double xmin = *std::min_element(s.log_n.begin(), s.log_n.end());
        double xmax = *std::max_element(s.log_n.begin(), s.log_n.end());
        double ymin = *std::min_element(s.log_v.begin(), s.log_v.end());
        double ymax = *std::max_element(s.log_v.begin(), s.log_v.end());
        if (xmax - xmin < 1e-9) { xmin -= 0.5; xmax += 0.5; }
        if (ymax - ymin < 1e-9) { ymin -= 0.5; ymax += 0.5; }
        const double xpad = 0.04 * (xmax - xmin), ypad = 0.08 * (ymax - ymin);
        xmin -= xpad; xmax += xpad; ymin -= ypad; ymax += ypad;

        auto px = [&](double lx) { return ml + (lx - xmin) / (xmax - xmin) * (width - ml - mr_); };
        auto py = [&](double ly) { return height - mb - (ly - ymin) / (ymax - ymin) * (height - mt - mb); };

        // Decade ticks.
        for (int e = static_cast<int>(std::floor(xmin)); e <= static_cast<int>(std::ceil(xmax)); ++e) {
            if (e < xmin || e > xmax) continue;
            out << "  <line x1=\"" << px(e) << "\" y1=\"" << height - mb << "\" x2=\"" << px(e)
                << "\" y2=\"" << height - mb + 5 << "\" stroke=\"#444\"/>\n";
            out << "  <text x=\"" << px(e) << "\" y=\"" << height - mb + 18
                << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">1e" << e
                << "</text>\n";
        }
        for (int e = static_cast<int>(std::floor(ymin)); e <= static_cast<int>(std::ceil(ymax)); ++e) {
            if (e < ymin || e > ymax) continue;
            out << "  <line x1=\"" << ml - 5 << "\" y1=\"" << py(e) << "\" x2=\"" << ml << "\" y2=\""
                << py(e) << "\" stroke=\"#444\"/>\n";
            out << "  <text x=\"" << ml - 8 << "\" y=\"" << py(e) + 4
                << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">1e" << e
                << "</text>\n";
        }

        // Fitted line behind the data, drawn over the x-range.
        if (slope.defined) {
            const double ln10 = std::log(10.0);
            auto fit_ly = [&](double lx) {
                return (slope.intercept + slope.slope * (lx * ln10)) / ln10;
            };
            out << "  <line x1=\"" << px(xmin + xpad) << "\" y1=\"" << py(fit_ly(xmin + xpad))
                << "\" x2=\"" << px(xmax - xpad) << "\" y2=\"" << py(fit_ly(xmax - xpad))
                << "\" stroke=\"#b2182b\" stroke-width=\"1.2\" stroke-dasharray=\"5,4\"/>\n";
        }

        out << "  <polyline fill=\"none\" stroke=\"#2166ac\" stroke-width=\"1.6\" points=\"";
        for (std::size_t i = 0; i < s.log_n.size(); ++i)
            out << px(s.log_n[i]) << "," << py(s.log_v[i]) << " ";
        out << "\"/>\n";
        for (std::size_t i = 0; i < s.log_n.size(); ++i)
            out << "  <circle cx=\"" << px(s.log_n[i]) << "\" cy=\"" << py(s.log_v[i])
                << "\" r=\"2.8\" fill=\"#2166ac\"/>\n";
    }

    char legend[128];
    if (slope.defined)
        std::snprintf(legend, sizeof(legend), "median %s, slope = %.3f (R^2 = %.3f)", name.c_str(),
                      slope.slope, slope.r_squared);
    else
        std::snprintf(legend, sizeof(legend), "median %s, slope undefined", name.c_str());
    out << "  <text x=\"" << ml + 6 << "\" y=\"" << height - mb + 34
        << "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#333\">" << legend << "</text>\n";
    out << "</g>\n";
    return out.str();
}

}  // namespace

std::string rate_plots_svg(const RateTable& table) {
    const double panel_w = 400.0, height = 320.0;
    std::ostringstream out;
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << 3 * panel_w
        << "\" height=\"" << height << "\" viewBox=\"0 0 " << 3 * panel_w << " " << height
        << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"#fafafa\"/>\n";
    out << svg_panel(table, 0, "voronoi_loss",
                     [](const MedianRow& m) { return m.voronoi_loss; }, table.slope_D, 0.0);
    out << svg_panel(table, 1, "alpha_err",
                     [](const MedianRow& m) { return m.alpha_err; }, table.slope_alpha, panel_w);
    out << svg_panel(table, 2, "l2_err",
                     [](const MedianRow& m) { return m.l2_err; }, table.slope_l2, 2 * panel_w);
    out << "</svg>\n";
    return out.str();
}

}  // namespace zial
