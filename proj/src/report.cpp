#include "gkdmd/report.hpp"

#include "gkdmd/errors.hpp"
#include "gkdmd/json_io.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace gkdmd::report {

std::string format_double(double v) {
    if (std::isnan(v)) {
        return "nan";
    }
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) {
        return s;
    }
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') {
            out += '"';
        }
        out += c;
    }
    out += '"';
    return out;
}

void write_report_csv(std::ostream& out, const bench::BenchReport& report) {
    out << "method,kernel,k,eps_rec,fit_seconds,predict_seconds\n";
    for (const auto& r : report.rows) {
        out << csv_field(r.method) << ',' << csv_field(r.kernel) << ',' << r.k << ',' << format_double(r.eps_rec) << ','
            << format_double(r.fit_seconds) << ',' << format_double(r.predict_seconds) << '\n';
    }
}

void write_per_trajectory_csv(std::ostream& out, const bench::BenchReport& report) {
    out << "method,kernel,k,trajectory_index,t,rel_err\n";
    for (const auto& r : report.per_trajectory) {
        out << csv_field(r.method) << ',' << csv_field(r.kernel) << ',' << r.k << ',' << r.trajectory_index << ','
            << r.t << ',' << format_double(r.rel_err) << '\n';
    }
}

void write_error_map_csv(std::ostream& out, const bench::BenchReport& report) {
    out << "method,kernel,k,trajectory_index,component,error\n";
    for (const auto& e : report.error_maps) {
        for (Eigen::Index c = 0; c < e.error.size(); ++c) {
            out << csv_field(e.method) << ',' << csv_field(e.kernel) << ',' << e.k << ',' << e.trajectory_index << ','
                << c << ',' << format_double(e.error(c)) << '\n';
        }
    }
}

namespace {

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string fixed(double v, int digits = 2) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
    return buf;
}

}  // namespace

std::string render_svg(const bench::BenchReport& report, const std::string& title) {
    constexpr double kWidth = 760, kHeight = 480;
    constexpr double kLeft = 80, kRight = 220, kTop = 40, kBottom = 60;
    static const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                           "#9467bd", "#8c564b", "#e377c2", "#17becf"};

    // Series keyed by (method, kernel), in order of first appearance.
    std::vector<std::string> order;
    std::map<std::string, std::vector<std::pair<int, double>>> series;
    for (const auto& r : report.rows) {
        const std::string key = r.method + " / " + r.kernel;
        if (!series.count(key)) {
            order.push_back(key);
        }
        auto& pts = series[key];
        if (r.error.empty() && std::isfinite(r.eps_rec) && r.eps_rec > 0.0) {
            pts.emplace_back(r.k, r.eps_rec);
        }
    }
    double k_lo = 1e300, k_hi = -1e300, y_lo = 1e300, y_hi = -1e300;
    for (auto& [key, pts] : series) {
        std::sort(pts.begin(), pts.end());
        for (const auto& [k, e] : pts) {
            k_lo = std::min<double>(k_lo, k);
            k_hi = std::max<double>(k_hi, k);
            y_lo = std::min(y_lo, std::log10(e));
            y_hi = std::max(y_hi, std::log10(e));
        }
    }
    if (k_lo > k_hi) {
        k_lo = 0;
        k_hi = 1;
        y_lo = 0;
        y_hi = 1;
    }
    if (k_hi == k_lo) {
        k_hi = k_lo + 1;
    }
    y_lo = std::floor(y_lo);
    y_hi = std::ceil(y_hi);
    if (y_hi == y_lo) {
        y_hi = y_lo + 1;
    }
    const double plot_w = kWidth - kLeft - kRight;
    const double plot_h = kHeight - kTop - kBottom;
    auto px = [&](double k) { return kLeft + (k - k_lo) / (k_hi - k_lo) * plot_w; };
    auto py = [&](double logy) { return kTop + (y_hi - logy) / (y_hi - y_lo) * plot_h; };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">"
        << xml_escape(title) << "</text>\n";
    svg << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << plot_w << "\" height=\"" << plot_h
        << "\" fill=\"none\" stroke=\"black\"/>\n";

    for (int d = static_cast<int>(y_lo); d <= static_cast<int>(y_hi); ++d) {
        const double y = py(d);
        svg << "<line x1=\"" << kLeft << "\" y1=\"" << fixed(y) << "\" x2=\"" << kLeft + plot_w << "\" y2=\""
            << fixed(y) << "\" stroke=\"#dddddd\"/>\n";
        svg << "<text x=\"" << kLeft - 8 << "\" y=\"" << fixed(y + 4) << "\" text-anchor=\"end\">1e" << d
            << "</text>\n";
    }
    const int k_step = std::max(1, static_cast<int>(std::ceil((k_hi - k_lo) / 15.0)));
    for (int k = static_cast<int>(k_lo); k <= static_cast<int>(k_hi); k += k_step) {
        const double x = px(k);
        svg << "<line x1=\"" << fixed(x) << "\" y1=\"" << kTop + plot_h << "\" x2=\"" << fixed(x) << "\" y2=\""
            << kTop + plot_h + 5 << "\" stroke=\"black\"/>\n";
        svg << "<text x=\"" << fixed(x) << "\" y=\"" << kTop + plot_h + 20 << "\" text-anchor=\"middle\">" << k
            << "</text>\n";
    }
    svg << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 15 << "\" text-anchor=\"middle\">rank k</text>\n";
    svg << "<text transform=\"translate(20," << kTop + plot_h / 2
        << ") rotate(-90)\" text-anchor=\"middle\">eps_rec (log scale)</text>\n";

    for (std::size_t s = 0; s < order.size(); ++s) {
        const auto& pts = series[order[s]];
        const char* color = kPalette[s % (sizeof(kPalette) / sizeof(kPalette[0]))];
        if (!pts.empty()) {
            svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
            for (std::size_t i = 0; i < pts.size(); ++i) {
                svg << (i ? " " : "") << fixed(px(pts[i].first)) << ',' << fixed(py(std::log10(pts[i].second)));
            }
            svg << "\"/>\n";
            for (const auto& [k, e] : pts) {
                svg << "<circle cx=\"" << fixed(px(k)) << "\" cy=\"" << fixed(py(std::log10(e))) << "\" r=\"3\" fill=\""
                    << color << "\"/>\n";
            }
        }
        const double ly = kTop + 10 + 20.0 * static_cast<double>(s);
        svg << "<line x1=\"" << kLeft + plot_w + 15 << "\" y1=\"" << ly << "\" x2=\"" << kLeft + plot_w + 40
            << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        svg << "<text x=\"" << kLeft + plot_w + 46 << "\" y=\"" << ly + 4 << "\">" << xml_escape(order[s])
            << "</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

void write_text(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open '" + path.string() + "' for writing");
    }
    out << content;
    if (!out) {
        throw IoError("failed writing '" + path.string() + "'");
    }
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open '" + path.string() + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_trajectory_csv(const std::filesystem::path& path, const Eigen::MatrixXd& states) {
    std::ostringstream out;
    for (Eigen::Index i = 0; i < states.rows(); ++i) {
        out << (i ? "," : "") << 'x' << i + 1;
    }
    out << '\n';
    for (Eigen::Index t = 0; t < states.cols(); ++t) {
        for (Eigen::Index i = 0; i < states.rows(); ++i) {
            out << (i ? "," : "") << format_double(states(i, t));
        }
        out << '\n';
    }
    write_text(path, out.str());
}

Eigen::MatrixXd read_trajectory_csv(const std::filesystem::path& path) {
    std::istringstream in(read_text(path));
    std::string line;
    if (!std::getline(in, line)) {
        throw IoError("'" + path.string() + "' is empty");
    }
    const auto p = static_cast<Eigen::Index>(std::count(line.begin(), line.end(), ',') + 1);
    std::vector<double> values;
    Eigen::Index rows = 0;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        std::istringstream row(line);
        std::string cell;
        Eigen::Index count = 0;
        while (std::getline(row, cell, ',')) {
            double v = 0.0;
            const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (res.ec != std::errc() || res.ptr != cell.data() + cell.size()) {
                throw IoError("'" + path.string() + "': bad number '" + cell + "' on data row " +
                              std::to_string(rows + 1));
            }
            values.push_back(v);
            ++count;
        }
        if (count != p) {
            throw IoError("'" + path.string() + "': row " + std::to_string(rows + 1) + " has " +
                          std::to_string(count) + " values, expected " + std::to_string(p));
        }
        ++rows;
    }
    // Stored row-major by time; states are columns.
    Eigen::MatrixXd states(p, rows);
    for (Eigen::Index t = 0; t < rows; ++t) {
        for (Eigen::Index i = 0; i < p; ++i) {
            states(i, t) = values[static_cast<std::size_t>(t * p + i)];
        }
    }
    return states;
}

namespace {

std::string indexed_name(const char* prefix, std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s_%03zu.csv", prefix, i);
    return buf;
}

}  // namespace

void write_dataset(const std::filesystem::path& dir, const bench::Dataset& data) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
    }
    nlohmann::json sidecar = data.system.to_json();
    sidecar["seeds"] = {{"dataset", data.seed}};
    if (sidecar.contains("embed_seed")) {
        sidecar["seeds"]["embed"] = sidecar["embed_seed"];
        sidecar.erase("embed_seed");
    }
    sidecar["N"] = data.n;
    sidecar["T_prime"] = data.t_prime;
    sidecar["p"] = data.system.state_dim();
    sidecar["hypercube"] = {{"lo", json_io::from_vector(data.cube.lo)}, {"hi", json_io::from_vector(data.cube.hi)}};
    sidecar["train"] = nlohmann::json::array();
    sidecar["test"] = nlohmann::json::array();
    for (std::size_t i = 0; i < data.train.size(); ++i) {
        write_trajectory_csv(dir / indexed_name("train", i), data.train[i].states);
        sidecar["train"].push_back(indexed_name("train", i));
    }
    for (std::size_t i = 0; i < data.test.size(); ++i) {
        write_trajectory_csv(dir / indexed_name("test", i), data.test[i].states);
        sidecar["test"].push_back(indexed_name("test", i));
    }
    write_text(dir / "dataset.json", sidecar.dump(2) + "\n");
}

bench::Dataset read_dataset(const std::filesystem::path& dir) {
    nlohmann::json sidecar;
    try {
        sidecar = nlohmann::json::parse(read_text(dir / "dataset.json"));
    } catch (const nlohmann::json::exception& e) {
        throw IoError("'" + (dir / "dataset.json").string() + "' is not valid JSON: " + e.what());
    }
    bench::Dataset data;
    try {
        nlohmann::json system = {{"system_id", sidecar.at("system_id")}, {"params", sidecar.at("params")}};
        if (sidecar.at("seeds").contains("embed")) {
            system["embed_seed"] = sidecar["seeds"]["embed"];
        }
        data.system = bench::SystemConfig::from_json(system);
        data.seed = sidecar.at("seeds").at("dataset").get<std::uint64_t>();
        data.n = sidecar.at("N").get<int>();
        data.t_prime = sidecar.at("T_prime").get<int>();
        data.cube.lo = json_io::to_vector(sidecar.at("hypercube").at("lo"), "hypercube.lo");
        data.cube.hi = json_io::to_vector(sidecar.at("hypercube").at("hi"), "hypercube.hi");
        for (const auto& name : sidecar.at("train")) {
            bench::Trajectory t;
            t.system_id = data.system.id();
            t.states = read_trajectory_csv(dir / name.get<std::string>());
            data.train.push_back(std::move(t));
        }
        for (const auto& name : sidecar.at("test")) {
            bench::Trajectory t;
            t.system_id = data.system.id();
            t.states = read_trajectory_csv(dir / name.get<std::string>());
            data.test.push_back(std::move(t));
        }
    } catch (const nlohmann::json::exception& e) {
        throw IoError("malformed dataset sidecar in '" + dir.string() + "': " + e.what());
    }
    if (static_cast<int>(data.train.size()) != data.n) {
        throw IoError("dataset sidecar lists " + std::to_string(data.train.size()) + " training files, N = " +
                      std::to_string(data.n));
    }
    for (const auto& t : data.train) {
        if (t.states.cols() != data.t_prime) {
            throw IoError("training trajectory length does not match T'");
        }
    }
    return data;
}

}  // namespace gkdmd::report
