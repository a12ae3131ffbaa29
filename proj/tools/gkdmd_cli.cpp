// gkdmd command-line front end: generate | fit | predict | bench.
//
// Options may also come from a JSON file given with --config. Keys are the
// long flag names with '-' replaced by '_'; flags given on the command line win.

#include "gkdmd/bench.hpp"
#include "gkdmd/errors.hpp"
#include "gkdmd/json_io.hpp"
#include "gkdmd/model.hpp"
#include "gkdmd/predict.hpp"
#include "gkdmd/report.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kToolVersion = "0.1.0";

/// Exit codes: 0 success, 1 runtime failure, 2 invalid configuration.
constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

/// One configurable field: its CLI option plus JSON read/echo.
struct Binding {
    std::string key;
    CLI::Option* option = nullptr;
    std::function<void(const json&)> read;
    std::function<json()> echo;
};

class Registry {
public:
    explicit Registry(CLI::App* app) : app_(app) {}

    template <class T>
    CLI::Option* add(const std::string& key, T& field, const std::string& help, const std::string& short_name = "") {
        std::string flag = "--" + key;
        std::replace(flag.begin(), flag.end(), '_', '-');
        if (!short_name.empty()) {
            flag = short_name + "," + flag;
        }
        CLI::Option* opt = app_->add_option(flag, field, help)->capture_default_str();
        bindings_.push_back({key, opt, [&field, key](const json& j) { field = get_as<T>(j, key); },
                             [&field] { return json(field); }});
        return opt;
    }

    CLI::Option* add_flag(const std::string& key, bool& field, const std::string& help) {
        std::string flag = "--" + key;
        std::replace(flag.begin(), flag.end(), '_', '-');
        CLI::Option* opt = app_->add_flag(flag, field, help);
        bindings_.push_back({key, opt, [&field, key](const json& j) { field = get_as<bool>(j, key); },
                             [&field] { return json(field); }});
        return opt;
    }

    /// Fills every field not given on the command line from `config`.
    void apply(const json& config) const {
        if (!config.is_object()) {
            throw gkdmd::InputError("config file must hold a JSON object");
        }
        for (const auto& [key, value] : config.items()) {
            auto it = std::find_if(bindings_.begin(), bindings_.end(), [&](const Binding& b) { return b.key == key; });
            if (it == bindings_.end()) {
                throw gkdmd::InputError("unknown config key '" + key + "' for command '" + app_->get_name() + "'");
            }
            if (it->option->count() == 0) {
                it->read(value);
            }
        }
    }

    json echo() const {
        json j = json::object();
        for (const auto& b : bindings_) {
            j[b.key] = b.echo();
        }
        return j;
    }

private:
    template <class T>
    static T get_as(const json& j, const std::string& key) {
        try {
            return j.get<T>();
        } catch (const json::exception&) {
            throw gkdmd::InputError("config key '" + key + "' has the wrong type");
        }
    }

    CLI::App* app_;
    std::vector<Binding> bindings_;
};

struct Common {
    std::string config;
    std::uint64_t seed = 0;
    int jobs = 1;
    std::string out;
};

void add_common(CLI::App* app, Registry& reg, Common& common) {
    app->add_option("--config", common.config, "JSON file with option values");
    reg.add("seed", common.seed, "Random seed");
    reg.add("jobs", common.jobs, "Worker threads");
    reg.add("out", common.out, "Output directory", "-o");
}

json read_json_file(const fs::path& path) {
    try {
        return json::parse(gkdmd::report::read_text(path));
    } catch (const json::exception& e) {
        throw gkdmd::InputError("'" + path.string() + "' is not valid JSON: " + e.what());
    }
}

void merge_config(const Common& common, const Registry& reg) {
    if (!common.config.empty()) {
        reg.apply(read_json_file(common.config));
    }
}

void require_out(const Common& common) {
    if (common.out.empty()) {
        throw gkdmd::InputError("an output directory is required (-o)");
    }
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw gkdmd::IoError("cannot create directory '" + dir.string() + "': " + ec.message());
    }
}

void write_manifest(const fs::path& dir, const std::string& command, const Registry& reg, const json& seeds) {
    json manifest = {{"tool", "gkdmd"}, {"version", kToolVersion}, {"command", command}, {"config", reg.echo()},
                     {"seeds", seeds}};
    gkdmd::report::write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

// ---------------------------------------------------------------- generate

struct GenerateArgs {
    Common common;
    std::string system = "koopman-quadratic";
    int n = 10;
    int t = 10;
    double lambda = 0.9;
    double mu = 0.5;
    double sigma = 10.0;
    double rho = 28.0;
    double beta = 8.0 / 3.0;
    double dt = 0.01;
    int steps_per_sample = 1;
    int p = 64;
    std::uint64_t embed_seed = 1;
};

void run_generate(GenerateArgs& a) {
    require_out(a.common);
    if (a.n < 1) {
        throw gkdmd::InputError("--n must be at least 1");
    }
    if (a.t < 2) {
        throw gkdmd::InputError("--t must be at least 2 (a trajectory needs two states)");
    }
    gkdmd::bench::SystemConfig system;
    if (a.system == "koopman-quadratic") {
        system.system = gkdmd::bench::KoopmanQuadraticSystem{a.lambda, a.mu};
    } else if (a.system == "lorenz-embedded") {
        if (a.dt <= 0.0 || a.steps_per_sample < 1 || a.p < 3) {
            throw gkdmd::InputError("lorenz-embedded needs --dt > 0, --steps-per-sample >= 1 and --p >= 3");
        }
        gkdmd::bench::LorenzEmbeddedSystem s;
        s.lorenz = {a.sigma, a.rho, a.beta, a.dt, a.steps_per_sample};
        s.p = a.p;
        s.embed_seed = a.embed_seed;
        system.system = s;
    } else {
        throw gkdmd::InputError("unknown system '" + a.system + "' (expected koopman-quadratic or lorenz-embedded)");
    }
    const auto cube = gkdmd::bench::Hypercube::default_for(system);
    const auto data = gkdmd::bench::make_dataset(system, a.n, a.t, cube, a.common.seed);
    const fs::path dir = a.common.out;
    gkdmd::report::write_dataset(dir, data);
    std::cout << "wrote " << data.train.size() << " training and " << data.test.size()
              << " test trajectories to " << dir.string() << "\n";
}

// --------------------------------------------------------------------- fit

struct FitArgs {
    Common common;
    std::string data;
    std::string kernel = "gaussian:sigma=10";
    int k = 10;
    double tol = gkdmd::kDefaultTolRel;
};

void run_fit(FitArgs& a) {
    require_out(a.common);
    if (a.data.empty()) {
        throw gkdmd::InputError("--data is required");
    }
    if (a.k < 1) {
        throw gkdmd::InputError("--k must be at least 1");
    }
    if (!(a.tol > 0.0 && a.tol < 1.0)) {
        throw gkdmd::InputError("--tol must lie in (0, 1)");
    }
    const auto kernel = gkdmd::KernelSpec::parse(a.kernel);
    const auto data = gkdmd::report::read_dataset(a.data);
    const auto pairs = data.pairs();
    if (a.k > pairs.size()) {
        throw gkdmd::InputError("--k " + std::to_string(a.k) + " exceeds the number of snapshot pairs m = " +
                                std::to_string(pairs.size()));
    }
    gkdmd::FitOptions opts;
    opts.tol_rel = a.tol;
    const auto model = gkdmd::fit(pairs, kernel, a.k, opts);
    const fs::path dir = a.common.out;
    ensure_dir(dir);
    gkdmd::save(model, dir / "model.json");

    std::cout << "rank_A " << model.rank_a << "\n";
    std::cout << "rank_Z " << model.rank_z << "\n";
    std::cout << "effective_k " << model.k << "\n";
    std::cout << "top_abs_lambda";
    for (Eigen::Index i = 0; i < std::min<Eigen::Index>(model.k, 10); ++i) {
        std::cout << ' ' << gkdmd::report::format_double(std::abs(model.eig.lambdas(i)));
    }
    std::cout << "\n";
}

// ----------------------------------------------------------------- predict

struct PredictArgs {
    Common common;
    std::string model;
    std::string theta;
    long long t = 2;
    bool path = false;
    int max_iters = 500;
    double grad_tol = 1e-8;
    int memory = 10;
    int restarts = 3;
};

Eigen::VectorXd parse_theta(const std::string& text) {
    if (fs::is_regular_file(text)) {
        const Eigen::MatrixXd states = gkdmd::report::read_trajectory_csv(text);
        if (states.cols() < 1) {
            throw gkdmd::InputError("'" + text + "' holds no data row");
        }
        return states.col(0);
    }
    std::vector<double> values;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        try {
            std::size_t used = 0;
            values.push_back(std::stod(cell, &used));
            if (cell.find_first_not_of(" \t", used) != std::string::npos) {
                throw std::invalid_argument(cell);
            }
        } catch (const std::exception&) {
            throw gkdmd::InputError("--theta: '" + cell + "' is not a number (expected a file or comma list)");
        }
    }
    if (values.empty()) {
        throw gkdmd::InputError("--theta is empty");
    }
    return Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

void run_predict(PredictArgs& a) {
    if (a.model.empty() || a.theta.empty()) {
        throw gkdmd::InputError("--model and --theta are required");
    }
    if (a.t < 2) {
        throw gkdmd::InputError("--t must be at least 2");
    }
    gkdmd::PreimageConfig cfg{a.max_iters, a.grad_tol, a.memory, a.restarts};
    cfg.validate();
    const auto model = gkdmd::load(a.model);
    const Eigen::VectorXd theta = parse_theta(a.theta);
    if (theta.size() != model.dim()) {
        throw gkdmd::InputError("theta has " + std::to_string(theta.size()) + " components, the model expects p = " +
                                std::to_string(model.dim()));
    }
    std::vector<std::pair<long long, Eigen::VectorXd>> rows;
    if (a.path) {
        const auto path = gkdmd::predict_path(model, theta, a.t, cfg);
        for (std::size_t i = 0; i < path.size(); ++i) {
            rows.emplace_back(static_cast<long long>(i) + 2, path[i]);
        }
    } else {
        rows.emplace_back(a.t, gkdmd::predict(model, theta, a.t, cfg));
    }
    std::ostringstream csv;
    csv << 't';
    for (Eigen::Index i = 0; i < model.dim(); ++i) {
        csv << ",x" << i + 1;
    }
    csv << '\n';
    for (const auto& [t, x] : rows) {
        csv << t;
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            csv << ',' << gkdmd::report::format_double(x(i));
        }
        csv << '\n';
    }
    if (a.common.out.empty()) {
        std::cout << csv.str();
    } else {
        const fs::path dir = a.common.out;
        ensure_dir(dir);
        gkdmd::report::write_text(dir / "prediction.csv", csv.str());
    }
}

// ------------------------------------------------------------------- bench

struct BenchArgs {
    Common common;
    std::string data;
    std::string methods = "gkdmd,kdmd";
    std::string kernels = "gaussian:sigma=10";
    std::string k_list = "1-10";
    double tol = gkdmd::kDefaultTolRel;
    bool error_maps = false;
    bool no_timings = false;
    int max_iters = 500;
    double grad_tol = 1e-8;
    int memory = 10;
    int restarts = 3;
};

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, sep)) {
        const auto b = item.find_first_not_of(" \t");
        const auto e = item.find_last_not_of(" \t");
        if (b != std::string::npos) {
            parts.push_back(item.substr(b, e - b + 1));
        }
    }
    return parts;
}

int parse_int(const std::string& s, const std::string& what) {
    try {
        std::size_t used = 0;
        const int v = std::stoi(s, &used);
        if (used != s.size()) {
            throw std::invalid_argument(s);
        }
        return v;
    } catch (const std::exception&) {
        throw gkdmd::InputError(what + ": '" + s + "' is not an integer");
    }
}

/// "1-10", "2,4,8" or a mix such as "1-3,7".
std::vector<int> parse_k_list(const std::string& text) {
    std::vector<int> ks;
    for (const auto& part : split(text, ',')) {
        const auto dash = part.find('-', 1);
        if (dash == std::string::npos) {
            ks.push_back(parse_int(part, "--k-list"));
        } else {
            const int lo = parse_int(part.substr(0, dash), "--k-list");
            const int hi = parse_int(part.substr(dash + 1), "--k-list");
            if (hi < lo) {
                throw gkdmd::InputError("--k-list: empty range '" + part + "'");
            }
            for (int k = lo; k <= hi; ++k) {
                ks.push_back(k);
            }
        }
    }
    if (ks.empty()) {
        throw gkdmd::InputError("--k-list is empty");
    }
    for (int k : ks) {
        if (k < 1) {
            throw gkdmd::InputError("--k-list entries must be at least 1");
        }
    }
    return ks;
}

int run_bench(BenchArgs& a) {
    require_out(a.common);
    if (a.data.empty()) {
        throw gkdmd::InputError("--data is required");
    }
    gkdmd::bench::BenchConfig cfg;
    cfg.k_list = parse_k_list(a.k_list);
    cfg.methods.clear();
    for (const auto& m : split(a.methods, ',')) {
        cfg.methods.push_back(gkdmd::bench::parse_method(m));
    }
    if (cfg.methods.empty()) {
        throw gkdmd::InputError("--methods is empty");
    }
    cfg.kernels.clear();
    for (const auto& k : split(a.kernels, ';')) {
        cfg.kernels.push_back(gkdmd::KernelSpec::parse(k));
    }
    if (cfg.kernels.empty()) {
        throw gkdmd::InputError("--kernels is empty");
    }
    if (!(a.tol > 0.0 && a.tol < 1.0)) {
        throw gkdmd::InputError("--tol must lie in (0, 1)");
    }
    if (a.common.jobs < 1) {
        throw gkdmd::InputError("--jobs must be at least 1");
    }
    cfg.tol_rel = a.tol;
    cfg.preimage = {a.max_iters, a.grad_tol, a.memory, a.restarts};
    cfg.preimage.validate();
    cfg.jobs = a.common.jobs;
    cfg.error_maps = a.error_maps;
    cfg.record_timings = !a.no_timings;

    const auto data = gkdmd::report::read_dataset(a.data);
    const auto report = gkdmd::bench::compare(data, cfg);

    const fs::path dir = a.common.out;
    ensure_dir(dir);
    std::ostringstream rows, per_traj;
    gkdmd::report::write_report_csv(rows, report);
    gkdmd::report::write_per_trajectory_csv(per_traj, report);
    gkdmd::report::write_text(dir / "report.csv", rows.str());
    gkdmd::report::write_text(dir / "per_trajectory.csv", per_traj.str());
    gkdmd::report::write_text(dir / "report.svg",
                              gkdmd::report::render_svg(report, "reconstruction error vs rank (" + data.system.id() + ")"));
    if (a.error_maps) {
        std::ostringstream maps;
        gkdmd::report::write_error_map_csv(maps, report);
        gkdmd::report::write_text(dir / "error_maps.csv", maps.str());
    }
    for (const auto& r : report.rows) {
        if (!r.error.empty()) {
            std::cerr << "cell " << r.method << " " << r.kernel << " k=" << r.k << " failed: " << r.error << "\n";
        }
    }
    if (!report.any_success()) {
        std::cerr << "error: every benchmark cell failed\n";
        return kExitRuntime;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Generalized kernel DMD: training, prediction and benchmarks"};
    app.set_version_flag("--version", kToolVersion);
    app.require_subcommand(1);

    GenerateArgs gen;
    auto* gen_cmd = app.add_subcommand("generate", "Simulate a training/test dataset");
    Registry gen_reg(gen_cmd);
    add_common(gen_cmd, gen_reg, gen.common);
    gen_reg.add("system", gen.system, "koopman-quadratic | lorenz-embedded");
    gen_reg.add("n", gen.n, "Number of trajectories N");
    gen_reg.add("t", gen.t, "Trajectory length T'");
    gen_reg.add("lambda", gen.lambda, "koopman-quadratic: first-coordinate rate");
    gen_reg.add("mu", gen.mu, "koopman-quadratic: second-coordinate rate");
    gen_reg.add("sigma", gen.sigma, "lorenz: sigma");
    gen_reg.add("rho", gen.rho, "lorenz: rho");
    gen_reg.add("beta", gen.beta, "lorenz: beta");
    gen_reg.add("dt", gen.dt, "lorenz: RK4 step");
    gen_reg.add("steps_per_sample", gen.steps_per_sample, "lorenz: RK4 steps between samples");
    gen_reg.add("p", gen.p, "lorenz: embedding dimension");
    gen_reg.add("embed_seed", gen.embed_seed, "lorenz: seed of the random embedding");

    FitArgs fit;
    auto* fit_cmd = app.add_subcommand("fit", "Fit a reduced model on a dataset");
    Registry fit_reg(fit_cmd);
    add_common(fit_cmd, fit_reg, fit.common);
    fit_reg.add("data", fit.data, "Dataset directory");
    fit_reg.add("kernel", fit.kernel, "gaussian:sigma=S | polynomial:degree=D,offset=C | linear");
    fit_reg.add("k", fit.k, "Rank of the operator");
    fit_reg.add("tol", fit.tol, "Relative rank tolerance");

    PredictArgs pred;
    auto* pred_cmd = app.add_subcommand("predict", "Predict x_T(theta) with a fitted model");
    Registry pred_reg(pred_cmd);
    add_common(pred_cmd, pred_reg, pred.common);
    pred_reg.add("model", pred.model, "Model file");
    pred_reg.add("theta", pred.theta, "Initial state: comma list or trajectory CSV (first row)");
    pred_reg.add("t", pred.t, "Horizon T >= 2");
    pred_reg.add_flag("path", pred.path, "Emit every t = 2..T");
    pred_reg.add("max_iters", pred.max_iters, "Preimage: iteration cap");
    pred_reg.add("grad_tol", pred.grad_tol, "Preimage: gradient tolerance");
    pred_reg.add("memory", pred.memory, "Preimage: L-BFGS memory");
    pred_reg.add("restarts", pred.restarts, "Preimage: number of starts");

    BenchArgs bench;
    auto* bench_cmd = app.add_subcommand("bench", "Sweep methods, kernels and ranks");
    Registry bench_reg(bench_cmd);
    add_common(bench_cmd, bench_reg, bench.common);
    bench_reg.add("data", bench.data, "Dataset directory");
    bench_reg.add("methods", bench.methods, "Comma list of gkdmd, kdmd");
    bench_reg.add("kernels", bench.kernels, "';'-separated kernel specs");
    bench_reg.add("k_list", bench.k_list, "Ranks, e.g. 1-10 or 2,4,8");
    bench_reg.add("tol", bench.tol, "Relative rank tolerance");
    bench_reg.add_flag("error_maps", bench.error_maps, "Also write per-component one-step errors");
    bench_reg.add_flag("no_timings", bench.no_timings, "Write zero timings (byte-stable reports)");
    bench_reg.add("max_iters", bench.max_iters, "Preimage: iteration cap");
    bench_reg.add("grad_tol", bench.grad_tol, "Preimage: gradient tolerance");
    bench_reg.add("memory", bench.memory, "Preimage: L-BFGS memory");
    bench_reg.add("restarts", bench.restarts, "Preimage: number of starts");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (gen_cmd->parsed()) {
            merge_config(gen.common, gen_reg);
            run_generate(gen);
            write_manifest(gen.common.out, "generate", gen_reg,
                           {{"dataset", gen.common.seed}, {"embed", gen.embed_seed}});
        } else if (fit_cmd->parsed()) {
            merge_config(fit.common, fit_reg);
            run_fit(fit);
            write_manifest(fit.common.out, "fit", fit_reg, {{"seed", fit.common.seed}});
        } else if (pred_cmd->parsed()) {
            merge_config(pred.common, pred_reg);
            run_predict(pred);
            if (!pred.common.out.empty()) {
                write_manifest(pred.common.out, "predict", pred_reg, {{"seed", pred.common.seed}});
            }
        } else if (bench_cmd->parsed()) {
            merge_config(bench.common, bench_reg);
            const int code = run_bench(bench);
            write_manifest(bench.common.out, "bench", bench_reg, {{"seed", bench.common.seed}});
            return code;
        }
    } catch (const gkdmd::InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return 0;
}
