#include "gkdmd/bench.hpp"

#include "gkdmd/errors.hpp"
#include "gkdmd/json_io.hpp"
#include "gkdmd/oracle.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <memory>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

namespace gkdmd::bench {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require_t_prime(int t_prime) {
    if (t_prime < 2) {
        throw InputError("trajectory length T' must be >= 2, got " + std::to_string(t_prime));
    }
}

Eigen::Vector3d lorenz_rhs(const LorenzParams& prm, const Eigen::Vector3d& s) {
    return {prm.sigma * (s(1) - s(0)), s(0) * (prm.rho - s(2)) - s(1), s(0) * s(1) - prm.beta * s(2)};
}

Eigen::Vector3d rk4_step(const LorenzParams& prm, const Eigen::Vector3d& s) {
    const double h = prm.dt;
    const Eigen::Vector3d k1 = lorenz_rhs(prm, s);
    const Eigen::Vector3d k2 = lorenz_rhs(prm, s + 0.5 * h * k1);
    const Eigen::Vector3d k3 = lorenz_rhs(prm, s + 0.5 * h * k2);
    const Eigen::Vector3d k4 = lorenz_rhs(prm, s + h * k3);
    return s + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

double get_number(const nlohmann::json& j, const char* key, double fallback) {
    if (!j.contains(key)) {
        return fallback;
    }
    if (!j[key].is_number()) {
        throw InputError(std::string("system parameter '") + key + "' must be a number");
    }
    return j[key].get<double>();
}

}  // namespace

Trajectory gen_koopman_quadratic(double lambda, double mu, const Eigen::Ref<const Eigen::VectorXd>& theta,
                                 int t_prime) {
    require_t_prime(t_prime);
    if (theta.size() != 2) {
        throw InputError("koopman-quadratic system has state dimension 2");
    }
    Trajectory traj;
    traj.system_id = "koopman-quadratic";
    traj.params = {{"lambda", lambda}, {"mu", mu}};
    traj.theta0 = theta;
    traj.states.resize(2, t_prime);
    traj.states.col(0) = theta;
    const double coupling = lambda * lambda - mu;
    for (int t = 1; t < t_prime; ++t) {
        const double x1 = traj.states(0, t - 1);
        const double x2 = traj.states(1, t - 1);
        traj.states(0, t) = lambda * x1;
        traj.states(1, t) = mu * x2 + coupling * x1 * x1;
    }
    traj.final_latent = traj.states.col(t_prime - 1);
    return traj;
}

Embedding Embedding::random(int p, std::uint64_t seed, double w_scale, double b_scale) {
    if (p < 3) {
        throw InputError("embedding dimension p must be >= 3");
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, w_scale);
    std::uniform_real_distribution<double> uniform(-b_scale, b_scale);
    Embedding e;
    e.W.resize(p, 3);
    e.b.resize(p);
    for (int i = 0; i < p; ++i) {
        for (int j = 0; j < 3; ++j) {
            e.W(i, j) = normal(rng);
        }
    }
    for (int i = 0; i < p; ++i) {
        e.b(i) = uniform(rng);
    }
    return e;
}

Embedding Embedding::none() {
    Embedding e;
    e.identity = true;
    return e;
}

Eigen::VectorXd Embedding::apply(const Eigen::Vector3d& z) const {
    if (identity) {
        return z;
    }
    return (W * z + b).array().tanh().matrix();
}

Trajectory gen_lorenz_embedded(const LorenzParams& params, const Eigen::Ref<const Eigen::VectorXd>& theta3,
                               int t_prime, const Embedding& embedding) {
    require_t_prime(t_prime);
    if (theta3.size() != 3) {
        throw InputError("Lorenz initial state must have 3 components");
    }
    if (!(params.dt > 0.0) || params.steps_per_sample < 1) {
        throw InputError("Lorenz integration needs dt > 0 and steps_per_sample >= 1");
    }
    Trajectory traj;
    traj.system_id = "lorenz-embedded";
    traj.params = {{"sigma", params.sigma}, {"rho", params.rho}, {"beta", params.beta}, {"dt", params.dt}};
    traj.theta0 = theta3;
    traj.states.resize(embedding.dim(), t_prime);
    Eigen::Vector3d s = theta3;
    for (int t = 0; t < t_prime; ++t) {
        if (t > 0) {
            for (int step = 0; step < params.steps_per_sample; ++step) {
                s = rk4_step(params, s);
            }
        }
        if (!s.allFinite()) {
            std::ostringstream os;
            os << "Lorenz integration blew up at sample " << t + 1;
            throw NumericError(os.str());
        }
        traj.states.col(t) = embedding.apply(s);
    }
    traj.final_latent = s;
    return traj;
}

Trajectory gen_lorenz_embedded(double sigma, double rho, double beta, const Eigen::Ref<const Eigen::VectorXd>& theta3,
                               int t_prime, int p, double dt, std::uint64_t embed_seed) {
    LorenzParams prm;
    prm.sigma = sigma;
    prm.rho = rho;
    prm.beta = beta;
    prm.dt = dt;
    return gen_lorenz_embedded(prm, theta3, t_prime, Embedding::random(p, embed_seed));
}

std::string SystemConfig::id() const {
    return std::visit(Overloaded{
                          [](const KoopmanQuadraticSystem&) { return std::string("koopman-quadratic"); },
                          [](const LorenzEmbeddedSystem&) { return std::string("lorenz-embedded"); },
                      },
                      system);
}

int SystemConfig::latent_dim() const {
    return std::holds_alternative<KoopmanQuadraticSystem>(system) ? 2 : 3;
}

int SystemConfig::state_dim() const {
    return std::visit(Overloaded{
                          [](const KoopmanQuadraticSystem&) { return 2; },
                          [](const LorenzEmbeddedSystem& s) { return s.p; },
                      },
                      system);
}

nlohmann::json SystemConfig::to_json() const {
    nlohmann::json j;
    j["system_id"] = id();
    std::visit(Overloaded{
                   [&](const KoopmanQuadraticSystem& s) {
                       j["params"] = {{"lambda", s.lambda}, {"mu", s.mu}};
                   },
                   [&](const LorenzEmbeddedSystem& s) {
                       j["params"] = {{"sigma", s.lorenz.sigma},
                                      {"rho", s.lorenz.rho},
                                      {"beta", s.lorenz.beta},
                                      {"dt", s.lorenz.dt},
                                      {"steps_per_sample", s.lorenz.steps_per_sample},
                                      {"p", s.p},
                                      {"w_scale", s.w_scale},
                                      {"b_scale", s.b_scale}};
                       j["embed_seed"] = s.embed_seed;
                   },
               },
               system);
    return j;
}

SystemConfig SystemConfig::from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("system_id") || !j["system_id"].is_string()) {
        throw InputError("system description needs a 'system_id'");
    }
    const auto id = j["system_id"].get<std::string>();
    const nlohmann::json params = j.value("params", nlohmann::json::object());
    SystemConfig cfg;
    if (id == "koopman-quadratic") {
        KoopmanQuadraticSystem s;
        s.lambda = get_number(params, "lambda", s.lambda);
        s.mu = get_number(params, "mu", s.mu);
        cfg.system = s;
    } else if (id == "lorenz-embedded") {
        LorenzEmbeddedSystem s;
        s.lorenz.sigma = get_number(params, "sigma", s.lorenz.sigma);
        s.lorenz.rho = get_number(params, "rho", s.lorenz.rho);
        s.lorenz.beta = get_number(params, "beta", s.lorenz.beta);
        s.lorenz.dt = get_number(params, "dt", s.lorenz.dt);
        s.lorenz.steps_per_sample = static_cast<int>(get_number(params, "steps_per_sample", s.lorenz.steps_per_sample));
        s.p = static_cast<int>(get_number(params, "p", s.p));
        s.w_scale = get_number(params, "w_scale", s.w_scale);
        s.b_scale = get_number(params, "b_scale", s.b_scale);
        if (j.contains("embed_seed")) {
            if (!j["embed_seed"].is_number_unsigned()) {
                throw InputError("'embed_seed' must be a non-negative integer");
            }
            s.embed_seed = j["embed_seed"].get<std::uint64_t>();
        }
        if (s.p < 3) {
            throw InputError("lorenz-embedded needs p >= 3");
        }
        cfg.system = s;
    } else {
        throw InputError("unknown system '" + id + "' (expected koopman-quadratic or lorenz-embedded)");
    }
    return cfg;
}

Hypercube Hypercube::default_for(const SystemConfig& system) {
    Hypercube cube;
    if (std::holds_alternative<KoopmanQuadraticSystem>(system.system)) {
        cube.lo = Eigen::Vector2d(-1.0, -1.0);
        cube.hi = Eigen::Vector2d(1.0, 1.0);
    } else {
        cube.lo = Eigen::Vector3d(-15.0, -20.0, 5.0);
        cube.hi = Eigen::Vector3d(15.0, 20.0, 40.0);
    }
    return cube;
}

Generator make_generator(const SystemConfig& system) {
    return std::visit(Overloaded{
                          [](const KoopmanQuadraticSystem& s) -> Generator {
                              return [s](const Eigen::VectorXd& latent0, int t_prime) {
                                  return gen_koopman_quadratic(s.lambda, s.mu, latent0, t_prime);
                              };
                          },
                          [](const LorenzEmbeddedSystem& s) -> Generator {
                              auto embedding = Embedding::random(s.p, s.embed_seed, s.w_scale, s.b_scale);
                              return [s, embedding](const Eigen::VectorXd& latent0, int t_prime) {
                                  return gen_lorenz_embedded(s.lorenz, latent0, t_prime, embedding);
                              };
                          },
                      },
                      system.system);
}

SnapshotPairs Dataset::pairs() const {
    std::vector<Eigen::MatrixXd> states;
    states.reserve(train.size());
    for (const auto& t : train) {
        states.push_back(t.states);
    }
    return SnapshotPairs::from_trajectories(states);
}

Dataset make_dataset(const SystemConfig& system, int n, int t_prime, const Hypercube& cube, std::uint64_t seed) {
    if (n < 1) {
        throw InputError("number of trajectories N must be >= 1");
    }
    require_t_prime(t_prime);
    const int dim = system.latent_dim();
    if (cube.lo.size() != dim || cube.hi.size() != dim) {
        throw InputError("hypercube dimension does not match the system (" + std::to_string(dim) + ")");
    }
    if (!(cube.lo.array() <= cube.hi.array()).all()) {
        throw InputError("hypercube bounds must satisfy lo <= hi");
    }

    Dataset data;
    data.system = system;
    data.cube = cube;
    data.seed = seed;
    data.n = n;
    data.t_prime = t_prime;
    const Generator gen = make_generator(system);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int i = 0; i < n; ++i) {
        Eigen::VectorXd theta(dim);
        for (int d = 0; d < dim; ++d) {
            theta(d) = cube.lo(d) + (cube.hi(d) - cube.lo(d)) * unit(rng);
        }
        data.train.push_back(gen(theta, t_prime));
        data.test.push_back(gen(data.train.back().final_latent, t_prime));
    }
    return data;
}

ErrorSummary reconstruction_error(const OneStepPredictor& predictor, const std::vector<Trajectory>& tests) {
    ErrorSummary out;
    double total = 0.0;
    for (std::size_t j = 0; j < tests.size(); ++j) {
        const auto& states = tests[j].states;
        for (Eigen::Index t = 0; t + 1 < states.cols(); ++t) {
            const double denom = states.col(t + 1).norm();
            if (!(denom > kMinDenominator)) {
                std::ostringstream os;
                os << "reconstruction error undefined: |x_{t+1}| = " << denom << " for trajectory " << j
                   << ", t = " << t + 1;
                throw MetricError(os.str());
            }
            const Eigen::VectorXd diff = predictor(states.col(t)) - states.col(t + 1);
            const double rel = diff.norm() / denom;
            total += rel * rel;
            out.points.push_back({static_cast<int>(j), static_cast<int>(t + 1), rel});
            if (t == 0) {
                out.first_step_error.push_back(diff);
            }
        }
    }
    out.eps_rec = std::sqrt(total);
    return out;
}

std::string to_string(Method m) { return m == Method::GkDmd ? "gkdmd" : "kdmd"; }

Method parse_method(const std::string& name) {
    if (name == "gkdmd") {
        return Method::GkDmd;
    }
    if (name == "kdmd") {
        return Method::Kdmd;
    }
    throw InputError("unknown method '" + name + "' (expected gkdmd or kdmd)");
}

bool BenchReport::any_success() const {
    for (const auto& r : rows) {
        if (r.error.empty()) {
            return true;
        }
    }
    return false;
}

namespace {

struct Cell {
    Method method;
    KernelSpec kernel;
    int k;
};

struct CellResult {
    BenchRow row;
    std::vector<TrajectoryError> per_trajectory;
    std::vector<ErrorMap> error_maps;
};

CellResult run_cell(const Dataset& data, const SnapshotPairs& pairs, const Cell& cell, const BenchConfig& cfg) {
    CellResult res;
    res.row.method = to_string(cell.method);
    res.row.kernel = cell.kernel.label();
    res.row.k = cell.k;

    OneStepPredictor predictor;
    const auto fit_start = std::chrono::steady_clock::now();
    if (cell.method == Method::GkDmd) {
        FitOptions opts;
        opts.tol_rel = cfg.tol_rel;
        auto model = std::make_shared<ReducedModel>(fit(pairs, cell.kernel, cell.k, opts));
        res.row.effective_k = model->k;
        predictor = [model, pre = cfg.preimage](const Eigen::VectorXd& x) { return predict(*model, x, 2, pre); };
    } else {
        auto model = std::make_shared<oracle::KdmdModel>(oracle::kdmd_fit(pairs, cell.kernel, cell.k, cfg.tol_rel));
        res.row.effective_k = model->k;
        predictor = [model](const Eigen::VectorXd& x) { return oracle::kdmd_predict(*model, x, 2); };
    }
    res.row.fit_seconds = seconds_since(fit_start);

    const auto predict_start = std::chrono::steady_clock::now();
    const ErrorSummary summary = reconstruction_error(predictor, data.test);
    res.row.predict_seconds = seconds_since(predict_start);
    res.row.eps_rec = summary.eps_rec;
    if (!cfg.record_timings) {
        res.row.fit_seconds = 0.0;
        res.row.predict_seconds = 0.0;
    }

    for (const auto& pt : summary.points) {
        res.per_trajectory.push_back({res.row.method, res.row.kernel, cell.k, pt.trajectory_index, pt.t, pt.rel_err});
    }
    if (cfg.error_maps) {
        for (std::size_t j = 0; j < summary.first_step_error.size(); ++j) {
            res.error_maps.push_back(
                {res.row.method, res.row.kernel, cell.k, static_cast<int>(j), summary.first_step_error[j]});
        }
    }
    return res;
}

}  // namespace

BenchReport compare(const Dataset& data, const BenchConfig& config) {
    if (config.methods.empty() || config.kernels.empty() || config.k_list.empty()) {
        throw InputError("benchmark grid is empty (methods, kernels and k list are required)");
    }
    config.preimage.validate();
    const SnapshotPairs pairs = data.pairs();
    for (int k : config.k_list) {
        if (k < 1 || k > pairs.size()) {
            throw InputError("k = " + std::to_string(k) + " outside [1, m = " + std::to_string(pairs.size()) + "]");
        }
    }

    std::vector<Cell> cells;
    for (Method method : config.methods) {
        for (const auto& kernel : config.kernels) {
            for (int k : config.k_list) {
                cells.push_back({method, kernel, k});
            }
        }
    }

    std::vector<CellResult> results(cells.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < cells.size(); i = next++) {
            try {
                results[i] = run_cell(data, pairs, cells[i], config);
            } catch (const std::exception& e) {
                CellResult failed;
                failed.row.method = to_string(cells[i].method);
                failed.row.kernel = cells[i].kernel.label();
                failed.row.k = cells[i].k;
                failed.row.eps_rec = std::numeric_limits<double>::quiet_NaN();
                failed.row.error = e.what();
                results[i] = std::move(failed);
            }
        }
    };
    const int jobs = std::max(1, std::min<int>(config.jobs, static_cast<int>(cells.size())));
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < jobs; ++t) {
            pool.emplace_back(worker);
        }
        for (auto& th : pool) {
            th.join();
        }
    }

    BenchReport report;
    for (auto& r : results) {
        report.rows.push_back(std::move(r.row));
        for (auto& p : r.per_trajectory) {
            report.per_trajectory.push_back(std::move(p));
        }
        for (auto& e : r.error_maps) {
            report.error_maps.push_back(std::move(e));
        }
    }
    return report;
}

}  // namespace gkdmd::bench
