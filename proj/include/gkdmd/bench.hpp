#pragma once

#include "gkdmd/kernels.hpp"
#include "gkdmd/model.hpp"
#include "gkdmd/predict.hpp"

#include <Eigen/Dense>

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <variant>
#include <vector>

namespace gkdmd::bench {

/// One simulated trajectory, states as columns (p x T').
struct Trajectory {
    Eigen::MatrixXd states;
    std::string system_id;
    std::map<std::string, double> params;
    Eigen::VectorXd theta0;        // generator seed state
    Eigen::VectorXd final_latent;  // generator state at T', seeds the prolongation
};

/// x_t1 = lambda x_{t-1,1}
/// x_t2 = mu x_{t-1,2} + (lambda^2 - mu) x_{t-1,1}^2
///
/// span{x1, x2, x1^2} is invariant under this map with eigenvalues
/// lambda, mu and lambda^2. Closed form:
///   x_t2 = mu^(t-1) theta_2 + (lambda^(2(t-1)) - mu^(t-1)) theta_1^2.
Trajectory gen_koopman_quadratic(double lambda, double mu, const Eigen::Ref<const Eigen::VectorXd>& theta,
                                 int t_prime);

struct LorenzParams {
    double sigma = 10.0;
    double rho = 28.0;
    double beta = 8.0 / 3.0;
    double dt = 0.01;
    int steps_per_sample = 1;
};

/// z -> tanh(W z + b), or the identity when `identity` is set.
struct Embedding {
    Eigen::MatrixXd W;  // p x 3
    Eigen::VectorXd b;  // p
    bool identity = false;

    /// W ~ N(0, w_scale^2), b ~ U(-b_scale, b_scale), drawn from `seed`.
    static Embedding random(int p, std::uint64_t seed, double w_scale = 0.05, double b_scale = 0.5);
    static Embedding none();

    int dim() const { return identity ? 3 : static_cast<int>(W.rows()); }
    Eigen::VectorXd apply(const Eigen::Vector3d& z) const;
};

/// Lorenz-63 integrated with classical RK4, one sample every
/// `steps_per_sample` steps, each sample lifted through the embedding.
/// Throws NumericError if the state blows up.
Trajectory gen_lorenz_embedded(const LorenzParams& params, const Eigen::Ref<const Eigen::VectorXd>& theta3, int t_prime,
                               const Embedding& embedding);

/// Convenience overload drawing the embedding from `embed_seed`.
Trajectory gen_lorenz_embedded(double sigma, double rho, double beta, const Eigen::Ref<const Eigen::VectorXd>& theta3,
                               int t_prime, int p, double dt, std::uint64_t embed_seed);

struct KoopmanQuadraticSystem {
    double lambda = 0.9;
    double mu = 0.5;
};

struct LorenzEmbeddedSystem {
    LorenzParams lorenz;
    int p = 64;
    std::uint64_t embed_seed = 1;
    double w_scale = 0.05;
    double b_scale = 0.5;
};

/// Named generator plus its parameters, as recorded in dataset sidecars.
struct SystemConfig {
    std::variant<KoopmanQuadraticSystem, LorenzEmbeddedSystem> system;

    std::string id() const;  // "koopman-quadratic" | "lorenz-embedded"
    int latent_dim() const;
    int state_dim() const;

    nlohmann::json to_json() const;
    static SystemConfig from_json(const nlohmann::json& j);
};

struct Hypercube {
    Eigen::VectorXd lo;
    Eigen::VectorXd hi;

    /// [-1, 1]^2 for the quadratic system; x in [-15, 15], y in [-20, 20],
    /// z in [5, 40] for Lorenz.
    static Hypercube default_for(const SystemConfig& system);
};

using Generator = std::function<Trajectory(const Eigen::VectorXd& latent0, int t_prime)>;
Generator make_generator(const SystemConfig& system);

/// Training trajectories from N initial conditions drawn uniformly in the
/// hypercube, and test trajectories prolonging each of them: test j starts at
/// the last training state x_T'(theta_j) and has the same length.
struct Dataset {
    SystemConfig system;
    Hypercube cube;
    std::uint64_t seed = 0;
    int n = 0;
    int t_prime = 0;
    std::vector<Trajectory> train;
    std::vector<Trajectory> test;

    SnapshotPairs pairs() const;
};

Dataset make_dataset(const SystemConfig& system, int n, int t_prime, const Hypercube& cube, std::uint64_t seed);

struct PointError {
    int trajectory_index = 0;  // 0-based
    int t = 0;                 // 1-based time of the predictor input
    double rel_err = 0.0;
};

struct ErrorSummary {
    double eps_rec = 0.0;
    std::vector<PointError> points;
    std::vector<Eigen::VectorXd> first_step_error;  // x2_pred(theta_j) - x2(theta_j), per trajectory
};

using OneStepPredictor = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

inline constexpr double kMinDenominator = 1e-14;

/// eps_rec = sqrt(sum_j sum_t |x2_pred(x_t) - x_{t+1}|^2 / |x_{t+1}|^2), one-step
/// predictions from the true states. Throws MetricError if |x_{t+1}| is below
/// kMinDenominator.
ErrorSummary reconstruction_error(const OneStepPredictor& predictor, const std::vector<Trajectory>& tests);

enum class Method { GkDmd, Kdmd };
std::string to_string(Method m);
Method parse_method(const std::string& name);

struct BenchConfig {
    std::vector<Method> methods{Method::GkDmd, Method::Kdmd};
    std::vector<KernelSpec> kernels{KernelSpec::gaussian(10.0)};
    std::vector<int> k_list;
    double tol_rel = kDefaultTolRel;
    PreimageConfig preimage;
    int jobs = 1;
    bool error_maps = false;
    bool record_timings = true;  // false writes zero timings for byte-stable reports
};

struct BenchRow {
    std::string method;
    std::string kernel;
    int k = 0;
    double eps_rec = 0.0;
    double fit_seconds = 0.0;
    double predict_seconds = 0.0;
    int effective_k = 0;
    std::string error;  // non-empty when the cell failed
};

struct TrajectoryError {
    std::string method;
    std::string kernel;
    int k = 0;
    int trajectory_index = 0;
    int t = 0;
    double rel_err = 0.0;
};

struct ErrorMap {
    std::string method;
    std::string kernel;
    int k = 0;
    int trajectory_index = 0;
    Eigen::VectorXd error;
};

struct BenchReport {
    std::vector<BenchRow> rows;
    std::vector<TrajectoryError> per_trajectory;
    std::vector<ErrorMap> error_maps;

    bool any_success() const;
};

/// Full factorial sweep over methods x kernels x k_list. Cells run on up to
/// `jobs` threads; the report order is independent of scheduling. A failing
/// cell is recorded with a NaN eps_rec and its message, the sweep continues.
BenchReport compare(const Dataset& data, const BenchConfig& config);

}  // namespace gkdmd::bench
