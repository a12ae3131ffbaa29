#pragma once

#include "gkdmd/model.hpp"

#include <Eigen/Dense>

#include <vector>

namespace gkdmd {

/// Real weights g of the propagated lifted state, expressed as a combination
/// of the lifted successor snapshots: eta_T = sum_i g_i Psi(y_i).
struct AmplitudeVector {
    Eigen::VectorXd g;
    double imag_residual = 0.0;  // |Im| / |Re| of the discarded imaginary part
};

inline constexpr double kMaxImagResidual = 1e-6;

struct PreimageConfig {
    int max_iters = 500;
    double grad_tol = 1e-8;
    int memory = 10;
    int n_restarts = 3;

    void validate() const;
};

/// Value and gradient of J(z) = h(z,z) - 2 sum_i g_i h(y_i, z). For the
/// Gaussian kernel the constant h(z,z) = 1 is left out.
struct PreimageObjective {
    const KernelSpec& kernel;
    const Eigen::MatrixXd& Y;
    const Eigen::VectorXd& g;

    double value(const Eigen::VectorXd& z) const;
    Eigen::VectorXd gradient(const Eigen::VectorXd& z) const;
};

/// phi_i(theta) = xi_i^* R A*Psi(theta), i = 1..k.
Eigen::VectorXcd eigenfunctions(const ReducedModel& model, const Eigen::Ref<const Eigen::VectorXd>& theta);

/// g = Re(S_k^T Zeta diag(lambda^(T-1)) phi). The powers use repeated squaring,
/// so the cost does not depend on T. Throws ModelError when the imaginary part
/// exceeds kMaxImagResidual relative to the real part, NumericError when the
/// powers overflow.
AmplitudeVector amplitudes(const ReducedModel& model, const Eigen::Ref<const Eigen::VectorXcd>& phi, long long T);

/// Local minimizer of the preimage objective by L-BFGS with Armijo
/// backtracking (c = 1e-4). With n_restarts > 1 the solve is repeated from the
/// n_restarts - 1 snapshots y_i with the largest |g_i|, and the lowest
/// objective wins. Never returns a point with a larger objective than `init`.
Eigen::VectorXd preimage(const ReducedModel& model, const AmplitudeVector& g,
                         const Eigen::Ref<const Eigen::VectorXd>& init, const PreimageConfig& cfg = {});

/// Starting point used by `predict`: theta for a one-step prediction,
/// otherwise the snapshot with the heaviest weight.
Eigen::VectorXd default_init(const ReducedModel& model, const AmplitudeVector& g,
                             const Eigen::Ref<const Eigen::VectorXd>& theta, long long T);

/// x_T(theta) for T >= 2.
Eigen::VectorXd predict(const ReducedModel& model, const Eigen::Ref<const Eigen::VectorXd>& theta, long long T,
                        const PreimageConfig& cfg = {});

/// predict(theta, t) for t = 2..T_max, evaluating the eigenfunctions once.
std::vector<Eigen::VectorXd> predict_path(const ReducedModel& model, const Eigen::Ref<const Eigen::VectorXd>& theta,
                                          long long T_max, const PreimageConfig& cfg = {});

struct LbfgsResult {
    Eigen::VectorXd x;
    double value = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Plain L-BFGS on a smooth objective; exposed for tests. `f` returns the
/// value and writes the gradient. Stops when |grad|_inf < grad_tol, after
/// max_iters, or when the line search cannot decrease the objective.
template <class F>
LbfgsResult lbfgs_minimize(F&& f, Eigen::VectorXd x0, const PreimageConfig& cfg);

}  // namespace gkdmd

#include "gkdmd/detail/lbfgs.hpp"
