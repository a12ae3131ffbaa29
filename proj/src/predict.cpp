#include "gkdmd/predict.hpp"

#include "gkdmd/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace gkdmd {

namespace {

void check_theta(const ReducedModel& model, Eigen::Index size) {
    if (size != model.dim()) {
        std::ostringstream os;
        os << "state has dimension " << size << ", model expects p = " << model.dim();
        throw InputError(os.str());
    }
}

// Indices of the n largest |g_i|, heaviest first; ties keep index order.
std::vector<Eigen::Index> heaviest(const Eigen::VectorXd& g, std::size_t n) {
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(g.size()));
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    n = std::min(n, idx.size());
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n), idx.end(),
                      [&](Eigen::Index a, Eigen::Index b) {
                          const double fa = std::abs(g(a));
                          const double fb = std::abs(g(b));
                          return fa != fb ? fa > fb : a < b;
                      });
    idx.resize(n);
    return idx;
}

}  // namespace

void PreimageConfig::validate() const {
    if (max_iters < 1 || !(grad_tol > 0.0) || memory < 1 || n_restarts < 1) {
        throw InputError("preimage settings must all be positive");
    }
}

double PreimageObjective::value(const Eigen::VectorXd& z) const {
    double j = kernel.is<GaussianKernel>() ? 0.0 : eval(kernel, z, z);
    for (Eigen::Index i = 0; i < Y.cols(); ++i) {
        if (g(i) != 0.0) {
            j -= 2.0 * g(i) * eval(kernel, Y.col(i), z);
        }
    }
    return j;
}

Eigen::VectorXd PreimageObjective::gradient(const Eigen::VectorXd& z) const {
    Eigen::VectorXd grad = grad_diag(kernel, z);
    for (Eigen::Index i = 0; i < Y.cols(); ++i) {
        if (g(i) != 0.0) {
            grad -= 2.0 * g(i) * grad_z(kernel, Y.col(i), z);
        }
    }
    return grad;
}

Eigen::VectorXcd eigenfunctions(const ReducedModel& model, const Eigen::Ref<const Eigen::VectorXd>& theta) {
    check_theta(model, theta.size());
    const Eigen::VectorXd a = gram(model.kernel, model.X, theta);
    const Eigen::VectorXd ra = model.R * a;
    return model.eig.xi.adjoint() * ra.cast<cplx>();
}

AmplitudeVector amplitudes(const ReducedModel& model, const Eigen::Ref<const Eigen::VectorXcd>& phi, long long T) {
    if (T < 2) {
        throw InputError("prediction horizon T must be >= 2");
    }
    if (phi.size() != model.k) {
        throw InputError("eigenfunction vector does not match the model rank");
    }
    Eigen::VectorXcd weighted(model.k);
    for (int i = 0; i < model.k; ++i) {
        weighted(i) = int_power(model.eig.lambdas(i), T - 1) * phi(i);
    }
    const Eigen::VectorXcd full = model.Sk.transpose().cast<cplx>() * (model.eig.zeta * weighted);
    if (!full.allFinite()) {
        throw NumericError("amplitudes overflow at horizon T = " + std::to_string(T));
    }

    AmplitudeVector out;
    out.g = full.real();
    const double re = out.g.norm();
    const double im = full.imag().norm();
    out.imag_residual = im / std::max(re, std::numeric_limits<double>::min());
    if (out.imag_residual > kMaxImagResidual) {
        std::ostringstream os;
        os << "amplitudes have a relative imaginary part of " << out.imag_residual
           << "; conjugate eigenpairs of the model do not cancel";
        throw ModelError(os.str());
    }
    return out;
}

Eigen::VectorXd preimage(const ReducedModel& model, const AmplitudeVector& g,
                         const Eigen::Ref<const Eigen::VectorXd>& init, const PreimageConfig& cfg) {
    cfg.validate();
    check_theta(model, init.size());
    if (g.g.size() != model.size()) {
        throw InputError("amplitude vector does not match the number of snapshots");
    }
    const PreimageObjective objective{model.kernel, model.Y, g.g};
    auto f = [&](const Eigen::VectorXd& z, Eigen::VectorXd& grad) {
        grad = objective.gradient(z);
        return objective.value(z);
    };

    std::vector<Eigen::VectorXd> starts{init};
    for (Eigen::Index i : heaviest(g.g, static_cast<std::size_t>(cfg.n_restarts - 1))) {
        starts.emplace_back(model.Y.col(i));
    }
    LbfgsResult best;
    bool have_best = false;
    for (const auto& start : starts) {
        LbfgsResult r = lbfgs_minimize(f, start, cfg);
        if (!have_best || r.value < best.value) {
            best = std::move(r);
            have_best = true;
        }
    }
    return best.x;
}

Eigen::VectorXd default_init(const ReducedModel& model, const AmplitudeVector& g,
                             const Eigen::Ref<const Eigen::VectorXd>& theta, long long T) {
    if (T == 2 || g.g.size() == 0) {
        return theta;
    }
    return model.Y.col(heaviest(g.g, 1).front());
}

Eigen::VectorXd predict(const ReducedModel& model, const Eigen::Ref<const Eigen::VectorXd>& theta, long long T,
                        const PreimageConfig& cfg) {
    const Eigen::VectorXcd phi = eigenfunctions(model, theta);
    const AmplitudeVector g = amplitudes(model, phi, T);
    return preimage(model, g, default_init(model, g, theta, T), cfg);
}

std::vector<Eigen::VectorXd> predict_path(const ReducedModel& model, const Eigen::Ref<const Eigen::VectorXd>& theta,
                                          long long T_max, const PreimageConfig& cfg) {
    if (T_max < 2) {
        throw InputError("prediction horizon T must be >= 2");
    }
    const Eigen::VectorXcd phi = eigenfunctions(model, theta);
    std::vector<Eigen::VectorXd> out;
    out.reserve(static_cast<std::size_t>(T_max - 1));
    for (long long t = 2; t <= T_max; ++t) {
        const AmplitudeVector g = amplitudes(model, phi, t);
        out.push_back(preimage(model, g, default_init(model, g, theta, t), cfg));
    }
    return out;
}

}  // namespace gkdmd
