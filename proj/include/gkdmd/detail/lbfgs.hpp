#pragma once

#include "gkdmd/errors.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <deque>
#include <sstream>
#include <vector>

namespace gkdmd {

namespace detail {

inline void throw_non_finite(const Eigen::VectorXd& x, double fx, int iter) {
    std::ostringstream os;
    os << "non-finite objective or gradient at iteration " << iter << " (J = " << fx
       << ", |z|_inf = " << (x.size() ? x.cwiseAbs().maxCoeff() : 0.0) << ")";
    throw NumericError(os.str());
}

}  // namespace detail

template <class F>
LbfgsResult lbfgs_minimize(F&& f, Eigen::VectorXd x0, const PreimageConfig& cfg) {
    constexpr double kArmijo = 1e-4;
    constexpr int kMaxBacktracks = 60;

    LbfgsResult res;
    res.x = std::move(x0);
    Eigen::VectorXd grad(res.x.size());
    res.value = f(res.x, grad);
    if (!std::isfinite(res.value) || !grad.allFinite()) {
        detail::throw_non_finite(res.x, res.value, 0);
    }

    std::deque<Eigen::VectorXd> s_hist;
    std::deque<Eigen::VectorXd> y_hist;
    std::deque<double> rho_hist;
    Eigen::VectorXd x_new(res.x.size());
    Eigen::VectorXd g_new(res.x.size());

    for (res.iterations = 0; res.iterations < cfg.max_iters; ++res.iterations) {
        if (grad.lpNorm<Eigen::Infinity>() < cfg.grad_tol) {
            res.converged = true;
            return res;
        }

        // Two-loop recursion.
        Eigen::VectorXd q = grad;
        std::vector<double> alpha(s_hist.size());
        for (std::size_t i = s_hist.size(); i-- > 0;) {
            alpha[i] = rho_hist[i] * s_hist[i].dot(q);
            q -= alpha[i] * y_hist[i];
        }
        if (!s_hist.empty()) {
            q *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
        }
        for (std::size_t i = 0; i < s_hist.size(); ++i) {
            const double beta = rho_hist[i] * y_hist[i].dot(q);
            q += (alpha[i] - beta) * s_hist[i];
        }
        Eigen::VectorXd dir = -q;
        double slope = grad.dot(dir);
        if (!(slope < 0.0)) {
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
            dir = -grad;
            slope = -grad.squaredNorm();
        }

        double step = s_hist.empty() ? std::min(1.0, 1.0 / grad.norm()) : 1.0;
        bool accepted = false;
        double f_new = 0.0;
        for (int bt = 0; bt < kMaxBacktracks; ++bt) {
            x_new = res.x + step * dir;
            f_new = f(x_new, g_new);
            if (std::isfinite(f_new) && g_new.allFinite() && f_new <= res.value + kArmijo * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            // No decrease representable along the search direction.
            return res;
        }

        Eigen::VectorXd s = x_new - res.x;
        Eigen::VectorXd y = g_new - grad;
        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            if (static_cast<int>(s_hist.size()) == cfg.memory) {
                s_hist.pop_front();
                y_hist.pop_front();
                rho_hist.pop_front();
            }
            s_hist.push_back(std::move(s));
            y_hist.push_back(std::move(y));
            rho_hist.push_back(1.0 / sy);
        }
        res.x = x_new;
        res.value = f_new;
        grad = g_new;
    }
    res.converged = grad.lpNorm<Eigen::Infinity>() < cfg.grad_tol;
    return res;
}

}  // namespace gkdmd
