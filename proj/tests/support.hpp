#pragma once

#include "gkdmd/bench.hpp"
#include "gkdmd/model.hpp"
#include "gkdmd/spectral.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <complex>
#include <functional>
#include <random>
#include <vector>

namespace testing {

inline Eigen::MatrixXd random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols, double scale = 1.0) {
    std::normal_distribution<double> dist(0.0, scale);
    Eigen::MatrixXd M(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
        for (Eigen::Index i = 0; i < rows; ++i) {
            M(i, j) = dist(rng);
        }
    }
    return M;
}

inline Eigen::VectorXd random_vector(std::mt19937_64& rng, Eigen::Index n, double scale = 1.0) {
    return random_matrix(rng, n, 1, scale);
}

inline double rel_err(const Eigen::VectorXd& got, const Eigen::VectorXd& want) {
    return (got - want).norm() / std::max(want.norm(), 1e-300);
}

/// Largest distance between two spectra matched one-to-one. Brute-force
/// optimal assignment for small sizes, greedy by distance otherwise.
inline double multiset_distance(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) {
    if (a.size() != b.size()) {
        return 1e300;
    }
    const auto n = static_cast<std::size_t>(a.size());
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) {
        perm[i] = i;
    }
    if (n <= 8) {
        double best = 1e300;
        do {
            double worst = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                worst = std::max(worst, std::abs(a(static_cast<Eigen::Index>(i)) -
                                                 b(static_cast<Eigen::Index>(perm[i]))));
            }
            best = std::min(best, worst);
        } while (std::next_permutation(perm.begin(), perm.end()));
        return best;
    }
    std::vector<bool> used(n, false);
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double d_best = 1e300;
        std::size_t j_best = 0;
        for (std::size_t j = 0; j < n; ++j) {
            const double d = std::abs(a(static_cast<Eigen::Index>(i)) - b(static_cast<Eigen::Index>(j)));
            if (!used[j] && d < d_best) {
                d_best = d;
                j_best = j;
            }
        }
        used[j_best] = true;
        worst = std::max(worst, d_best);
    }
    return worst;
}

/// Entries of `v` whose modulus exceeds `tol` times the largest modulus.
inline Eigen::VectorXcd nonzero_part(const Eigen::VectorXcd& v, double tol = 1e-8) {
    double top = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        top = std::max(top, std::abs(v(i)));
    }
    std::vector<std::complex<double>> kept;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (std::abs(v(i)) > tol * std::max(top, 1e-300)) {
            kept.push_back(v(i));
        }
    }
    return Eigen::Map<Eigen::VectorXcd>(kept.data(), static_cast<Eigen::Index>(kept.size()));
}

/// Central finite-difference gradient.
inline Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& z,
                                   double h = 1e-5) {
    Eigen::VectorXd g(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        Eigen::VectorXd zp = z, zm = z;
        zp(i) += h;
        zm(i) -= h;
        g(i) = (f(zp) - f(zm)) / (2.0 * h);
    }
    return g;
}

/// Snapshot pairs from N trajectories of the quadratic system with the
/// default hypercube.
inline gkdmd::SnapshotPairs quadratic_pairs(int n, int t_prime, std::uint64_t seed, double lambda = 0.9,
                                            double mu = 0.5) {
    gkdmd::bench::SystemConfig sys{gkdmd::bench::KoopmanQuadraticSystem{lambda, mu}};
    return gkdmd::bench::make_dataset(sys, n, t_prime, gkdmd::bench::Hypercube::default_for(sys), seed).pairs();
}

/// Pairs of a random linear map x -> A x from N random starts.
inline gkdmd::SnapshotPairs linear_map_pairs(std::mt19937_64& rng, const Eigen::MatrixXd& A, int n, int t_prime) {
    std::vector<Eigen::MatrixXd> trajs;
    for (int i = 0; i < n; ++i) {
        Eigen::MatrixXd states(A.rows(), t_prime);
        states.col(0) = random_vector(rng, A.rows());
        for (int t = 1; t < t_prime; ++t) {
            states.col(t) = A * states.col(t - 1);
        }
        trajs.push_back(states);
    }
    return gkdmd::SnapshotPairs::from_trajectories(trajs);
}

/// Random matrix with spectral radius `radius`.
inline Eigen::MatrixXd random_stable_matrix(std::mt19937_64& rng, Eigen::Index p, double radius = 0.95) {
    Eigen::MatrixXd A = random_matrix(rng, p, p);
    const double r = A.eigenvalues().cwiseAbs().maxCoeff();
    return A * (radius / r);
}

}  // namespace testing
