#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gkdmd/errors.hpp"
#include "gkdmd/oracle.hpp"
#include "gkdmd/predict.hpp"
#include "support.hpp"

#include <cmath>

using namespace gkdmd;
using testing::multiset_distance;
using testing::random_matrix;
using testing::random_vector;
using testing::rel_err;

namespace {

SnapshotPairs random_pairs(std::mt19937_64& rng, Eigen::Index p, Eigen::Index m) {
    SnapshotPairs d;
    d.X = random_matrix(rng, p, m);
    d.Y = random_matrix(rng, p, m);
    d.n_trajectories = static_cast<int>(m);
    d.t_prime = 2;
    return d;
}

}  // namespace

TEST_CASE("feature map: closed-form vectors") {
    const auto lin = oracle::FeatureMap::linear(3);
    const Eigen::Vector3d z(1.0, -2.0, 0.5);
    CHECK(lin.apply(z) == z);

    const auto quad = oracle::FeatureMap::polynomial(2, 1.0, 1);
    const Eigen::VectorXd phi2 = quad.apply(Eigen::VectorXd::Constant(1, 2.0));
    REQUIRE(phi2.size() == 3);
    CHECK(phi2(0) == doctest::Approx(1.0));
    CHECK(phi2(1) == doctest::Approx(std::sqrt(2.0) * 2.0));
    CHECK(phi2(2) == doctest::Approx(4.0));
    CHECK(phi2.dot(quad.apply(Eigen::VectorXd::Constant(1, 3.0))) == doctest::Approx(49.0).epsilon(1e-14));

    // Degree 2, p = 2: (c, sqrt(2c) z1, sqrt(2c) z2, z1^2, sqrt2 z1 z2, z2^2).
    const double c = 0.7;
    const auto q2 = oracle::FeatureMap::polynomial(2, c, 2);
    const Eigen::Vector2d w(0.3, -1.1);
    Eigen::VectorXd want(6);
    want << c, std::sqrt(2 * c) * w(0), std::sqrt(2 * c) * w(1), w(0) * w(0), std::sqrt(2.0) * w(0) * w(1),
        w(1) * w(1);
    CHECK((q2.apply(w) - want).norm() <= 1e-15);
    for (int p = 1; p <= 5; ++p) {
        CHECK(oracle::FeatureMap::polynomial(2, 1.0, p).feature_dim() == (p + 1) * (p + 2) / 2);
    }
    CHECK_THROWS_AS(oracle::FeatureMap::for_kernel(KernelSpec::gaussian(1.0), 2), InputError);
    CHECK_THROWS_AS(q2.apply(Eigen::Vector3d::Zero()), InputError);
}

TEST_CASE("feature map duality with kernel evaluations") {
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 50; ++trial) {
        const int p = 1 + trial % 4;
        const int degree = 1 + trial % 4;
        const double offset = 0.25 * (trial % 5);
        const auto k = KernelSpec::polynomial(degree, offset);
        const auto fm = oracle::FeatureMap::for_kernel(k, p);
        const Eigen::VectorXd y = random_vector(rng, p), z = random_vector(rng, p);
        const double want = eval(k, y, z);
        CHECK(std::abs(fm.apply(y).dot(fm.apply(z)) - want) <= 1e-12 * std::max(1.0, std::abs(want)));
    }
}

TEST_CASE("edmd_exact: linear features reproduce exact DMD") {
    std::mt19937_64 rng(2);
    const auto d = random_pairs(rng, 3, 9);
    const auto ref = oracle::edmd_exact(d, oracle::FeatureMap::linear(3), 9);
    const Eigen::MatrixXd dmd = d.Y * d.X.completeOrthogonalDecomposition().pseudoInverse();
    CHECK(multiset_distance(ref.eigvals, Eigen::VectorXcd(dmd.eigenvalues())) <= 1e-8);
    CHECK((oracle::exact_dmd_matrix(d) - dmd).norm() <= 1e-10 * dmd.norm());
}

TEST_CASE("edmd_exact: residuals nest and saturate") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 8; ++trial) {
        const Eigen::Index p = 1 + trial % 3;
        const auto d = random_pairs(rng, p, 10);
        const auto fm = oracle::FeatureMap::polynomial(2, 1.0, static_cast<int>(p));
        const auto ref = oracle::edmd_exact(d, fm, 10);
        for (Eigen::Index j = 1; j < ref.residuals.size(); ++j) {
            CHECK(ref.residuals(j) <= ref.residuals(j - 1) * (1.0 + 1e-12) + 1e-12);
        }
        CHECK(ref.residuals(ref.rank_z - 1) ==
              doctest::Approx(ref.unconstrained_residual).epsilon(1e-8).scale(1.0));

        // Independent unconstrained residual |B - B A^+ A|_F.
        const Eigen::MatrixXd A = fm.apply_columns(d.X), B = fm.apply_columns(d.Y);
        const Eigen::MatrixXd Ap = A.completeOrthogonalDecomposition().pseudoInverse();
        CHECK(ref.unconstrained_residual == doctest::Approx((B - B * Ap * A).norm()).epsilon(1e-8));
    }
}

TEST_CASE("edmd_exact: infeasible feature dimension") {
    std::mt19937_64 rng(4);
    const auto d = random_pairs(rng, 10, 3);
    CHECK_THROWS_AS(oracle::edmd_exact(d, oracle::FeatureMap::polynomial(6, 1.0, 10), 2), InputError);
}

TEST_CASE("kdmd: linear kernel reproduces exact DMD predictions") {
    std::mt19937_64 rng(5);
    const Eigen::MatrixXd A = testing::random_stable_matrix(rng, 4, 0.95);
    const auto d = testing::linear_map_pairs(rng, A, 3, 6);
    const auto model = oracle::kdmd_fit(d, KernelSpec::linear(), static_cast<int>(d.size()));
    CHECK(model.rank == 4);
    CHECK(model.rank_deficient);
    CHECK(multiset_distance(model.eigvals, Eigen::VectorXcd(A.eigenvalues())) <= 1e-8);
    const Eigen::MatrixXd dmd = d.Y * pinv(d.X);
    for (int trial = 0; trial < 5; ++trial) {
        const Eigen::VectorXd theta = random_vector(rng, 4);
        Eigen::VectorXd ref = theta;
        for (long long T = 2; T <= 20; ++T) {
            ref = dmd * ref;
            CHECK(rel_err(oracle::kdmd_predict(model, theta, T), ref) <= 1e-6);
        }
    }
}

TEST_CASE("kdmd: full-rank Gram matrix, k = m") {
    std::mt19937_64 rng(6);
    const Eigen::MatrixXd A = testing::random_stable_matrix(rng, 8, 0.9);
    const auto d = testing::linear_map_pairs(rng, A, 1, 6);  // m = 5 < p
    const auto model = oracle::kdmd_fit(d, KernelSpec::linear(), 5);
    CHECK_FALSE(model.rank_deficient);
    CHECK(model.k == 5);
    // The baseline only sees observables on span(X): it propagates with the
    // projected operator X X^+ Y X^+ rather than Y X^+.
    const Eigen::MatrixXd Xp = pinv(d.X);
    const Eigen::MatrixXd dmd = d.X * Xp * d.Y * Xp;
    const Eigen::VectorXd theta = d.X * random_vector(rng, 5);
    for (long long T : {2LL, 5LL, 20LL}) {
        Eigen::VectorXd ref = theta;
        for (long long t = 1; t < T; ++t) {
            ref = dmd * ref;
        }
        CHECK(rel_err(oracle::kdmd_predict(model, theta, T), ref) <= 1e-6);
    }
}

TEST_CASE("kdmd: modes are least-squares optimal") {
    std::mt19937_64 rng(7);
    const auto d = random_pairs(rng, 3, 12);
    const auto model = oracle::kdmd_fit(d, KernelSpec::gaussian(1.5), 5);
    const Eigen::MatrixXd g_aa = gram(model.kernel, d.X);
    const Eigen::MatrixXcd phi_x = g_aa.cast<cplx>() * model.eigfun_coeffs;  // phi_j(x_i)
    const Eigen::MatrixXcd Xt = d.X.transpose().cast<cplx>();
    const double base = (Xt - phi_x * model.modes.transpose()).norm();
    std::normal_distribution<double> n(0.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        Eigen::MatrixXcd dir(model.modes.rows(), model.modes.cols());
        for (Eigen::Index i = 0; i < dir.size(); ++i) {
            dir.data()[i] = cplx(n(rng), n(rng));
        }
        const Eigen::MatrixXcd moved = model.modes + 1e-3 * dir;
        CHECK((Xt - phi_x * moved.transpose()).norm() > base);
    }
}

TEST_CASE("kdmd: quadratic system spectrum and one-step accuracy") {
    const auto d = testing::quadratic_pairs(10, 10, 11);
    const auto model = oracle::kdmd_fit(d, KernelSpec::polynomial(2, 1.0), static_cast<int>(d.size()));
    for (double want : {0.9, 0.5, 0.81}) {
        CHECK((model.eigvals.array() - cplx(want)).abs().minCoeff() <= 1e-6);
    }
    for (Eigen::Index c = 0; c < d.X.cols(); c += 7) {
        const Eigen::VectorXd x = d.X.col(c);
        Eigen::Vector2d next(0.9 * x(0), 0.5 * x(1) + (0.81 - 0.5) * x(0) * x(0));
        CHECK(rel_err(oracle::kdmd_predict(model, x, 2), next) < 1e-2);
    }
}

TEST_CASE("kdmd: realness and degenerate data") {
    std::mt19937_64 rng(8);
    const auto d = random_pairs(rng, 3, 10);
    const auto model = oracle::kdmd_fit(d, KernelSpec::gaussian(1.0), 8);
    for (int trial = 0; trial < 10; ++trial) {
        const Eigen::VectorXd theta = random_vector(rng, 3);
        const Eigen::VectorXcd phi = model.eigfun_coeffs.transpose() * gram(model.kernel, d.X, theta).cast<cplx>();
        Eigen::VectorXcd w(model.k);
        for (int j = 0; j < model.k; ++j) {
            w(j) = std::pow(model.eigvals(j), 4) * phi(j);
        }
        const Eigen::VectorXcd x = model.modes * w;
        CHECK(x.imag().norm() <= 1e-8 * x.real().norm());
        CHECK((x.real() - oracle::kdmd_predict(model, theta, 5)).norm() <= 1e-12 * x.norm());
    }

    auto zero = d;
    zero.Y.setZero();
    const auto zm = oracle::kdmd_fit(zero, KernelSpec::linear(), 3);
    CHECK(zm.eigvals.cwiseAbs().maxCoeff() == 0.0);
    CHECK(oracle::kdmd_predict(zm, random_vector(rng, 3), 2).norm() == 0.0);
    CHECK_THROWS_AS(oracle::kdmd_predict(zm, random_vector(rng, 2), 2), InputError);
}

TEST_CASE("kdmd and GK-DMD agree when the baseline's assumptions hold") {
    std::mt19937_64 rng(9);
    const Eigen::MatrixXd A = testing::random_stable_matrix(rng, 5, 0.9);
    const auto d = testing::linear_map_pairs(rng, A, 1, 6);  // m = p = 5: full-rank Gram and data
    const int m = static_cast<int>(d.size());
    const auto kd = oracle::kdmd_fit(d, KernelSpec::linear(), m);
    const auto gk = fit(d, KernelSpec::linear(), m);
    for (int trial = 0; trial < 5; ++trial) {
        const Eigen::VectorXd theta = random_vector(rng, 5);
        for (long long T : {2LL, 5LL}) {
            CHECK(rel_err(predict(gk, theta, T), oracle::kdmd_predict(kd, theta, T)) <= 1e-4);
        }
    }
}

TEST_CASE("equivalence of the kernel fit and the explicit operator") {
    std::mt19937_64 rng(10);
    for (int trial = 0; trial < 10; ++trial) {
        const Eigen::Index p = 1 + trial % 3;
        const Eigen::Index m = 4 + trial % 8;
        const auto d = random_pairs(rng, p, m);
        const auto kernel = KernelSpec::polynomial(2, 1.0);
        const int k = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(m));
        const auto ref = oracle::edmd_exact(d, oracle::FeatureMap::for_kernel(kernel, static_cast<int>(p)), k);
        const auto model = fit(d, kernel, k);
        CHECK(multiset_distance(model.eig.lambdas, ref.eigvals) <= 1e-8);
    }
}
