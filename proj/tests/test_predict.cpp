#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gkdmd/errors.hpp"
#include "gkdmd/predict.hpp"
#include "support.hpp"

using namespace gkdmd;
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

/// Model whose spectrum has at least one complex-conjugate pair.
ReducedModel complex_model(std::mt19937_64& rng, const KernelSpec& kernel) {
    for (;;) {
        const auto d = random_pairs(rng, 3, 10);
        const auto model = fit(d, kernel, 6);
        for (Eigen::Index i = 0; i < model.k; ++i) {
            if (std::abs(model.eig.lambdas(i).imag()) > 1e-3) {
                return model;
            }
        }
    }
}

}  // namespace

TEST_CASE("PreimageConfig validation") {
    PreimageConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    for (int field = 0; field < 4; ++field) {
        PreimageConfig bad;
        if (field == 0) bad.max_iters = 0;
        if (field == 1) bad.grad_tol = 0.0;
        if (field == 2) bad.memory = 0;
        if (field == 3) bad.n_restarts = 0;
        CHECK_THROWS_AS(bad.validate(), InputError);
    }
}

TEST_CASE("eigenfunctions: linear kernel matches left eigenvectors of the DMD matrix") {
    std::mt19937_64 rng(1);
    const Eigen::MatrixXd A = testing::random_stable_matrix(rng, 3, 0.9);
    const auto d = testing::linear_map_pairs(rng, A, 4, 4);
    const auto model = fit(d, KernelSpec::linear(), static_cast<int>(d.size()));
    REQUIRE(model.k == 3);
    const Eigen::MatrixXd dmd = d.Y * pinv(d.X);
    Eigen::EigenSolver<Eigen::MatrixXd> es(dmd.transpose());
    for (Eigen::Index i = 0; i < model.k; ++i) {
        Eigen::Index j = 0;
        (es.eigenvalues().array() - model.eig.lambdas(i)).abs().minCoeff(&j);
        const Eigen::VectorXcd w = es.eigenvectors().col(j);  // w^T dmd = lambda w^T
        cplx ratio(0.0);
        for (Eigen::Index c = 0; c < d.X.cols(); ++c) {
            const Eigen::VectorXd theta = d.X.col(c);
            const cplx phi = eigenfunctions(model, theta)(i);
            const cplx ref = w.transpose() * theta.cast<cplx>();
            if (c == 0) {
                ratio = phi / ref;
            } else {
                CHECK(std::abs(phi - ratio * ref) <= 1e-8 * std::abs(phi));
            }
        }
    }
}

TEST_CASE("eigenfunctions evolve with their eigenvalue on linear dynamics") {
    std::mt19937_64 rng(2);
    const Eigen::MatrixXd A = testing::random_stable_matrix(rng, 4, 0.95);
    const auto d = testing::linear_map_pairs(rng, A, 5, 4);
    const auto model = fit(d, KernelSpec::linear(), 15);
    for (int trial = 0; trial < 10; ++trial) {
        const Eigen::VectorXd theta = random_vector(rng, 4);
        const Eigen::VectorXcd now = eigenfunctions(model, theta);
        const Eigen::VectorXcd next = eigenfunctions(model, A * theta);
        CHECK((next - model.eig.lambdas.cwiseProduct(now)).norm() <= 1e-8 * now.norm());
    }
}

TEST_CASE("eigenfunctions: degenerate and malformed inputs") {
    std::mt19937_64 rng(3);
    auto d = random_pairs(rng, 2, 4);
    d.Y.setZero();
    const auto zero = fit(d, KernelSpec::linear(), 3);
    CHECK(eigenfunctions(zero, Eigen::Vector2d(0.1, 0.2)).size() == 0);
    CHECK(predict(zero, Eigen::Vector2d(0.1, 0.2), 2).allFinite());
    CHECK_THROWS_AS(eigenfunctions(zero, Eigen::Vector3d::Zero()), InputError);
}

TEST_CASE("eigenfunction of the quadratic system's first rate is linear in theta_1") {
    const auto d = testing::quadratic_pairs(10, 10, 3);
    const auto model = fit(d, KernelSpec::polynomial(2, 1.0), static_cast<int>(d.size()));
    Eigen::Index idx = -1;
    for (Eigen::Index i = 0; i < model.k; ++i) {
        if (std::abs(model.eig.lambdas(i) - cplx(0.9)) < 1e-8) {
            idx = i;
        }
    }
    REQUIRE(idx >= 0);
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    cplx ratio(0.0);
    for (int trial = 0; trial < 20; ++trial) {
        Eigen::Vector2d theta(u(rng), u(rng));
        const cplx phi = eigenfunctions(model, theta)(idx);
        if (trial == 0) {
            ratio = phi / theta(0);
        } else {
            CHECK(std::abs(phi / theta(0) - ratio) <= 1e-6 * std::abs(ratio));
        }
    }
}

TEST_CASE("amplitudes: realness, horizon shift, decay") {
    std::mt19937_64 rng(5);
    const auto model = complex_model(rng, KernelSpec::gaussian(1.5));
    for (int trial = 0; trial < 100; ++trial) {
        const Eigen::VectorXd theta = random_vector(rng, 3);
        const Eigen::VectorXcd phi = eigenfunctions(model, theta);
        CHECK(amplitudes(model, phi, 2).imag_residual <= 1e-10);
    }
    const Eigen::VectorXd theta = random_vector(rng, 3);
    const Eigen::VectorXcd phi = eigenfunctions(model, theta);
    const auto g3 = amplitudes(model, phi, 3);
    const auto shifted = amplitudes(model, model.eig.lambdas.cwiseProduct(phi), 2);
    CHECK((g3.g - shifted.g).norm() <= 1e-12 * std::max(1.0, g3.g.norm()));

    CHECK_THROWS_AS(amplitudes(model, phi, 1), InputError);
}

TEST_CASE("amplitudes decay with a contracting spectrum") {
    std::mt19937_64 rng(14);
    Eigen::Matrix3d A;
    A << 0.8 * std::cos(0.4), -0.8 * std::sin(0.4), 0.0, 0.8 * std::sin(0.4), 0.8 * std::cos(0.4), 0.0, 0.0, 0.0, 0.5;
    const auto d = testing::linear_map_pairs(rng, A, 4, 4);
    const auto model = fit(d, KernelSpec::linear(), static_cast<int>(d.size()));
    REQUIRE(model.k == 3);
    const double lam_max = std::abs(model.eig.lambdas(0));
    CHECK(lam_max == doctest::Approx(0.8).epsilon(1e-8));
    const Eigen::VectorXcd phi = eigenfunctions(model, random_vector(rng, 3));
    const Eigen::MatrixXcd gain = model.Sk.transpose().cast<cplx>() * model.eig.zeta;
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(gain);
    const double bound = svd.singularValues()(0) * std::pow(lam_max, 999) * phi.norm();
    const auto g1000 = amplitudes(model, phi, 1000);
    CHECK(g1000.g.norm() <= bound * (1.0 + 1e-9));
    CHECK(g1000.g.norm() < 1e-90 * amplitudes(model, phi, 2).g.norm());
}

TEST_CASE("amplitudes: overflow is reported") {
    std::mt19937_64 rng(15);
    const auto d = testing::linear_map_pairs(rng, 2.0 * Eigen::Matrix2d::Identity(), 3, 3);
    const auto model = fit(d, KernelSpec::linear(), 2);
    const Eigen::VectorXcd phi = eigenfunctions(model, Eigen::Vector2d(1.0, 1.0));
    CHECK_THROWS_AS(amplitudes(model, phi, 5000), NumericError);
}

TEST_CASE("amplitudes: broken conjugate symmetry is reported") {
    std::mt19937_64 rng(6);
    const auto model = complex_model(rng, KernelSpec::gaussian(1.5));
    Eigen::VectorXcd phi = eigenfunctions(model, random_vector(rng, 3));
    phi *= cplx(0.0, 1.0);  // no longer conjugate-paired
    CHECK_THROWS_AS(amplitudes(model, phi, 2), ModelError);
}

TEST_CASE("preimage objective gradient matches central differences") {
    std::mt19937_64 rng(7);
    const KernelSpec kernels[] = {KernelSpec::gaussian(1.0), KernelSpec::polynomial(2, 1.0),
                                  KernelSpec::polynomial(3, 0.5), KernelSpec::linear()};
    for (int trial = 0; trial < 100; ++trial) {
        const auto& k = kernels[trial % 4];
        const Eigen::MatrixXd Y = random_matrix(rng, 3, 8);
        const Eigen::VectorXd g = random_vector(rng, 8, 0.3);
        const PreimageObjective J{k, Y, g};
        const Eigen::VectorXd z = random_vector(rng, 3);
        const Eigen::VectorXd fd = testing::fd_gradient([&](const Eigen::VectorXd& v) { return J.value(v); }, z);
        CHECK((J.gradient(z) - fd).norm() <= 1e-5 * std::max(1.0, fd.norm()));
    }
}

TEST_CASE("preimage: linear kernel closed form") {
    std::mt19937_64 rng(8);
    const auto d = random_pairs(rng, 3, 8);
    const auto model = fit(d, KernelSpec::linear(), 3);
    for (int trial = 0; trial < 10; ++trial) {
        AmplitudeVector amp;
        amp.g = random_vector(rng, 8);
        const Eigen::VectorXd z = preimage(model, amp, random_vector(rng, 3));
        CHECK(rel_err(z, model.Y * amp.g) <= 1e-8);
    }
}

TEST_CASE("preimage: Gaussian one-hot weights keep the snapshot") {
    std::mt19937_64 rng(9);
    const auto d = random_pairs(rng, 2, 6);
    const auto model = fit(d, KernelSpec::gaussian(1.0), 3);
    for (Eigen::Index j = 0; j < 6; ++j) {
        AmplitudeVector amp;
        amp.g = Eigen::VectorXd::Unit(6, j);
        const Eigen::VectorXd z = preimage(model, amp, model.Y.col(j));
        CHECK((z - model.Y.col(j)).norm() <= 1e-10);
    }
}

TEST_CASE("preimage never increases the objective") {
    std::mt19937_64 rng(10);
    for (const auto& k : {KernelSpec::gaussian(0.8), KernelSpec::polynomial(2, 1.0), KernelSpec::polynomial(3, 1.0)}) {
        const auto d = random_pairs(rng, 3, 10);
        const auto model = fit(d, k, 5);
        for (int trial = 0; trial < 20; ++trial) {
            AmplitudeVector amp;
            amp.g = random_vector(rng, 10, 0.2);
            const Eigen::VectorXd init = random_vector(rng, 3);
            const PreimageObjective J{model.kernel, model.Y, amp.g};
            const Eigen::VectorXd z = preimage(model, amp, init);
            CHECK(J.value(z) <= J.value(init));
        }
    }
}

TEST_CASE("lbfgs_minimize on the Rosenbrock function") {
    auto rosen = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
        const double a = 1.0 - x(0), b = x(1) - x(0) * x(0);
        g.resize(2);
        g(0) = -2.0 * a - 400.0 * x(0) * b;
        g(1) = 200.0 * b;
        return a * a + 100.0 * b * b;
    };
    PreimageConfig cfg;
    cfg.max_iters = 2000;
    const auto res = lbfgs_minimize(rosen, Eigen::Vector2d(-1.2, 1.0), cfg);
    CHECK(res.converged);
    CHECK((res.x - Eigen::Vector2d(1.0, 1.0)).norm() <= 1e-6);

    auto bad = [](const Eigen::VectorXd&, Eigen::VectorXd& g) {
        g = Eigen::VectorXd::Zero(1);
        return std::numeric_limits<double>::quiet_NaN();
    };
    CHECK_THROWS_AS(lbfgs_minimize(bad, Eigen::VectorXd::Zero(1), cfg), NumericError);
}

TEST_CASE("predict: identity dynamics reproduce the state") {
    std::mt19937_64 rng(11);
    SnapshotPairs d;
    d.X = random_matrix(rng, 3, 6);
    d.Y = d.X;
    d.n_trajectories = 6;
    d.t_prime = 2;
    const auto model = fit(d, KernelSpec::linear(), 6);
    for (int trial = 0; trial < 5; ++trial) {
        const Eigen::VectorXd theta = d.X * random_vector(rng, 6);
        for (long long T : {2LL, 7LL, 100LL}) {
            CHECK(rel_err(predict(model, theta, T), theta) <= 1e-6);
        }
    }
}

TEST_CASE("predict: linear kernel matches exact DMD powers") {
    std::mt19937_64 rng(12);
    const Eigen::MatrixXd A = testing::random_stable_matrix(rng, 4, 0.95);
    const auto d = testing::linear_map_pairs(rng, A, 3, 6);
    const auto model = fit(d, KernelSpec::linear(), static_cast<int>(d.size()));
    const Eigen::MatrixXd dmd = d.Y * pinv(d.X);
    for (int trial = 0; trial < 5; ++trial) {
        const Eigen::VectorXd theta = random_vector(rng, 4);
        Eigen::VectorXd ref = theta;
        for (long long T = 2; T <= 20; ++T) {
            ref = dmd * ref;
            if (T == 2 || T == 5 || T == 20) {
                CHECK(rel_err(predict(model, theta, T), ref) <= 1e-6);
            }
        }
    }
    CHECK_THROWS_AS(predict(model, Eigen::VectorXd::Zero(4), 1), InputError);
}

TEST_CASE("predict_path agrees with independent predictions") {
    std::mt19937_64 rng(13);
    const auto d = random_pairs(rng, 3, 10);
    const auto model = fit(d, KernelSpec::gaussian(2.0), 5);
    const Eigen::VectorXd theta = random_vector(rng, 3);
    const auto one = predict_path(model, theta, 2);
    REQUIRE(one.size() == 1);
    CHECK((one[0] - predict(model, theta, 2)).norm() <= 1e-10);
    const auto path = predict_path(model, theta, 8);
    REQUIRE(path.size() == 7);
    for (long long T = 2; T <= 8; ++T) {
        CHECK((path[static_cast<std::size_t>(T - 2)] - predict(model, theta, T)).norm() <= 1e-10);
    }
}
