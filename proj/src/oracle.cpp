#include "gkdmd/oracle.hpp"

#include "gkdmd/errors.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace gkdmd::oracle {

namespace {

double factorial(int n) {
    double f = 1.0;
    for (int i = 2; i <= n; ++i) {
        f *= i;
    }
    return f;
}

// Appends every non-decreasing index tuple of length `len` over [0, p).
void enumerate_tuples(int p, int len, int start, std::vector<int>& current, std::vector<std::vector<int>>& out) {
    if (static_cast<int>(current.size()) == len) {
        std::vector<int> exps(static_cast<std::size_t>(p), 0);
        for (int i : current) {
            ++exps[static_cast<std::size_t>(i)];
        }
        out.push_back(std::move(exps));
        return;
    }
    for (int i = start; i < p; ++i) {
        current.push_back(i);
        enumerate_tuples(p, len, i, current, out);
        current.pop_back();
    }
}

int rank_from_singular_values(const Eigen::VectorXd& s, double tol_rel) {
    if (s.size() == 0 || !(s(0) > 0.0)) {
        return 0;
    }
    int r = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        if (s(i) * s(i) > tol_rel * s(0) * s(0)) {
            ++r;
        }
    }
    return r;
}

Eigen::VectorXcd spectral_sort(const Eigen::VectorXcd& values) {
    std::vector<cplx> v(values.data(), values.data() + values.size());
    std::stable_sort(v.begin(), v.end(), [](const cplx& a, const cplx& b) {
        if (std::abs(a) != std::abs(b)) {
            return std::abs(a) > std::abs(b);
        }
        if (a.real() != b.real()) {
            return a.real() > b.real();
        }
        return a.imag() > b.imag();
    });
    return Eigen::Map<Eigen::VectorXcd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

FeatureMap FeatureMap::polynomial(int degree, double offset, int p) {
    if (degree < 1 || p < 1 || !(offset >= 0.0)) {
        throw InputError("polynomial feature map needs degree >= 1, p >= 1, offset >= 0");
    }
    FeatureMap fm;
    fm.p_ = p;
    for (int total = 0; total <= degree; ++total) {
        std::vector<int> current;
        enumerate_tuples(p, total, 0, current, fm.exponents_);
    }
    for (const auto& exps : fm.exponents_) {
        const int total = std::accumulate(exps.begin(), exps.end(), 0);
        const int a0 = degree - total;
        double denom = factorial(a0);
        for (int a : exps) {
            denom *= factorial(a);
        }
        fm.weights_.push_back(std::sqrt(factorial(degree) / denom * std::pow(offset, a0)));
    }
    return fm;
}

FeatureMap FeatureMap::linear(int p) {
    if (p < 1) {
        throw InputError("linear feature map needs p >= 1");
    }
    FeatureMap fm;
    fm.p_ = p;
    fm.linear_ = true;
    for (int i = 0; i < p; ++i) {
        std::vector<int> exps(static_cast<std::size_t>(p), 0);
        exps[static_cast<std::size_t>(i)] = 1;
        fm.exponents_.push_back(std::move(exps));
        fm.weights_.push_back(1.0);
    }
    return fm;
}

FeatureMap FeatureMap::for_kernel(const KernelSpec& kernel, int p) {
    if (const auto* poly = std::get_if<PolynomialKernel>(&kernel.family())) {
        return polynomial(poly->degree, poly->offset, p);
    }
    if (kernel.is<LinearKernel>()) {
        return linear(p);
    }
    throw InputError("kernel '" + kernel.label() + "' has no finite explicit feature map");
}

Eigen::VectorXd FeatureMap::apply(const Eigen::Ref<const Eigen::VectorXd>& z) const {
    if (z.size() != p_) {
        std::ostringstream os;
        os << "feature map expects dimension " << p_ << ", got " << z.size();
        throw InputError(os.str());
    }
    if (linear_) {
        return z;
    }
    Eigen::VectorXd out(feature_dim());
    for (std::size_t f = 0; f < exponents_.size(); ++f) {
        double v = weights_[f];
        for (int i = 0; i < p_; ++i) {
            for (int e = 0; e < exponents_[f][static_cast<std::size_t>(i)]; ++e) {
                v *= z(i);
            }
        }
        out(static_cast<Eigen::Index>(f)) = v;
    }
    return out;
}

Eigen::MatrixXd FeatureMap::apply_columns(const Eigen::Ref<const Eigen::MatrixXd>& Z) const {
    Eigen::MatrixXd out(feature_dim(), Z.cols());
    for (Eigen::Index j = 0; j < Z.cols(); ++j) {
        out.col(j) = apply(Z.col(j));
    }
    return out;
}

EdmdResult edmd_exact(const SnapshotPairs& data, const FeatureMap& fm, int k, double tol_rel) {
    data.validate();
    if (fm.feature_dim() > kMaxFeatureDim) {
        throw InputError("feature dimension " + std::to_string(fm.feature_dim()) + " is too large for dense algebra");
    }
    if (k < 1) {
        throw InputError("edmd_exact: k must be >= 1");
    }
    const Eigen::MatrixXd A = fm.apply_columns(data.X);
    const Eigen::MatrixXd B = fm.apply_columns(data.Y);

    EdmdResult res;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd_a(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    res.rank_a = rank_from_singular_values(svd_a.singularValues(), tol_rel);
    const auto Ua = svd_a.matrixU().leftCols(res.rank_a);
    const auto Va = svd_a.matrixV().leftCols(res.rank_a);
    const Eigen::VectorXd inv_s = svd_a.singularValues().head(res.rank_a).cwiseInverse();
    const Eigen::MatrixXd A_pinv = Va * inv_s.asDiagonal() * Ua.transpose();

    // Z = B P_{A*}, with P_{A*} the projector onto range(A^T).
    const Eigen::MatrixXd Z = B * (Va * Va.transpose());
    Eigen::JacobiSVD<Eigen::MatrixXd> svd_z(Z, Eigen::ComputeThinU);
    res.rank_z = rank_from_singular_values(svd_z.singularValues(), tol_rel);

    const Eigen::MatrixXd BAp = B * A_pinv;
    res.unconstrained_residual = (B - BAp * A).norm();
    res.residuals.resize(k);
    for (int j = 1; j <= k; ++j) {
        const int jj = std::min(j, res.rank_z);
        const auto Uj = svd_z.matrixU().leftCols(jj);
        const Eigen::MatrixXd op = Uj * (Uj.transpose() * BAp);
        res.residuals(j - 1) = (B - op * A).norm();
        if (j == k) {
            res.op = op;
        }
    }

    const int k_eff = std::min(k, res.rank_z);
    if (k_eff == 0) {
        res.eigvals.resize(0);
        return res;
    }
    Eigen::EigenSolver<Eigen::MatrixXd> es(res.op, false);
    if (es.info() != Eigen::Success) {
        throw NumericError("edmd_exact: eigensolver did not converge");
    }
    const Eigen::VectorXcd sorted = spectral_sort(es.eigenvalues());
    const double top = std::abs(sorted(0));
    Eigen::Index keep = 0;
    while (keep < k_eff && std::abs(sorted(keep)) > tol_rel * top) {
        ++keep;
    }
    res.eigvals = sorted.head(keep);
    return res;
}

Eigen::MatrixXd exact_dmd_matrix(const SnapshotPairs& data, double tol_rel) {
    data.validate();
    return data.Y * pinv(data.X, tol_rel);
}

KdmdModel kdmd_fit(const SnapshotPairs& data, const KernelSpec& kernel, int k, double tol_rel) {
    data.validate();
    const auto m = static_cast<int>(data.size());
    if (k < 1 || k > m) {
        throw InputError("kdmd: k must lie in [1, m]");
    }
    KdmdModel model;
    model.kernel = kernel;
    model.X = data.X;

    const Eigen::MatrixXd g_aa = gram(kernel, data.X);
    const Eigen::MatrixXd g_ba = gram(kernel, data.Y, data.X);
    const SymEig eig = sym_eig(g_aa, tol_rel);
    model.rank = eig.numerical_rank;
    model.rank_deficient = model.rank < m;
    model.k = std::min(k, model.rank);
    if (model.k == 0) {
        model.eigvals.resize(0);
        model.eigfun_coeffs.resize(m, 0);
        model.modes.resize(data.dim(), 0);
        return model;
    }

    const auto Q = eig.vectors.leftCols(model.rank);
    const Eigen::VectorXd s = eig.values.head(model.rank).cwiseSqrt();
    const Eigen::MatrixXd Q_sinv = Q * s.cwiseInverse().asDiagonal();
    const Eigen::MatrixXd K = Q_sinv.transpose() * g_ba * Q_sinv;

    const EigenPairs pairs = nonsym_eig(K, model.k);
    model.eigvals = pairs.values;
    model.eigfun_coeffs = Q_sinv.cast<cplx>() * pairs.vectors;
    const Eigen::MatrixXcd phi_x = (Q * s.asDiagonal()).cast<cplx>() * pairs.vectors;
    model.modes = (pinv(phi_x, tol_rel) * data.X.transpose().cast<cplx>()).transpose();
    return model;
}

Eigen::VectorXd kdmd_predict(const KdmdModel& model, const Eigen::Ref<const Eigen::VectorXd>& theta, long long T) {
    if (T < 2) {
        throw InputError("prediction horizon T must be >= 2");
    }
    if (theta.size() != model.X.rows()) {
        std::ostringstream os;
        os << "state has dimension " << theta.size() << ", model expects p = " << model.X.rows();
        throw InputError(os.str());
    }
    const Eigen::VectorXd a = gram(model.kernel, model.X, theta);
    const Eigen::VectorXcd phi = model.eigfun_coeffs.transpose() * a.cast<cplx>();
    Eigen::VectorXcd weighted(model.k);
    for (int j = 0; j < model.k; ++j) {
        weighted(j) = int_power(model.eigvals(j), T - 1) * phi(j);
    }
    return (model.modes * weighted).real();
}

}  // namespace gkdmd::oracle
