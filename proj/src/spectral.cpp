#include "gkdmd/spectral.hpp"

#include "gkdmd/errors.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <vector>

namespace gkdmd {

namespace {

bool spectral_before(const cplx& a, const cplx& b) {
    const double ma = std::abs(a);
    const double mb = std::abs(b);
    if (ma != mb) {
        return ma > mb;
    }
    if (a.real() != b.real()) {
        return a.real() > b.real();
    }
    return a.imag() > b.imag();
}

void fix_phase(Eigen::Ref<Eigen::VectorXcd> v) {
    const double n = v.norm();
    if (n == 0.0) {
        return;
    }
    v /= n;
    Eigen::Index imax = 0;
    v.cwiseAbs().maxCoeff(&imax);
    const cplx c = v(imax);
    v *= std::conj(c) / std::abs(c);
    v(imax) = cplx(v(imax).real(), 0.0);
}

template <class Matrix>
Matrix pinv_impl(const Matrix& A, double tol_rel) {
    using Scalar = typename Matrix::Scalar;
    if (A.size() == 0) {
        return Matrix::Zero(A.cols(), A.rows());
    }
    Eigen::JacobiSVD<Matrix> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& s = svd.singularValues();
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> inv = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(s.size());
    if (s.size() > 0 && s(0) > 0.0) {
        const double cut = std::sqrt(tol_rel) * s(0);
        for (Eigen::Index i = 0; i < s.size(); ++i) {
            if (s(i) > cut) {
                inv(i) = Scalar(1.0 / s(i));
            }
        }
    }
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().adjoint();
}

}  // namespace

SymEig sym_eig(const Eigen::Ref<const Eigen::MatrixXd>& S, double tol_rel) {
    if (S.rows() != S.cols()) {
        throw InputError("sym_eig: matrix is not square");
    }
    if (!(tol_rel > 0.0 && tol_rel < 1.0)) {
        throw InputError("sym_eig: tol_rel must lie in (0, 1)");
    }
    if (!S.allFinite()) {
        throw NumericError("sym_eig: non-finite entries");
    }
    const double scale = S.norm();
    if ((S - S.transpose()).norm() > 1e-8 * scale) {
        throw InputError("sym_eig: matrix is not symmetric");
    }

    SymEig out;
    const Eigen::Index m = S.rows();
    if (m == 0) {
        return out;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(S);
    if (solver.info() != Eigen::Success) {
        throw NumericError("sym_eig: eigensolver did not converge");
    }
    // Eigen returns ascending order.
    out.values = solver.eigenvalues().reverse();
    out.vectors = solver.eigenvectors().rowwise().reverse();

    const double top = std::max(out.values(0), 0.0);
    const double clamp = tol_rel * top;
    for (Eigen::Index i = 0; i < m; ++i) {
        if (out.values(i) < 0.0) {
            if (out.values(i) < -clamp) {
                std::ostringstream os;
                os << "sym_eig: matrix is not positive semi-definite (eigenvalue " << out.values(i)
                   << ", largest " << out.values(0) << ")";
                throw NumericError(os.str());
            }
            out.values(i) = 0.0;
        }
    }
    out.numerical_rank = 0;
    if (top > 0.0) {
        for (Eigen::Index i = 0; i < m; ++i) {
            if (out.values(i) > clamp) {
                ++out.numerical_rank;
            }
        }
    }
    return out;
}

Eigen::MatrixXd truncated_pinv_factor(const SymEig& eig, int k) {
    const auto m = static_cast<int>(eig.values.size());
    if (k < 1 || k > m) {
        throw InputError("truncated_pinv_factor: k must lie in [1, m]");
    }
    Eigen::VectorXd d = Eigen::VectorXd::Zero(m);
    const int keep = std::min(k, eig.numerical_rank);
    for (int i = 0; i < keep; ++i) {
        d(i) = 1.0 / std::sqrt(eig.values(i));
    }
    return d.asDiagonal() * eig.vectors.transpose();
}

EigenPairs nonsym_eig(const Eigen::Ref<const Eigen::MatrixXd>& M, int k) {
    if (M.rows() != M.cols()) {
        throw InputError("nonsym_eig: matrix is not square");
    }
    if (k < 0 || k > M.rows()) {
        throw InputError("nonsym_eig: k must lie in [0, m]");
    }
    if (!M.allFinite()) {
        throw NumericError("nonsym_eig: non-finite entries");
    }
    EigenPairs out;
    out.values.resize(k);
    out.vectors.resize(M.rows(), k);
    if (k == 0) {
        return out;
    }
    Eigen::EigenSolver<Eigen::MatrixXd> solver(M, true);
    if (solver.info() != Eigen::Success) {
        throw NumericError("nonsym_eig: eigensolver did not converge");
    }
    const Eigen::VectorXcd values = solver.eigenvalues();
    const Eigen::MatrixXcd vectors = solver.eigenvectors();

    std::vector<Eigen::Index> order(values.size());
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return spectral_before(values(a), values(b)); });

    for (int i = 0; i < k; ++i) {
        out.values(i) = values(order[i]);
        out.vectors.col(i) = vectors.col(order[i]);
        fix_phase(out.vectors.col(i));
    }
    return out;
}

EigenSystem pair_eigensystems(const EigenPairs& left, const EigenPairs& right, double tol_match) {
    const Eigen::Index k = left.values.size();
    if (right.values.size() != k || left.vectors.rows() != right.vectors.rows()) {
        throw InputError("pair_eigensystems: spectra have different sizes");
    }
    EigenSystem out;
    out.lambdas = left.values;
    out.xi = left.vectors;
    out.zeta.resize(right.vectors.rows(), k);

    std::vector<bool> used(static_cast<std::size_t>(k), false);
    for (Eigen::Index i = 0; i < k; ++i) {
        Eigen::Index best = -1;
        double best_dist = std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < k; ++j) {
            if (used[static_cast<std::size_t>(j)]) {
                continue;
            }
            const double d = std::abs(left.values(i) - right.values(j));
            if (d < best_dist) {
                best_dist = d;
                best = j;
            }
        }
        const double allowed = tol_match * std::max(1.0, std::abs(left.values(i)));
        if (best < 0 || !(best_dist <= allowed)) {
            std::ostringstream os;
            os << "eigenvalue mismatch between left and right reduced matrices: lambda_" << i << " = "
               << left.values(i) << " has nearest partner at distance " << best_dist << " (allowed " << allowed
               << ")";
            throw ModelError(os.str());
        }
        used[static_cast<std::size_t>(best)] = true;
        out.zeta.col(i) = right.vectors.col(best);
    }
    return out;
}

cplx int_power(cplx z, long long n) {
    if (n < 0) {
        throw InputError("int_power: negative exponent");
    }
    cplx result(1.0, 0.0);
    while (n > 0) {
        if (n & 1) {
            result *= z;
        }
        n >>= 1;
        if (n > 0) {
            z *= z;
        }
    }
    return result;
}

Eigen::MatrixXd pinv(const Eigen::Ref<const Eigen::MatrixXd>& A, double tol_rel) {
    return pinv_impl<Eigen::MatrixXd>(A, tol_rel);
}

Eigen::MatrixXcd pinv(const Eigen::Ref<const Eigen::MatrixXcd>& A, double tol_rel) {
    return pinv_impl<Eigen::MatrixXcd>(A, tol_rel);
}

}  // namespace gkdmd
