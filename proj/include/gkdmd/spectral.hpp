#pragma once

#include <Eigen/Dense>

#include <complex>

namespace gkdmd {

using cplx = std::complex<double>;

inline constexpr double kDefaultTolRel = 1e-10;
inline constexpr double kDefaultTolMatch = 1e-6;

/// Eigen-decomposition of a symmetric positive semi-definite matrix with
/// eigenvalues in descending order. Small negative eigenvalues produced by
/// round-off are clamped to zero.
struct SymEig {
    Eigen::MatrixXd vectors;  // orthonormal columns
    Eigen::VectorXd values;   // descending, >= 0
    int numerical_rank = 0;   // #{values[i] > tol_rel * values[0]}
};

/// Top eigenpairs of a real non-symmetric matrix, ordered by the convention
/// documented on `nonsym_eig`.
struct EigenPairs {
    Eigen::VectorXcd values;
    Eigen::MatrixXcd vectors;  // unit 2-norm columns
};

/// Matched eigen-triples of the two reduced matrices of the low-rank
/// operator. `xi` holds left factors, `zeta` right factors.
struct EigenSystem {
    Eigen::VectorXcd lambdas;
    Eigen::MatrixXcd xi;
    Eigen::MatrixXcd zeta;
};

/// Throws InputError when S is not symmetric to 1e-8 (relative, Frobenius),
/// NumericError when the solver fails or an eigenvalue is below
/// -tol_rel * values[0] (input not PSD).
SymEig sym_eig(const Eigen::Ref<const Eigen::MatrixXd>& S, double tol_rel = kDefaultTolRel);

/// diag(d) V^T with d_i = 1/sqrt(values_i) for i < min(k, numerical_rank)
/// and zero otherwise. k = m gives Sigma^+ V^T; k < m the rank-k truncation.
Eigen::MatrixXd truncated_pinv_factor(const SymEig& eig, int k);

/// Top-k eigenpairs of a real square matrix.
///
/// Ordering: |lambda| descending, ties broken by descending real part and then
/// descending imaginary part, so conjugate pairs are adjacent with the
/// positive-imaginary member first. Each eigenvector is scaled to unit 2-norm
/// and its phase is fixed so the largest-magnitude component is real and
/// positive. These rules make serialized models reproducible.
EigenPairs nonsym_eig(const Eigen::Ref<const Eigen::MatrixXd>& M, int k);

/// Greedy nearest-neighbour matching of two spectra that should coincide.
/// Walks `left` in order and takes the closest unused entry of `right`.
/// Throws ModelError if a match is further than tol_match * max(1, |lambda|).
EigenSystem pair_eigensystems(const EigenPairs& left, const EigenPairs& right,
                              double tol_match = kDefaultTolMatch);

/// z^n by repeated squaring, n >= 0.
cplx int_power(cplx z, long long n);

/// Moore-Penrose pseudo-inverse keeping singular values with
/// sigma_i^2 > tol_rel * sigma_1^2 (the same cut as SymEig::numerical_rank).
Eigen::MatrixXd pinv(const Eigen::Ref<const Eigen::MatrixXd>& A, double tol_rel = kDefaultTolRel);
Eigen::MatrixXcd pinv(const Eigen::Ref<const Eigen::MatrixXcd>& A, double tol_rel = kDefaultTolRel);

}  // namespace gkdmd
