#pragma once

#include "gkdmd/kernels.hpp"
#include "gkdmd/spectral.hpp"

#include <Eigen/Dense>

#include <nlohmann/json_fwd.hpp>

#include <filesystem>

namespace gkdmd {

/// Training snapshots. Column c of Y is the successor of column c of X in its
/// source trajectory; with N trajectories of T' states, c = (T'-1)(i-1) + j.
struct SnapshotPairs {
    Eigen::MatrixXd X;  // p x m
    Eigen::MatrixXd Y;  // p x m
    int n_trajectories = 0;
    int t_prime = 0;

    /// Stacks consecutive-state pairs of each trajectory (p x T' blocks).
    static SnapshotPairs from_trajectories(const std::vector<Eigen::MatrixXd>& trajectories);

    Eigen::Index dim() const { return X.rows(); }
    Eigen::Index size() const { return X.cols(); }

    /// Throws InputError on shape mismatch or non-finite entries.
    void validate() const;
};

/// Kernel products between training snapshots. With A: w -> sum_j w_j Psi(x_j)
/// and B: w -> sum_j w_j Psi(y_j):
///   aa = A*A, bb = B*B, ba = B*A with ba(i, j) = h(y_i, x_j).
/// A*B is ba^T, so it is never assembled separately.
struct GramSet {
    Eigen::MatrixXd aa;
    Eigen::MatrixXd bb;
    Eigen::MatrixXd ba;
};

/// Left and right reduced matrices of the rank-k optimal operator. Their
/// non-zero spectra coincide with the one of the operator itself.
struct ReducedMatrices {
    Eigen::MatrixXd left;
    Eigen::MatrixXd right;
};

/// Fitted rank-k reduced model. Immutable after `fit`; safe to share between
/// threads for concurrent prediction.
///
/// Conventions. `eig.xi` column i is the conjugate of the right eigenvector of
/// ReducedMatrices::left for lambda_i, so that phi_i(theta) = xi_i^* R a(theta)
/// is the eigenfunction evolving with lambda_i. `eig.zeta` column i is the right
/// eigenvector of ReducedMatrices::right for lambda_i, rescaled so that
/// zeta_i^* E xi_i = 1.
struct ReducedModel {
    static constexpr int kFormatVersion = 1;

    KernelSpec kernel;
    int k = 0;  // effective rank (number of eigen-triples)
    double tol_rel = kDefaultTolRel;
    int rank_a = 0;
    int rank_z = 0;
    Eigen::MatrixXd X;
    Eigen::MatrixXd Y;
    Eigen::MatrixXd R;   // Sigma_A^+ V_A^T
    Eigen::MatrixXd Sk;  // diag(1/sigma^Z_1..k, 0..0) V_Z^T
    Eigen::MatrixXd E;   // Sk (B*A) R^T
    EigenSystem eig;

    Eigen::Index dim() const { return X.rows(); }
    Eigen::Index size() const { return X.cols(); }

    /// Shape and rank invariants; throws ModelError.
    void validate() const;

    nlohmann::json to_json() const;
    static ReducedModel from_json(const nlohmann::json& j);

    friend bool operator==(const ReducedModel& a, const ReducedModel& b);
};

GramSet build_grams(const SnapshotPairs& data, const KernelSpec& kernel);

/// Z*Z = P (B*B) P where P = V_r V_r^T projects onto range(A*) = range(A*A),
/// V_r being the first rank_A eigenvectors of A*A. This is the Gram matrix of
/// Z = B P_{A*} and keeps Z itself, which lives in feature space, implicit.
Eigen::MatrixXd project_gram_z(const GramSet& grams, const SymEig& eig_a);

/// left  = R (B*B) Sk^T Sk (B*A) R^T
/// right = Sk (B*B) R^T R (A*B) Sk^T
ReducedMatrices reduced_matrices(const GramSet& grams, const Eigen::Ref<const Eigen::MatrixXd>& R,
                                 const Eigen::Ref<const Eigen::MatrixXd>& Sk);

struct FitOptions {
    double tol_rel = kDefaultTolRel;
    double tol_match = kDefaultTolMatch;
};

/// Offline training of the rank-k model from kernel evaluations only.
///
/// The requested k is reduced to rank(Z) when it exceeds it, and eigenvalues
/// that vanish at tol_rel relative to the largest one are discarded (they do
/// not contribute for horizons T >= 2). Throws ModelError when the two reduced
/// spectra cannot be paired or an eigenpair is not biorthogonal (near-defective
/// operator).
ReducedModel fit(const SnapshotPairs& data, const KernelSpec& kernel, int k, const FitOptions& options = {});

/// JSON model file; see ReducedModel::to_json for the layout. Round trips are
/// bit-exact.
void save(const ReducedModel& model, const std::filesystem::path& path);
ReducedModel load(const std::filesystem::path& path);

}  // namespace gkdmd
