#pragma once

#include "gkdmd/kernels.hpp"
#include "gkdmd/model.hpp"
#include "gkdmd/spectral.hpp"

#include <Eigen/Dense>

#include <vector>

// Reference machinery used to check the kernelized algorithm: an explicit
// finite-dimensional feature map for the polynomial and linear kernels, the
// rank-k optimal operator built directly in that feature space, exact DMD,
// and the kernel DMD baseline of Williams, Rowley and Kevrekidis.
namespace gkdmd::oracle {

/// Explicit feature map Phi with <Phi(y), Phi(z)> = h(y, z).
///
/// Features are weighted monomials z^a of total degree |a| <= degree,
/// weight sqrt(degree! / (a_0! a_1! ... a_p!) * offset^a_0) with
/// a_0 = degree - |a|. Order: constant, then degree 1 in index order, then each
/// higher degree in lexicographic order of (i <= j <= ...). For degree 2 this
/// is (c, sqrt(2c) z_i, z_i^2 and sqrt(2) z_i z_j for i < j interleaved
/// lexicographically). The linear kernel maps z to itself.
class FeatureMap {
public:
    static FeatureMap polynomial(int degree, double offset, int p);
    static FeatureMap linear(int p);
    /// Feature map matching `kernel`; throws InputError for the Gaussian kernel.
    static FeatureMap for_kernel(const KernelSpec& kernel, int p);

    int input_dim() const { return p_; }
    int feature_dim() const { return static_cast<int>(exponents_.size()); }
    const std::vector<std::vector<int>>& exponents() const { return exponents_; }

    Eigen::VectorXd apply(const Eigen::Ref<const Eigen::VectorXd>& z) const;
    /// Column-wise map of a p x m matrix.
    Eigen::MatrixXd apply_columns(const Eigen::Ref<const Eigen::MatrixXd>& Z) const;

private:
    int p_ = 0;
    bool linear_ = false;
    std::vector<std::vector<int>> exponents_;  // per feature, exponent of each z_i
    std::vector<double> weights_;
};

/// Largest feature dimension accepted by edmd_exact.
inline constexpr int kMaxFeatureDim = 2000;

struct EdmdResult {
    Eigen::MatrixXd op;             // D x D rank-k optimal operator
    Eigen::VectorXcd eigvals;       // non-zero eigenvalues, spectral order
    Eigen::VectorXd residuals;      // |B - A_j A|_F for j = 1..k
    double unconstrained_residual;  // |B - B A^+ A|_F
    int rank_a = 0;
    int rank_z = 0;
};

/// A_k = P_{Z^k} B A^+ with Z = B P_{A*}, formed explicitly in feature space
/// through SVDs. Rank cuts follow the sigma^2 > tol_rel * sigma_1^2 rule.
EdmdResult edmd_exact(const SnapshotPairs& data, const FeatureMap& fm, int k, double tol_rel = kDefaultTolRel);

/// Y X^+ (p x p).
Eigen::MatrixXd exact_dmd_matrix(const SnapshotPairs& data, double tol_rel = kDefaultTolRel);

/// Kernel DMD baseline.
struct KdmdModel {
    KernelSpec kernel;
    int k = 0;
    int rank = 0;                   // numerical rank of A*A used
    bool rank_deficient = false;    // A*A was truncated
    Eigen::VectorXcd eigvals;       // k
    Eigen::MatrixXcd eigfun_coeffs; // m x k: phi_j(theta) = gram(X, theta)^T c_j
    Eigen::MatrixXcd modes;         // p x k
    Eigen::MatrixXd X;
};

/// A*A = Q Sigma^2 Q^T, K = Sigma^+ Q^T (B*A) Q Sigma^+, top-k eigenpairs
/// (lambda_j, v_j) of K, eigenfunctions at the snapshots Q Sigma V and modes
/// from least squares against X^T. k is clamped to the rank of A*A.
KdmdModel kdmd_fit(const SnapshotPairs& data, const KernelSpec& kernel, int k, double tol_rel = kDefaultTolRel);

/// Re(sum_j lambda_j^(T-1) phi_j(theta) m_j).
Eigen::VectorXd kdmd_predict(const KdmdModel& model, const Eigen::Ref<const Eigen::VectorXd>& theta, long long T);

}  // namespace gkdmd::oracle
