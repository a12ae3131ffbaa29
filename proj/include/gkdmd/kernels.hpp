#pragma once

#include <Eigen/Dense>

#include <nlohmann/json_fwd.hpp>

#include <string>
#include <variant>

namespace gkdmd {

/// Gaussian kernel exp(-|y - z|^2 / (2 sigma^2)).
struct GaussianKernel {
    double sigma = 10.0;
    friend bool operator==(const GaussianKernel&, const GaussianKernel&) = default;
};

/// Inhomogeneous polynomial kernel (offset + y^T z)^degree.
struct PolynomialKernel {
    int degree = 2;
    double offset = 1.0;
    friend bool operator==(const PolynomialKernel&, const PolynomialKernel&) = default;
};

/// Plain inner product y^T z.
struct LinearKernel {
    friend bool operator==(const LinearKernel&, const LinearKernel&) = default;
};

/// Kernel family plus parameters. This is the only bridge to the implicit
/// feature map: every inner product in the feature space goes through
/// `eval`, so nothing of the feature-space dimension is ever allocated.
///
/// New families are added by extending the variant and the visitors in
/// kernels.cpp (eval, grad_z, grad_diag, serialization).
class KernelSpec {
public:
    using Family = std::variant<GaussianKernel, PolynomialKernel, LinearKernel>;

    KernelSpec() : family_(LinearKernel{}) {}

    static KernelSpec gaussian(double sigma);
    static KernelSpec polynomial(int degree, double offset = 1.0);
    static KernelSpec linear();

    const Family& family() const { return family_; }

    template <class T>
    bool is() const {
        return std::holds_alternative<T>(family_);
    }

    /// Short label, e.g. "gaussian:sigma=10". Same grammar as `parse`.
    std::string label() const;

    /// Parses "gaussian:sigma=10", "polynomial:degree=2,offset=1", "linear".
    /// Missing parameters take their defaults.
    static KernelSpec parse(const std::string& text);

    nlohmann::json to_json() const;
    static KernelSpec from_json(const nlohmann::json& j);

    friend bool operator==(const KernelSpec&, const KernelSpec&) = default;

private:
    explicit KernelSpec(Family f) : family_(f) {}
    Family family_;
};

/// h(y, z).
double eval(const KernelSpec& kernel, const Eigen::Ref<const Eigen::VectorXd>& y,
            const Eigen::Ref<const Eigen::VectorXd>& z);

/// Gradient of z -> h(y, z).
Eigen::VectorXd grad_z(const KernelSpec& kernel, const Eigen::Ref<const Eigen::VectorXd>& y,
                       const Eigen::Ref<const Eigen::VectorXd>& z);

/// Gradient of z -> h(z, z). Zero for the Gaussian kernel.
Eigen::VectorXd grad_diag(const KernelSpec& kernel, const Eigen::Ref<const Eigen::VectorXd>& z);

/// G(i, j) = h(u_i, v_j) over the columns of U and V. When U and V are the
/// same object only the upper triangle is evaluated and mirrored.
Eigen::MatrixXd gram(const KernelSpec& kernel, const Eigen::Ref<const Eigen::MatrixXd>& U,
                     const Eigen::Ref<const Eigen::MatrixXd>& V);

/// Symmetric Gram matrix of the columns of U.
Eigen::MatrixXd gram(const KernelSpec& kernel, const Eigen::Ref<const Eigen::MatrixXd>& U);

}  // namespace gkdmd
