#include "gkdmd/kernels.hpp"

#include "gkdmd/errors.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <map>
#include <sstream>

namespace gkdmd {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void check_same_dim(Eigen::Index a, Eigen::Index b, const char* what) {
    if (a != b || a < 1) {
        std::ostringstream os;
        os << what << ": dimension mismatch (" << a << " vs " << b << ")";
        throw InputError(os.str());
    }
}

std::string format_number(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

double parse_number(const std::string& key, const std::string& value) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(value, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != value.size() || value.empty()) {
        throw InputError("kernel parameter '" + key + "' is not a number: '" + value + "'");
    }
    return v;
}

}  // namespace

KernelSpec KernelSpec::gaussian(double sigma) {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
        throw InputError("gaussian kernel requires sigma > 0");
    }
    return KernelSpec(GaussianKernel{sigma});
}

KernelSpec KernelSpec::polynomial(int degree, double offset) {
    if (degree < 1) {
        throw InputError("polynomial kernel requires degree >= 1");
    }
    if (!(offset >= 0.0) || !std::isfinite(offset)) {
        throw InputError("polynomial kernel requires offset >= 0");
    }
    return KernelSpec(PolynomialKernel{degree, offset});
}

KernelSpec KernelSpec::linear() { return KernelSpec(LinearKernel{}); }

std::string KernelSpec::label() const {
    return std::visit(Overloaded{
                          [](const GaussianKernel& g) { return "gaussian:sigma=" + format_number(g.sigma); },
                          [](const PolynomialKernel& p) {
                              return "polynomial:degree=" + std::to_string(p.degree) +
                                     ",offset=" + format_number(p.offset);
                          },
                          [](const LinearKernel&) { return std::string("linear"); },
                      },
                      family_);
}

KernelSpec KernelSpec::parse(const std::string& text) {
    const auto colon = text.find(':');
    const std::string name = text.substr(0, colon);
    std::map<std::string, std::string> params;
    if (colon != std::string::npos) {
        std::istringstream rest(text.substr(colon + 1));
        std::string item;
        while (std::getline(rest, item, ',')) {
            const auto eq = item.find('=');
            if (eq == std::string::npos || eq == 0) {
                throw InputError("malformed kernel parameter '" + item + "' in '" + text + "'");
            }
            params[item.substr(0, eq)] = item.substr(eq + 1);
        }
    }
    auto take = [&](const std::string& key, double fallback) {
        auto it = params.find(key);
        if (it == params.end()) {
            return fallback;
        }
        const double v = parse_number(key, it->second);
        params.erase(it);
        return v;
    };

    KernelSpec spec;
    if (name == "gaussian") {
        spec = gaussian(take("sigma", 10.0));
    } else if (name == "polynomial") {
        const double degree = take("degree", 2.0);
        if (degree != std::floor(degree)) {
            throw InputError("polynomial degree must be an integer");
        }
        spec = polynomial(static_cast<int>(degree), take("offset", 1.0));
    } else if (name == "linear") {
        spec = linear();
    } else {
        throw InputError("unknown kernel family '" + name + "' (expected gaussian, polynomial or linear)");
    }
    if (!params.empty()) {
        throw InputError("unknown parameter '" + params.begin()->first + "' for kernel '" + name + "'");
    }
    return spec;
}

nlohmann::json KernelSpec::to_json() const {
    return std::visit(Overloaded{
                          [](const GaussianKernel& g) {
                              return nlohmann::json{{"family", "gaussian"}, {"sigma", g.sigma}};
                          },
                          [](const PolynomialKernel& p) {
                              return nlohmann::json{{"family", "polynomial"}, {"degree", p.degree}, {"offset", p.offset}};
                          },
                          [](const LinearKernel&) { return nlohmann::json{{"family", "linear"}}; },
                      },
                      family_);
}

KernelSpec KernelSpec::from_json(const nlohmann::json& j) {
    try {
        const auto family = j.at("family").get<std::string>();
        if (family == "gaussian") {
            return gaussian(j.at("sigma").get<double>());
        }
        if (family == "polynomial") {
            return polynomial(j.at("degree").get<int>(), j.value("offset", 1.0));
        }
        if (family == "linear") {
            return linear();
        }
        throw InputError("unknown kernel family '" + family + "'");
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("malformed kernel spec: ") + e.what());
    }
}

double eval(const KernelSpec& kernel, const Eigen::Ref<const Eigen::VectorXd>& y,
            const Eigen::Ref<const Eigen::VectorXd>& z) {
    check_same_dim(y.size(), z.size(), "kernel eval");
    return std::visit(Overloaded{
                          [&](const GaussianKernel& g) {
                              return std::exp(-(y - z).squaredNorm() / (2.0 * g.sigma * g.sigma));
                          },
                          [&](const PolynomialKernel& p) { return std::pow(p.offset + y.dot(z), p.degree); },
                          [&](const LinearKernel&) { return y.dot(z); },
                      },
                      kernel.family());
}

Eigen::VectorXd grad_z(const KernelSpec& kernel, const Eigen::Ref<const Eigen::VectorXd>& y,
                       const Eigen::Ref<const Eigen::VectorXd>& z) {
    check_same_dim(y.size(), z.size(), "kernel gradient");
    return std::visit(Overloaded{
                          [&](const GaussianKernel& g) -> Eigen::VectorXd {
                              const double s2 = g.sigma * g.sigma;
                              const double h = std::exp(-(y - z).squaredNorm() / (2.0 * s2));
                              return (h / s2) * (y - z);
                          },
                          [&](const PolynomialKernel& p) -> Eigen::VectorXd {
                              return (p.degree * std::pow(p.offset + y.dot(z), p.degree - 1)) * y;
                          },
                          [&](const LinearKernel&) -> Eigen::VectorXd { return y; },
                      },
                      kernel.family());
}

Eigen::VectorXd grad_diag(const KernelSpec& kernel, const Eigen::Ref<const Eigen::VectorXd>& z) {
    if (z.size() < 1) {
        throw InputError("kernel gradient: empty vector");
    }
    return std::visit(Overloaded{
                          [&](const GaussianKernel&) -> Eigen::VectorXd { return Eigen::VectorXd::Zero(z.size()); },
                          [&](const PolynomialKernel& p) -> Eigen::VectorXd {
                              return (2.0 * p.degree * std::pow(p.offset + z.squaredNorm(), p.degree - 1)) * z;
                          },
                          [&](const LinearKernel&) -> Eigen::VectorXd { return 2.0 * z; },
                      },
                      kernel.family());
}

Eigen::MatrixXd gram(const KernelSpec& kernel, const Eigen::Ref<const Eigen::MatrixXd>& U) {
    if (U.rows() < 1) {
        throw InputError("gram: empty row dimension");
    }
    const Eigen::Index n = U.cols();
    Eigen::MatrixXd G(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i <= j; ++i) {
            G(i, j) = eval(kernel, U.col(i), U.col(j));
            G(j, i) = G(i, j);
        }
    }
    return G;
}

Eigen::MatrixXd gram(const KernelSpec& kernel, const Eigen::Ref<const Eigen::MatrixXd>& U,
                     const Eigen::Ref<const Eigen::MatrixXd>& V) {
    if (U.rows() != V.rows() || U.rows() < 1) {
        std::ostringstream os;
        os << "gram: row dimension mismatch (" << U.rows() << " vs " << V.rows() << ")";
        throw InputError(os.str());
    }
    if (U.data() == V.data() && U.cols() == V.cols() && U.outerStride() == V.outerStride()) {
        return gram(kernel, U);
    }
    Eigen::MatrixXd G(U.cols(), V.cols());
    for (Eigen::Index j = 0; j < V.cols(); ++j) {
        for (Eigen::Index i = 0; i < U.cols(); ++i) {
            G(i, j) = eval(kernel, U.col(i), V.col(j));
        }
    }
    return G;
}

}  // namespace gkdmd
