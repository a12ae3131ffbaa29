#include "gkdmd/json_io.hpp"

#include "gkdmd/errors.hpp"

namespace gkdmd::json_io {

namespace {

nlohmann::json from_complex(const std::complex<double>& z) { return nlohmann::json::array({z.real(), z.imag()}); }

double to_real(const nlohmann::json& j, const std::string& what) {
    if (!j.is_number()) {
        throw IoError(what + ": expected a number");
    }
    return j.get<double>();
}

std::complex<double> to_complex(const nlohmann::json& j, const std::string& what) {
    if (!j.is_array() || j.size() != 2) {
        throw IoError(what + ": expected a [re, im] pair");
    }
    return {to_real(j[0], what), to_real(j[1], what)};
}

template <class Matrix, class Convert>
Matrix parse_matrix(const nlohmann::json& j, const std::string& what, Convert convert) {
    if (!j.is_array()) {
        throw IoError(what + ": expected an array of rows");
    }
    const auto rows = static_cast<Eigen::Index>(j.size());
    if (rows == 0) {
        return Matrix(0, 0);
    }
    if (!j[0].is_array()) {
        throw IoError(what + ": expected an array of rows");
    }
    const auto cols = static_cast<Eigen::Index>(j[0].size());
    Matrix M(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto& row = j[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
            throw IoError(what + ": ragged matrix rows");
        }
        for (Eigen::Index c = 0; c < cols; ++c) {
            M(r, c) = convert(row[static_cast<std::size_t>(c)], what);
        }
    }
    return M;
}

template <class Vector, class Convert>
Vector parse_vector(const nlohmann::json& j, const std::string& what, Convert convert) {
    if (!j.is_array()) {
        throw IoError(what + ": expected an array");
    }
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        v(static_cast<Eigen::Index>(i)) = convert(j[i], what);
    }
    return v;
}

}  // namespace

nlohmann::json from_matrix(const Eigen::MatrixXd& M) {
    auto out = nlohmann::json::array();
    for (Eigen::Index r = 0; r < M.rows(); ++r) {
        auto row = nlohmann::json::array();
        for (Eigen::Index c = 0; c < M.cols(); ++c) {
            row.push_back(M(r, c));
        }
        out.push_back(std::move(row));
    }
    return out;
}

nlohmann::json from_matrix(const Eigen::MatrixXcd& M) {
    auto out = nlohmann::json::array();
    for (Eigen::Index r = 0; r < M.rows(); ++r) {
        auto row = nlohmann::json::array();
        for (Eigen::Index c = 0; c < M.cols(); ++c) {
            row.push_back(from_complex(M(r, c)));
        }
        out.push_back(std::move(row));
    }
    return out;
}

nlohmann::json from_vector(const Eigen::VectorXd& v) {
    auto out = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        out.push_back(v(i));
    }
    return out;
}

nlohmann::json from_vector(const Eigen::VectorXcd& v) {
    auto out = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        out.push_back(from_complex(v(i)));
    }
    return out;
}

Eigen::MatrixXd to_matrix(const nlohmann::json& j, const std::string& what) {
    return parse_matrix<Eigen::MatrixXd>(j, what, to_real);
}

Eigen::MatrixXcd to_cmatrix(const nlohmann::json& j, const std::string& what) {
    return parse_matrix<Eigen::MatrixXcd>(j, what, to_complex);
}

Eigen::VectorXd to_vector(const nlohmann::json& j, const std::string& what) {
    return parse_vector<Eigen::VectorXd>(j, what, to_real);
}

Eigen::VectorXcd to_cvector(const nlohmann::json& j, const std::string& what) {
    return parse_vector<Eigen::VectorXcd>(j, what, to_complex);
}

}  // namespace gkdmd::json_io
