#pragma once

#include <Eigen/Dense>

#include <nlohmann/json.hpp>

#include <string>

// Eigen <-> JSON. Matrices are row-major nested arrays, complex numbers are
// [re, im] pairs. Doubles use nlohmann's shortest round-trip formatting, so
// write -> read is bit-exact for finite values.
namespace gkdmd::json_io {

nlohmann::json from_matrix(const Eigen::MatrixXd& M);
nlohmann::json from_matrix(const Eigen::MatrixXcd& M);
nlohmann::json from_vector(const Eigen::VectorXd& v);
nlohmann::json from_vector(const Eigen::VectorXcd& v);

// `what` names the field in error messages. Throws IoError.
Eigen::MatrixXd to_matrix(const nlohmann::json& j, const std::string& what);
Eigen::MatrixXcd to_cmatrix(const nlohmann::json& j, const std::string& what);
Eigen::VectorXd to_vector(const nlohmann::json& j, const std::string& what);
Eigen::VectorXcd to_cvector(const nlohmann::json& j, const std::string& what);

}  // namespace gkdmd::json_io
