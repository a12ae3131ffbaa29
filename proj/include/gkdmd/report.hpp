#pragma once

#include "gkdmd/bench.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>

// File formats of the benchmark tooling.
namespace gkdmd::report {

/// Shortest text that parses back to the same double ("nan" for NaN).
std::string format_double(double v);

/// RFC 4180 field quoting (only when the field needs it).
std::string csv_field(const std::string& s);

/// method,kernel,k,eps_rec,fit_seconds,predict_seconds
void write_report_csv(std::ostream& out, const bench::BenchReport& report);
/// method,kernel,k,trajectory_index,t,rel_err
void write_per_trajectory_csv(std::ostream& out, const bench::BenchReport& report);
/// method,kernel,k,trajectory_index,component,error (signed x2_pred - x2)
void write_error_map_csv(std::ostream& out, const bench::BenchReport& report);

/// Line chart of eps_rec against k on a log y axis, one polyline per
/// (method, kernel). Failed cells and non-positive values are skipped.
std::string render_svg(const bench::BenchReport& report, const std::string& title = "reconstruction error vs rank");

/// Trajectory CSV: header x1..xp, one row per time step.
void write_trajectory_csv(const std::filesystem::path& path, const Eigen::MatrixXd& states);
Eigen::MatrixXd read_trajectory_csv(const std::filesystem::path& path);

/// Dataset directory: train_NNN.csv, test_NNN.csv and a dataset.json sidecar
/// {system_id, params, seeds, N, T_prime, p, hypercube, train, test}.
void write_dataset(const std::filesystem::path& dir, const bench::Dataset& data);
bench::Dataset read_dataset(const std::filesystem::path& dir);

/// Whole-file helpers; throw IoError.
void write_text(const std::filesystem::path& path, const std::string& content);
std::string read_text(const std::filesystem::path& path);

}  // namespace gkdmd::report
