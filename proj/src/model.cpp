#include "gkdmd/model.hpp"

#include "gkdmd/errors.hpp"
#include "gkdmd/json_io.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

namespace gkdmd {

SnapshotPairs SnapshotPairs::from_trajectories(const std::vector<Eigen::MatrixXd>& trajectories) {
    if (trajectories.empty()) {
        throw InputError("snapshot pairs need at least one trajectory");
    }
    const Eigen::Index p = trajectories.front().rows();
    const Eigen::Index t_prime = trajectories.front().cols();
    if (t_prime < 2) {
        throw InputError("trajectories need at least two states");
    }
    SnapshotPairs out;
    out.n_trajectories = static_cast<int>(trajectories.size());
    out.t_prime = static_cast<int>(t_prime);
    const Eigen::Index m = out.n_trajectories * (t_prime - 1);
    out.X.resize(p, m);
    out.Y.resize(p, m);
    Eigen::Index col = 0;
    for (const auto& traj : trajectories) {
        if (traj.rows() != p || traj.cols() != t_prime) {
            throw InputError("all trajectories must share the same shape");
        }
        out.X.middleCols(col, t_prime - 1) = traj.leftCols(t_prime - 1);
        out.Y.middleCols(col, t_prime - 1) = traj.rightCols(t_prime - 1);
        col += t_prime - 1;
    }
    return out;
}

void SnapshotPairs::validate() const {
    if (X.rows() < 1 || X.cols() < 1) {
        throw InputError("snapshot pairs are empty");
    }
    if (X.rows() != Y.rows() || X.cols() != Y.cols()) {
        std::ostringstream os;
        os << "snapshot matrices differ in shape: X is " << X.rows() << "x" << X.cols() << ", Y is " << Y.rows()
           << "x" << Y.cols();
        throw InputError(os.str());
    }
    if (!X.allFinite() || !Y.allFinite()) {
        throw InputError("snapshot matrices contain non-finite entries");
    }
    if (n_trajectories > 0 && t_prime > 0 && X.cols() != n_trajectories * (t_prime - 1)) {
        throw InputError("snapshot count does not match the N*(T'-1) layout");
    }
}

GramSet build_grams(const SnapshotPairs& data, const KernelSpec& kernel) {
    data.validate();
    GramSet g;
    g.aa = gram(kernel, data.X);
    g.bb = gram(kernel, data.Y);
    g.ba = gram(kernel, data.Y, data.X);
    return g;
}

Eigen::MatrixXd project_gram_z(const GramSet& grams, const SymEig& eig_a) {
    const Eigen::Index m = grams.bb.rows();
    if (eig_a.numerical_rank == 0) {
        return Eigen::MatrixXd::Zero(m, m);
    }
    const auto Vr = eig_a.vectors.leftCols(eig_a.numerical_rank);
    // P G P with P = Vr Vr^T, evaluated as Vr (Vr^T G Vr) Vr^T.
    const Eigen::MatrixXd core = Vr.transpose() * grams.bb * Vr;
    Eigen::MatrixXd zz = Vr * core * Vr.transpose();
    return 0.5 * (zz + zz.transpose());
}

ReducedMatrices reduced_matrices(const GramSet& grams, const Eigen::Ref<const Eigen::MatrixXd>& R,
                                 const Eigen::Ref<const Eigen::MatrixXd>& Sk) {
    ReducedMatrices out;
    const Eigen::MatrixXd SkTSk = Sk.transpose() * Sk;
    const Eigen::MatrixXd RTR = R.transpose() * R;
    out.left = R * grams.bb * SkTSk * grams.ba * R.transpose();
    out.right = Sk * grams.bb * RTR * grams.ba.transpose() * Sk.transpose();
    return out;
}

ReducedModel fit(const SnapshotPairs& data, const KernelSpec& kernel, int k, const FitOptions& options) {
    data.validate();
    const auto m = static_cast<int>(data.size());
    if (k < 1 || k > m) {
        std::ostringstream os;
        os << "rank k must lie in [1, m] = [1, " << m << "], got " << k;
        throw InputError(os.str());
    }

    ReducedModel model;
    model.kernel = kernel;
    model.tol_rel = options.tol_rel;
    model.X = data.X;
    model.Y = data.Y;

    const GramSet grams = build_grams(data, kernel);
    const SymEig eig_a = sym_eig(grams.aa, options.tol_rel);
    model.rank_a = eig_a.numerical_rank;
    model.R = truncated_pinv_factor(eig_a, m);

    const SymEig eig_z = sym_eig(project_gram_z(grams, eig_a), options.tol_rel);
    model.rank_z = eig_z.numerical_rank;

    const int k_eff = std::min(k, model.rank_z);
    if (k_eff == 0) {
        model.Sk = Eigen::MatrixXd::Zero(m, m);
        model.E = Eigen::MatrixXd::Zero(m, m);
        model.eig.lambdas.resize(0);
        model.eig.xi.resize(m, 0);
        model.eig.zeta.resize(m, 0);
        return model;
    }
    model.Sk = truncated_pinv_factor(eig_z, k_eff);

    const ReducedMatrices mats = reduced_matrices(grams, model.R, model.Sk);
    EigenSystem sys = pair_eigensystems(nonsym_eig(mats.left, k_eff), nonsym_eig(mats.right, k_eff),
                                        options.tol_match);

    // Null eigenvalues carry no dynamics for T >= 2 and have no well-defined
    // biorthogonal partner; drop them. The spectrum is sorted by modulus.
    const double lam_max = sys.lambdas.size() > 0 ? std::abs(sys.lambdas(0)) : 0.0;
    Eigen::Index kept = 0;
    while (kept < sys.lambdas.size() && std::abs(sys.lambdas(kept)) > options.tol_rel * lam_max) {
        ++kept;
    }
    model.k = static_cast<int>(kept);
    model.eig.lambdas = sys.lambdas.head(kept);
    model.eig.xi = sys.xi.leftCols(kept).conjugate();
    model.eig.zeta = sys.zeta.leftCols(kept);

    model.E = model.Sk * grams.ba * model.R.transpose();
    const double e_norm = model.E.norm();
    // Biorthogonalize per cluster of coinciding eigenvalues. For a simple
    // eigenvalue this is zeta_i /= conj(zeta_i^* E xi_i); inside a repeated
    // eigenvalue the pairing of eigenvectors is arbitrary, so the whole block
    // is mapped to zeta_c^* E xi_c = I.
    std::vector<bool> done(static_cast<std::size_t>(kept), false);
    for (Eigen::Index i = 0; i < kept; ++i) {
        if (done[static_cast<std::size_t>(i)]) {
            continue;
        }
        std::vector<Eigen::Index> cluster;
        for (Eigen::Index j = i; j < kept; ++j) {
            const cplx li = model.eig.lambdas(i);
            if (!done[static_cast<std::size_t>(j)] &&
                std::abs(model.eig.lambdas(j) - li) <= options.tol_match * std::max(1.0, std::abs(li))) {
                cluster.push_back(j);
                done[static_cast<std::size_t>(j)] = true;
            }
        }
        const auto q = static_cast<Eigen::Index>(cluster.size());
        Eigen::MatrixXcd Xi(m, q), Zeta(m, q);
        for (Eigen::Index c = 0; c < q; ++c) {
            Xi.col(c) = model.eig.xi.col(cluster[static_cast<std::size_t>(c)]);
            Zeta.col(c) = model.eig.zeta.col(cluster[static_cast<std::size_t>(c)]);
        }
        const Eigen::MatrixXcd C = Zeta.adjoint() * model.E.cast<cplx>() * Xi;
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(C);
        const double smallest = svd.singularValues()(q - 1);
        if (!(smallest >= 1e-12 * e_norm)) {
            std::ostringstream os;
            os << "non-biorthogonal eigenpair for lambda = " << model.eig.lambdas(i) << " (|zeta^* E xi| = "
               << smallest << "); the rank-" << k_eff << " operator looks defective";
            throw ModelError(os.str());
        }
        Zeta = Zeta * C.inverse().adjoint();
        for (Eigen::Index c = 0; c < q; ++c) {
            model.eig.zeta.col(cluster[static_cast<std::size_t>(c)]) = Zeta.col(c);
        }
    }
    return model;
}

void ReducedModel::validate() const {
    auto fail = [](const std::string& msg) { throw ModelError("invalid model: " + msg); };
    const Eigen::Index m = X.cols();
    if (X.rows() < 1 || m < 1) {
        fail("empty snapshot matrices");
    }
    if (Y.rows() != X.rows() || Y.cols() != m) {
        fail("X and Y differ in shape");
    }
    if (k < 0 || k > m) {
        fail("k = " + std::to_string(k) + " outside [0, m = " + std::to_string(m) + "]");
    }
    if (!(k <= rank_z && rank_z <= rank_a && rank_a <= m)) {
        fail("ranks violate k <= rank_Z <= rank_A <= m");
    }
    if (!(tol_rel > 0.0 && tol_rel < 1.0)) {
        fail("tol_rel outside (0, 1)");
    }
    for (const auto* M : {&R, &Sk, &E}) {
        if (M->rows() != m || M->cols() != m) {
            fail("R, S_k and E must be m x m");
        }
    }
    if (eig.lambdas.size() != k || eig.xi.rows() != m || eig.xi.cols() != k || eig.zeta.rows() != m ||
        eig.zeta.cols() != k) {
        fail("eigen-triples do not match k and m");
    }
    if (!X.allFinite() || !Y.allFinite() || !R.allFinite() || !Sk.allFinite() || !E.allFinite() ||
        !eig.lambdas.allFinite() || !eig.xi.allFinite() || !eig.zeta.allFinite()) {
        fail("non-finite entries");
    }
}

nlohmann::json ReducedModel::to_json() const {
    nlohmann::json j;
    j["version"] = kFormatVersion;
    j["kernel"] = kernel.to_json();
    j["k"] = k;
    j["tol_rel"] = tol_rel;
    j["rank_A"] = rank_a;
    j["rank_Z"] = rank_z;
    j["X"] = json_io::from_matrix(X);
    j["Y"] = json_io::from_matrix(Y);
    j["R"] = json_io::from_matrix(R);
    j["S_k"] = json_io::from_matrix(Sk);
    j["E"] = json_io::from_matrix(E);
    j["lambdas"] = json_io::from_vector(eig.lambdas);
    j["xi"] = json_io::from_matrix(eig.xi);
    j["zeta"] = json_io::from_matrix(eig.zeta);
    return j;
}

ReducedModel ReducedModel::from_json(const nlohmann::json& j) {
    if (!j.is_object()) {
        throw IoError("model file: expected a JSON object");
    }
    static const char* const kFields[] = {"version", "kernel", "k", "tol_rel", "rank_A", "rank_Z", "X",
                                          "Y",       "R",      "S_k", "E",      "lambdas", "xi",    "zeta"};
    for (const char* f : kFields) {
        if (!j.contains(f)) {
            throw IoError(std::string("model file: missing field '") + f + "'");
        }
    }
    for (const auto& item : j.items()) {
        if (std::find_if(std::begin(kFields), std::end(kFields),
                         [&](const char* f) { return item.key() == f; }) == std::end(kFields)) {
            throw IoError("model file: unknown field '" + item.key() + "'");
        }
    }
    if (!j["version"].is_number_integer() || j["version"].get<int>() != kFormatVersion) {
        throw IoError("model file: unsupported version " + j["version"].dump() + " (expected " +
                      std::to_string(kFormatVersion) + ")");
    }
    auto get_int = [&](const char* f) {
        if (!j[f].is_number_integer()) {
            throw IoError(std::string("model file: '") + f + "' must be an integer");
        }
        return j[f].get<int>();
    };
    ReducedModel model;
    try {
        model.kernel = KernelSpec::from_json(j["kernel"]);
    } catch (const InputError& e) {
        throw IoError(std::string("model file: ") + e.what());
    }
    model.k = get_int("k");
    model.rank_a = get_int("rank_A");
    model.rank_z = get_int("rank_Z");
    if (!j["tol_rel"].is_number()) {
        throw IoError("model file: 'tol_rel' must be a number");
    }
    model.tol_rel = j["tol_rel"].get<double>();
    model.X = json_io::to_matrix(j["X"], "X");
    model.Y = json_io::to_matrix(j["Y"], "Y");
    model.R = json_io::to_matrix(j["R"], "R");
    model.Sk = json_io::to_matrix(j["S_k"], "S_k");
    model.E = json_io::to_matrix(j["E"], "E");
    model.eig.lambdas = json_io::to_cvector(j["lambdas"], "lambdas");
    model.eig.xi = json_io::to_cmatrix(j["xi"], "xi");
    model.eig.zeta = json_io::to_cmatrix(j["zeta"], "zeta");
    // Empty eigen-vector blocks serialize as m empty rows; keep their shape.
    if (model.k == 0) {
        model.eig.xi.resize(model.X.cols(), 0);
        model.eig.zeta.resize(model.X.cols(), 0);
    }
    model.validate();
    return model;
}

bool operator==(const ReducedModel& a, const ReducedModel& b) {
    return a.kernel == b.kernel && a.k == b.k && a.tol_rel == b.tol_rel && a.rank_a == b.rank_a &&
           a.rank_z == b.rank_z && a.X == b.X && a.Y == b.Y && a.R == b.R && a.Sk == b.Sk && a.E == b.E &&
           a.eig.lambdas == b.eig.lambdas && a.eig.xi == b.eig.xi && a.eig.zeta == b.eig.zeta;
}

void save(const ReducedModel& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open '" + path.string() + "' for writing");
    }
    out << model.to_json().dump() << '\n';
    if (!out) {
        throw IoError("failed writing '" + path.string() + "'");
    }
}

ReducedModel load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open model file '" + path.string() + "'");
    }
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw IoError("model file '" + path.string() + "' is not valid JSON: " + e.what());
    }
    return ReducedModel::from_json(j);
}

}  // namespace gkdmd
