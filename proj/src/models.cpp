#include "sobmor/models.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <atomic>
#include <cmath>
#include <fstream>
#include <sstream>

namespace sobmor {

namespace {

std::atomic<std::int64_t> g_solve_count{0};

void require(bool cond, const std::string& msg) {
    if (!cond) throw DimensionError(msg);
}

void check_symmetric(const Matrix& A, const char* name, double tol) {
    const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
    if ((A - A.transpose()).cwiseAbs().maxCoeff() > tol * scale) {
        throw StructureError(std::string(name) + " is not symmetric");
    }
}

void check_psd(const Matrix& A, const char* name, double tol) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (A + A.transpose()),
                                             Eigen::EigenvaluesOnly);
    const double lmin = es.eigenvalues().minCoeff();
    const double lmax = es.eigenvalues().cwiseAbs().maxCoeff();
    if (lmin < -tol * std::max(lmax, 1e-300)) {
        std::ostringstream os;
        os << name << " is not positive semidefinite (min eigenvalue " << lmin << ")";
        throw StructureError(os.str());
    }
}

// Solves F X = RHS through a partial-pivot LU, flagging singular pencils.
ComplexMatrix pencil_solve(const ComplexMatrix& F, const ComplexMatrix& rhs, Complex s) {
    Eigen::PartialPivLU<ComplexMatrix> lu(F);
    const auto diag = lu.matrixLU().diagonal();
    const double dmax = diag.cwiseAbs().maxCoeff();
    const double dmin = diag.cwiseAbs().minCoeff();
    if (!(dmin > dmax * 1e-14) || !std::isfinite(dmax)) {
        std::ostringstream os;
        os << "singular pencil at s = " << s.real() << (s.imag() < 0 ? " - " : " + ")
           << std::abs(s.imag()) << "i";
        throw SingularPencilError(os.str(), s);
    }
    g_solve_count.fetch_add(1, std::memory_order_relaxed);
    return lu.solve(rhs);
}

} // namespace

StateSpaceModel::StateSpaceModel(Matrix A_, Matrix B_, Matrix C_, Matrix D_)
    : A(std::move(A_)), B(std::move(B_)), C(std::move(C_)), D(std::move(D_)) {
    require(A.rows() == A.cols(), "A must be square");
    require(B.rows() == A.rows(), "B row count must match order");
    require(C.cols() == A.rows(), "C column count must match order");
    require(D.rows() == C.rows() && D.cols() == B.cols(), "D must be n_y x n_u");
}

PHModel::PHModel(Matrix J_, Matrix R_, Matrix Q_, Matrix B_)
    : J(std::move(J_)), R(std::move(R_)), Q(std::move(Q_)), B(std::move(B_)) {
    require(J.rows() == J.cols(), "J must be square");
    require(R.rows() == J.rows() && R.cols() == J.rows(), "R must match J");
    require(Q.rows() == J.rows() && Q.cols() == J.rows(), "Q must match J");
    require(B.rows() == J.rows(), "B row count must match order");
}

void PHModel::check_structure(double skew_tol, double psd_tol) const {
    const double scale = std::max(1.0, J.cwiseAbs().maxCoeff());
    if ((J + J.transpose()).cwiseAbs().maxCoeff() > skew_tol * scale) {
        throw StructureError("J is not skew-symmetric");
    }
    check_symmetric(R, "R", skew_tol);
    check_symmetric(Q, "Q", skew_tol);
    check_psd(R, "R", psd_tol);
    check_psd(Q, "Q", psd_tol);
}

SSOModel::SSOModel(Matrix M_, Matrix D_, Matrix K_, Matrix B_)
    : M(std::move(M_)), D(std::move(D_)), K(std::move(K_)), B(std::move(B_)) {
    require(M.rows() == M.cols(), "M must be square");
    require(D.rows() == M.rows() && D.cols() == M.rows(), "D must match M");
    require(K.rows() == M.rows() && K.cols() == M.rows(), "K must match M");
    require(B.rows() == M.rows(), "B row count must match order");
}

void SSOModel::check_structure(double sym_tol, double psd_tol) const {
    check_symmetric(M, "M", sym_tol);
    check_symmetric(D, "D", sym_tol);
    check_symmetric(K, "K", sym_tol);
    check_psd(M, "M", psd_tol);
    check_psd(D, "D", psd_tol);
    check_psd(K, "K", psd_tol);
}

ComplexMatrix eval_tf(const StateSpaceModel& model, Complex s) {
    ComplexMatrix F = -model.A.cast<Complex>();
    F.diagonal().array() += s;
    ComplexMatrix X = pencil_solve(F, model.B.cast<Complex>(), s);
    return model.C.cast<Complex>() * X + model.D.cast<Complex>();
}

ComplexMatrix eval_tf(const DescriptorModel& model, Complex s) {
    ComplexMatrix F = s * model.E.cast<Complex>() - model.A.cast<Complex>();
    ComplexMatrix X = pencil_solve(F, model.B.cast<Complex>(), s);
    return model.C.cast<Complex>() * X;
}

ComplexMatrix eval_tf_ph(const PHModel& model, Complex s) {
    ComplexMatrix F = (-(model.J - model.R) * model.Q).cast<Complex>();
    F.diagonal().array() += s;
    ComplexMatrix X = pencil_solve(F, model.B.cast<Complex>(), s);
    return (model.B.transpose() * model.Q).cast<Complex>() * X;
}

ComplexMatrix eval_tf_sso(const SSOModel& model, Complex s) {
    ComplexMatrix F = (s * s) * model.M.cast<Complex>() + s * model.D.cast<Complex>() +
                      model.K.cast<Complex>();
    ComplexMatrix X = pencil_solve(F, model.B.cast<Complex>(), s);
    return model.B.transpose().cast<Complex>() * X;
}

ComplexMatrix eval_tf_any(const AnyModel& model, Complex s) {
    return std::visit(
        [&](const auto& m) -> ComplexMatrix {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, PHModel>) return eval_tf_ph(m, s);
            else if constexpr (std::is_same_v<T, SSOModel>) return eval_tf_sso(m, s);
            else return eval_tf(m, s);
        },
        model);
}

StateSpaceModel ph_to_state_space(const PHModel& model) {
    return StateSpaceModel((model.J - model.R) * model.Q, model.B,
                           model.B.transpose() * model.Q,
                           Matrix::Zero(model.inputs(), model.inputs()));
}

DescriptorModel sso_to_first_order(const SSOModel& model) {
    const Index n = model.order();
    const Index nu = model.inputs();
    DescriptorModel fo;
    fo.E = Matrix::Identity(2 * n, 2 * n);
    fo.E.bottomRightCorner(n, n) = model.M;
    fo.A = Matrix::Zero(2 * n, 2 * n);
    fo.A.topRightCorner(n, n) = Matrix::Identity(n, n);
    fo.A.bottomLeftCorner(n, n) = -model.K;
    fo.A.bottomRightCorner(n, n) = -model.D;
    fo.B = Matrix::Zero(2 * n, nu);
    fo.B.bottomRows(n) = model.B;
    fo.C = Matrix::Zero(nu, 2 * n);
    fo.C.leftCols(n) = model.B.transpose();
    return fo;
}

StateSpaceModel sso_to_first_order_explicit(const SSOModel& model) {
    const Index n = model.order();
    Eigen::PartialPivLU<Matrix> lu(model.M);
    const auto diag = lu.matrixLU().diagonal();
    if (!(diag.cwiseAbs().minCoeff() > diag.cwiseAbs().maxCoeff() * 1e-14)) {
        throw NumericalError(
            "M is singular; use the generalized first-order form instead");
    }
    Matrix A = Matrix::Zero(2 * n, 2 * n);
    A.topRightCorner(n, n) = Matrix::Identity(n, n);
    A.bottomLeftCorner(n, n) = -lu.solve(model.K);
    A.bottomRightCorner(n, n) = -lu.solve(model.D);
    Matrix B = Matrix::Zero(2 * n, model.inputs());
    B.bottomRows(n) = lu.solve(model.B);
    Matrix C = Matrix::Zero(model.inputs(), 2 * n);
    C.leftCols(n) = model.B.transpose();
    return StateSpaceModel(std::move(A), std::move(B), std::move(C),
                           Matrix::Zero(model.inputs(), model.inputs()));
}

Index model_order(const AnyModel& model) {
    return std::visit([](const auto& m) { return m.order(); }, model);
}

Index model_inputs(const AnyModel& model) {
    return std::visit([](const auto& m) { return m.inputs(); }, model);
}

Index model_outputs(const AnyModel& model) {
    return std::visit(
        [](const auto& m) -> Index {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, StateSpaceModel>) return m.outputs();
            else return m.inputs();
        },
        model);
}

FrequencySampleSet::FrequencySampleSet(std::vector<double> omegas)
    : omegas_(std::move(omegas)) {
    for (std::size_t i = 0; i < omegas_.size(); ++i) {
        if (!(omegas_[i] >= 0.0)) {
            throw DimensionError("sample frequencies must be nonnegative");
        }
        if (i > 0 && !(omegas_[i] > omegas_[i - 1])) {
            throw DimensionError("sample frequencies must be strictly increasing");
        }
    }
}

const ComplexMatrix& FrequencySampleSet::value(Index i) const {
    if (!has_values()) throw NumericalError("sample set has no cached values");
    return values_[static_cast<std::size_t>(i)];
}

void FrequencySampleSet::set_values(std::vector<ComplexMatrix> values) {
    if (values.size() != omegas_.size()) {
        throw DimensionError("cached values must align one-to-one with points");
    }
    values_ = std::move(values);
}

std::int64_t solve_count() { return g_solve_count.load(std::memory_order_relaxed); }
void reset_solve_count() { g_solve_count.store(0, std::memory_order_relaxed); }

void write_matrix_file(const std::filesystem::path& path, const Matrix& A) {
    std::ofstream out(path);
    if (!out) throw NumericalError("cannot open " + path.string() + " for writing");
    out << A.rows() << " " << A.cols() << "\n";
    out.precision(17);
    for (Index i = 0; i < A.rows(); ++i) {
        for (Index j = 0; j < A.cols(); ++j) {
            out << A(i, j) << (j + 1 == A.cols() ? "" : " ");
        }
        out << "\n";
    }
    if (!out) throw NumericalError("failed writing " + path.string());
}

Matrix read_matrix_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw NumericalError("cannot open " + path.string());
    Index rows = 0, cols = 0;
    if (!(in >> rows >> cols) || rows < 0 || cols < 0) {
        throw NumericalError("malformed header in " + path.string());
    }
    Matrix A(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        for (Index j = 0; j < cols; ++j) {
            if (!(in >> A(i, j))) {
                throw NumericalError("malformed entry at (" + std::to_string(i) + "," +
                                     std::to_string(j) + ") in " + path.string());
            }
        }
    }
    return A;
}

namespace {

struct ManifestRoles {
    std::string type;
    std::vector<std::pair<std::string, std::string>> files; // role -> filename
};

const std::vector<std::string>& roles_for(const std::string& type) {
    static const std::vector<std::string> ph{"J", "R", "Q", "B"};
    static const std::vector<std::string> sso{"M", "D", "K", "B"};
    static const std::vector<std::string> ss{"A", "B", "C", "D"};
    if (type == "ph") return ph;
    if (type == "sso") return sso;
    if (type == "ss") return ss;
    throw NumericalError("unknown model type '" + type + "' in manifest");
}

} // namespace

void save_model_manifest(const std::filesystem::path& manifest_path, const AnyModel& model) {
    const auto dir = manifest_path.parent_path();
    const std::string stem = manifest_path.stem().string();
    std::string type;
    std::vector<const Matrix*> mats;
    std::visit(
        [&](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, PHModel>) {
                type = "ph";
                mats = {&m.J, &m.R, &m.Q, &m.B};
            } else if constexpr (std::is_same_v<T, SSOModel>) {
                type = "sso";
                mats = {&m.M, &m.D, &m.K, &m.B};
            } else {
                type = "ss";
                mats = {&m.A, &m.B, &m.C, &m.D};
            }
        },
        model);
    std::ofstream out(manifest_path);
    if (!out) throw NumericalError("cannot open " + manifest_path.string());
    out << "type " << type << "\n";
    const auto& roles = roles_for(type);
    for (std::size_t i = 0; i < roles.size(); ++i) {
        const std::string fname = stem + "_" + roles[i] + ".txt";
        write_matrix_file(dir / fname, *mats[i]);
        out << roles[i] << " " << fname << "\n";
    }
}

AnyModel load_model_manifest(const std::filesystem::path& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) throw NumericalError("cannot open " + manifest_path.string());
    std::string key, value, type;
    std::vector<std::pair<std::string, std::string>> entries;
    while (in >> key >> value) {
        if (key == "type") type = value;
        else entries.emplace_back(key, value);
    }
    if (type.empty()) throw NumericalError("manifest missing 'type' line");
    const auto& roles = roles_for(type);
    const auto dir = manifest_path.parent_path();
    std::vector<Matrix> mats;
    for (const auto& role : roles) {
        auto it = std::find_if(entries.begin(), entries.end(),
                               [&](const auto& e) { return e.first == role; });
        if (it == entries.end()) {
            throw NumericalError("manifest missing role '" + role + "'");
        }
        mats.push_back(read_matrix_file(dir / it->second));
    }
    if (type == "ph") return PHModel(mats[0], mats[1], mats[2], mats[3]);
    if (type == "sso") return SSOModel(mats[0], mats[1], mats[2], mats[3]);
    return StateSpaceModel(mats[0], mats[1], mats[2], mats[3]);
}

} // namespace sobmor
