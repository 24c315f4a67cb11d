#include "sobmor/param.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <fstream>

#include "sobmor/reshape.hpp"

namespace sobmor {

std::string to_string(Structure s) {
    switch (s) {
        case Structure::ph: return "ph";
        case Structure::sso_full: return "sso-full";
        case Structure::sso_diag_m: return "sso-diagm";
    }
    return "?";
}

Structure structure_from_string(const std::string& s) {
    if (s == "ph") return Structure::ph;
    if (s == "sso-full") return Structure::sso_full;
    if (s == "sso-diagm") return Structure::sso_diag_m;
    throw StructureError("unknown structure tag '" + s + "'");
}

std::array<Index, 4> ParamLayout::block_sizes() const {
    const Index tri = n_x * (n_x + 1) / 2;
    const Index stri = n_x * (n_x - 1) / 2;
    switch (structure) {
        case Structure::ph: return {stri, tri, tri, n_x * n_u};
        case Structure::sso_full: return {tri, tri, tri, n_x * n_u};
        case Structure::sso_diag_m: return {n_x, tri, tri, n_x * n_u};
    }
    return {};
}

std::array<Index, 4> ParamLayout::block_offsets() const {
    const auto sz = block_sizes();
    return {0, sz[0], sz[0] + sz[1], sz[0] + sz[1] + sz[2]};
}

Index ParamLayout::size() const {
    const auto sz = block_sizes();
    return sz[0] + sz[1] + sz[2] + sz[3];
}

ParamVector::ParamVector(ParamLayout layout, Vector data)
    : layout_(layout), data_(std::move(data)) {
    if (layout_.n_x < 1 || layout_.n_u < 1) {
        throw DimensionError("parameter layout requires n_x >= 1 and n_u >= 1");
    }
    if (data_.size() != layout_.size()) {
        throw DimensionError("parameter vector length " + std::to_string(data_.size()) +
                             " does not match layout size " + std::to_string(layout_.size()));
    }
}

ParamVector ParamVector::zero(ParamLayout layout) {
    return ParamVector(layout, Vector::Zero(layout.size()));
}

Eigen::Ref<const Vector> ParamVector::block(int i) const {
    const auto off = layout_.block_offsets();
    const auto sz = layout_.block_sizes();
    return data_.segment(off[static_cast<std::size_t>(i)], sz[static_cast<std::size_t>(i)]);
}

Eigen::Ref<Vector> ParamVector::block(int i) {
    const auto off = layout_.block_offsets();
    const auto sz = layout_.block_sizes();
    return data_.segment(off[static_cast<std::size_t>(i)], sz[static_cast<std::size_t>(i)]);
}

PHModel assemble_ph(const ParamVector& theta, const AssembleOptions& opts) {
    if (theta.layout().structure != Structure::ph) {
        throw StructureError("assemble_ph requires a ph layout, got " +
                             to_string(theta.layout().structure));
    }
    const Matrix S = vtsu<double>(theta.block(0));
    const Matrix UR = vtu<double>(theta.block(1));
    const Matrix UQ = vtu<double>(theta.block(2));
    Matrix J = S.transpose() - S;
    Matrix R = UR.transpose() * UR;
    Matrix Q = UQ.transpose() * UQ;
    if (opts.ridge > 0.0) {
        R.diagonal().array() += opts.ridge;
        Q.diagonal().array() += opts.ridge;
    }
    return PHModel(std::move(J), std::move(R), std::move(Q),
                   vtf<double>(theta.block(3), theta.layout().n_u));
}

SSOModel assemble_sso(const ParamVector& theta, const AssembleOptions& opts) {
    const auto structure = theta.layout().structure;
    if (structure != Structure::sso_full && structure != Structure::sso_diag_m) {
        throw StructureError("assemble_sso requires an sso layout, got " + to_string(structure));
    }
    Matrix M;
    if (structure == Structure::sso_diag_m) {
        M = Vector(theta.block(0)).array().square().matrix().asDiagonal();
    } else {
        const Matrix UM = vtu<double>(theta.block(0));
        M = UM.transpose() * UM;
    }
    const Matrix UD = vtu<double>(theta.block(1));
    const Matrix UK = vtu<double>(theta.block(2));
    Matrix D = UD.transpose() * UD;
    Matrix K = UK.transpose() * UK;
    if (opts.ridge > 0.0) {
        M.diagonal().array() += opts.ridge;
        D.diagonal().array() += opts.ridge;
        K.diagonal().array() += opts.ridge;
    }
    return SSOModel(std::move(M), std::move(D), std::move(K),
                    vtf<double>(theta.block(3), theta.layout().n_u));
}

Matrix psd_triangular_factor(const Matrix& S, double tol) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (S + S.transpose()));
    const Vector& lam = es.eigenvalues();
    const double lmax = lam.cwiseAbs().maxCoeff();
    if (lam.minCoeff() < -tol * std::max(lmax, 1e-300)) {
        throw StructureError("matrix is indefinite beyond tolerance; cannot factor");
    }
    const Index n = S.rows();
    Matrix root(n, n);
    for (Index i = 0; i < n; ++i) {
        root.row(i) = std::sqrt(std::max(lam(i), 0.0)) * es.eigenvectors().col(i).transpose();
    }
    Eigen::HouseholderQR<Matrix> qr(root);
    Matrix U = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Index i = 0; i < n; ++i) {
        if (U(i, i) < 0.0) U.row(i) = -U.row(i);
    }
    return U;
}

ParamVector extract_theta_ph(const PHModel& model) {
    model.check_structure();
    const ParamLayout layout{Structure::ph, model.order(), model.inputs()};
    ParamVector theta = ParamVector::zero(layout);
    // J = S^T - S with S strictly upper, so S = -(strictly upper part of J)
    theta.block(0) = -sutv<double>(Matrix(model.J));
    theta.block(1) = utv<double>(psd_triangular_factor(model.R));
    theta.block(2) = utv<double>(psd_triangular_factor(model.Q));
    theta.block(3) = ftv<double>(model.B);
    return theta;
}

ParamVector extract_theta_sso(const SSOModel& model, Structure layout_tag) {
    if (layout_tag != Structure::sso_full && layout_tag != Structure::sso_diag_m) {
        throw StructureError("extract_theta_sso requires an sso layout");
    }
    model.check_structure();
    const ParamLayout layout{layout_tag, model.order(), model.inputs()};
    ParamVector theta = ParamVector::zero(layout);
    if (layout_tag == Structure::sso_diag_m) {
        const Index n = model.order();
        const double scale = std::max(1.0, model.M.cwiseAbs().maxCoeff());
        Matrix offdiag = model.M;
        offdiag.diagonal().setZero();
        if (offdiag.cwiseAbs().maxCoeff() > 1e-12 * scale) {
            throw StructureError("diagM layout requires a diagonal M");
        }
        for (Index i = 0; i < n; ++i) {
            const double mi = model.M(i, i);
            if (mi < -1e-10 * scale) {
                throw StructureError("diagM layout requires nonnegative diagonal of M");
            }
            theta.block(0)(i) = std::sqrt(std::max(mi, 0.0));
        }
    } else {
        theta.block(0) = utv<double>(psd_triangular_factor(model.M));
    }
    theta.block(1) = utv<double>(psd_triangular_factor(model.D));
    theta.block(2) = utv<double>(psd_triangular_factor(model.K));
    theta.block(3) = ftv<double>(model.B);
    return theta;
}

void save_param_vector(const std::filesystem::path& path, const ParamVector& theta) {
    std::ofstream out(path);
    if (!out) throw NumericalError("cannot open " + path.string() + " for writing");
    out << to_string(theta.layout().structure) << " " << theta.layout().n_x << " "
        << theta.layout().n_u << "\n";
    out.precision(17);
    for (Index i = 0; i < theta.size(); ++i) out << theta.data()(i) << "\n";
    if (!out) throw NumericalError("failed writing " + path.string());
}

ParamVector load_param_vector(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw NumericalError("cannot open " + path.string());
    std::string tag;
    Index nx = 0, nu = 0;
    if (!(in >> tag >> nx >> nu)) throw NumericalError("malformed header in " + path.string());
    const ParamLayout layout{structure_from_string(tag), nx, nu};
    Vector data(layout.size());
    for (Index i = 0; i < data.size(); ++i) {
        if (!(in >> data(i))) {
            throw NumericalError("missing value " + std::to_string(i) + " in " + path.string());
        }
    }
    return ParamVector(layout, std::move(data));
}

} // namespace sobmor
