#include "sobmor/objective.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>
#include <cmath>
#include <sstream>

#include "sobmor/reshape.hpp"

// Gradient assembly notes. With E = G(s0) - G_r(s0, theta), simple sigma_j and
// singular vectors u, v of E, the chain rule gives d sigma = Re(u^H dE v). The
// per-block formulas below were cross-checked against central finite
// differences; signs follow from dE = -dG_r and the trace identities of the
// reshaping maps.
//
// pH, with F = s I - (J-R)Q, x = F^{-1} B v, w^H = u^H B^T Q F^{-1},
// P = Q x w^H, Y2 = x (u^H B^T + w^H (J-R)):
//   d theta_J =  Re sutv(P^T - P)
//   d theta_R =  Re utv(U_R (P + P^T))
//   d theta_Q = -Re utv(U_Q (Y2 + Y2^T))
//   d theta_B = -Re ftv((v w^H)^T + Q x u^H)
//
// SSO, with F = s^2 M + s D + K (symmetric), x = F^{-1} B v, y = F^{-1} B conj(u),
// Y = x y^T:
//   d theta_M =  Re s^2 utv(U_M (Y + Y^T))   (diag M: entry i = 2 tM_i Re(s^2 Y_ii))
//   d theta_D =  Re s   utv(U_D (Y + Y^T))
//   d theta_K =  Re     utv(U_K (Y + Y^T))
//   d theta_B = -Re ftv(x u^H + y v^T)

namespace sobmor {

namespace {

double positive_part(double x) { return x > 0.0 ? x : 0.0; }

// Precomputed assembly of one structured ROM plus whatever the gradients need.
struct AssembledRom {
    Structure structure;
    Index nx, nu;
    // pH pieces
    Matrix J, R, Q, B, UR, UQ, JmR, BtQ;
    // SSO pieces
    Matrix M, D, K, UM, UD, UK;
    Vector tM; // diag-M parameters

    explicit AssembledRom(const ParamVector& theta, const ObjectiveOptions& opts) {
        const auto& layout = theta.layout();
        structure = layout.structure;
        nx = layout.n_x;
        nu = layout.n_u;
        if (structure == Structure::ph) {
            const Matrix S = vtsu<double>(theta.block(0));
            UR = vtu<double>(theta.block(1));
            UQ = vtu<double>(theta.block(2));
            J = S.transpose() - S;
            R = UR.transpose() * UR;
            Q = UQ.transpose() * UQ;
            if (opts.ridge > 0.0) {
                R.diagonal().array() += opts.ridge;
                Q.diagonal().array() += opts.ridge;
            }
            B = vtf<double>(theta.block(3), nu);
            JmR = J - R;
            BtQ = B.transpose() * Q;
        } else {
            if (structure == Structure::sso_diag_m) {
                tM = theta.block(0);
                M = tM.array().square().matrix().asDiagonal();
            } else {
                UM = vtu<double>(theta.block(0));
                M = UM.transpose() * UM;
            }
            UD = vtu<double>(theta.block(1));
            UK = vtu<double>(theta.block(2));
            D = UD.transpose() * UD;
            K = UK.transpose() * UK;
            if (opts.ridge > 0.0) {
                M.diagonal().array() += opts.ridge;
                D.diagonal().array() += opts.ridge;
                K.diagonal().array() += opts.ridge;
            }
            B = vtf<double>(theta.block(3), nu);
        }
    }

    ComplexMatrix pencil(Complex s) const {
        if (structure == Structure::ph) {
            ComplexMatrix F = (-JmR * Q).cast<Complex>();
            F.diagonal().array() += s;
            return F;
        }
        return (s * s) * M.cast<Complex>() + s * D.cast<Complex>() + K.cast<Complex>();
    }
};

void check_pencil(const Eigen::PartialPivLU<ComplexMatrix>& lu, Complex s) {
    const auto diag = lu.matrixLU().diagonal();
    const double dmax = diag.cwiseAbs().maxCoeff();
    const double dmin = diag.cwiseAbs().minCoeff();
    if (!(dmin > dmax * 1e-14) || !std::isfinite(dmax)) {
        std::ostringstream os;
        os << "ROM pencil singular at sample s = " << s.real()
           << (s.imag() < 0 ? " - " : " + ") << std::abs(s.imag()) << "i";
        throw SingularPencilError(os.str(), s);
    }
}

// Accumulates coeff * grad(sigma_j at sample) into g for a pH layout.
void accumulate_ph(const AssembledRom& rom, const Eigen::PartialPivLU<ComplexMatrix>& lu,
                   const ComplexVector& u, const ComplexVector& v, double coeff,
                   const ParamLayout& layout, Vector& g) {
    const ComplexMatrix Qc = rom.Q.cast<Complex>();
    const ComplexVector x = lu.solve(rom.B.cast<Complex>() * v);
    // w^H = u^H B^T Q F^{-1}  <=>  w = F^{-H} (B^T Q)^H u
    const ComplexVector w = lu.adjoint().solve(rom.BtQ.transpose().cast<Complex>() * u);
    const ComplexVector Qx = Qc * x;
    const ComplexMatrix P = Qx * w.adjoint();
    // c = u^H B^T + w^H (J - R)
    const Eigen::RowVectorXcd c = (rom.B.cast<Complex>() * u).adjoint() +
                                  w.adjoint() * rom.JmR.cast<Complex>();
    const ComplexMatrix Y2 = x * c;

    const auto off = layout.block_offsets();
    const Index nx = layout.n_x;
    // d theta_J = Re sutv(P^T - P)
    {
        Index k = off[0];
        for (Index i = 0; i < nx; ++i)
            for (Index j = i + 1; j < nx; ++j)
                g(k++) += coeff * std::real(P(j, i) - P(i, j));
    }
    // d theta_R = Re utv(U_R (P + P^T))
    {
        const ComplexMatrix W = rom.UR.cast<Complex>() * (P + P.transpose());
        Index k = off[1];
        for (Index i = 0; i < nx; ++i)
            for (Index j = i; j < nx; ++j) g(k++) += coeff * std::real(W(i, j));
    }
    // d theta_Q = -Re utv(U_Q (Y2 + Y2^T))
    {
        const ComplexMatrix W = rom.UQ.cast<Complex>() * (Y2 + Y2.transpose());
        Index k = off[2];
        for (Index i = 0; i < nx; ++i)
            for (Index j = i; j < nx; ++j) g(k++) -= coeff * std::real(W(i, j));
    }
    // d theta_B = -Re ftv((v w^H)^T + Q x u^H), column-major over n_x x n_u
    {
        const ComplexMatrix W = (v * w.adjoint()).transpose() + Qx * u.adjoint();
        Index k = off[3];
        for (Index col = 0; col < layout.n_u; ++col)
            for (Index row = 0; row < nx; ++row) g(k++) -= coeff * std::real(W(row, col));
    }
}

// Accumulates coeff * grad(sigma_j at sample) into g for an SSO layout.
void accumulate_sso(const AssembledRom& rom, const Eigen::PartialPivLU<ComplexMatrix>& lu,
                    Complex s, const ComplexVector& u, const ComplexVector& v, double coeff,
                    const ParamLayout& layout, Vector& g) {
    const ComplexVector x = lu.solve(rom.B.cast<Complex>() * v);
    const ComplexVector y = lu.solve(rom.B.cast<Complex>() * u.conjugate());
    const ComplexMatrix Y = x * y.transpose();
    const ComplexMatrix Ysym = Y + Y.transpose();

    const auto off = layout.block_offsets();
    const Index nx = layout.n_x;
    const Complex s2 = s * s;
    if (layout.structure == Structure::sso_diag_m) {
        // chain rule through M = diag(tM)^2
        Index k = off[0];
        for (Index i = 0; i < nx; ++i) {
            g(k++) += coeff * 2.0 * rom.tM(i) * std::real(s2 * Y(i, i));
        }
    } else {
        const ComplexMatrix W = rom.UM.cast<Complex>() * Ysym;
        Index k = off[0];
        for (Index i = 0; i < nx; ++i)
            for (Index j = i; j < nx; ++j) g(k++) += coeff * std::real(s2 * W(i, j));
    }
    {
        const ComplexMatrix W = rom.UD.cast<Complex>() * Ysym;
        Index k = off[1];
        for (Index i = 0; i < nx; ++i)
            for (Index j = i; j < nx; ++j) g(k++) += coeff * std::real(s * W(i, j));
    }
    {
        const ComplexMatrix W = rom.UK.cast<Complex>() * Ysym;
        Index k = off[2];
        for (Index i = 0; i < nx; ++i)
            for (Index j = i; j < nx; ++j) g(k++) += coeff * std::real(W(i, j));
    }
    {
        const ComplexMatrix W = x * u.adjoint() + y * v.transpose();
        Index k = off[3];
        for (Index col = 0; col < layout.n_u; ++col)
            for (Index row = 0; row < nx; ++row) g(k++) -= coeff * std::real(W(row, col));
    }
}

enum class Mode { leveled, spectral_only, least_squares };

// Shared evaluation loop. gamma is ignored for least_squares; grad may be null.
LossValue evaluate(Mode mode, double gamma, const FrequencySampleSet& samples,
                   const ParamVector& theta, Vector* grad, const ObjectiveOptions& opts) {
    if (mode != Mode::least_squares && !(gamma > 0.0)) {
        throw DimensionError("gamma must be positive");
    }
    if (!samples.has_values()) {
        throw NumericalError("sample set has no cached FOM values");
    }
    const auto& layout = theta.layout();
    const AssembledRom rom(theta, opts);
    if (grad) grad->setZero(layout.size());

    LossValue out;
    out.gamma = (mode == Mode::least_squares) ? 0.0 : gamma;
    double sum = 0.0;

    Eigen::PartialPivLU<ComplexMatrix> lu;
    Eigen::JacobiSVD<ComplexMatrix> svd;
    const ComplexMatrix Bc = rom.B.cast<Complex>();
    const ComplexMatrix Cc = (layout.structure == Structure::ph)
                                 ? ComplexMatrix(rom.BtQ.cast<Complex>())
                                 : ComplexMatrix(rom.B.transpose().cast<Complex>());

    for (Index i = 0; i < samples.size(); ++i) {
        const Complex s = samples.point(i);
        lu.compute(rom.pencil(s));
        check_pencil(lu, s);
        const ComplexMatrix Gr = Cc * lu.solve(Bc);
        const ComplexMatrix E = samples.value(i) - Gr;
        svd.compute(E, grad ? (Eigen::ComputeFullU | Eigen::ComputeFullV) : 0);
        const Vector& sig = svd.singularValues();
        const Index jmax = (mode == Mode::spectral_only) ? 1 : sig.size();
        for (Index j = 0; j < jmax; ++j) {
            double coeff = 0.0;
            if (mode == Mode::least_squares) {
                if (j > 0) break; // spectral norm only
                sum += sig(0) * sig(0);
                coeff = 2.0 * sig(0);
            } else {
                const double excess = positive_part(sig(j) - gamma);
                if (excess <= 0.0) continue;
                sum += excess * excess;
                ++out.active_count;
                coeff = 2.0 / gamma * excess;
            }
            if (grad && coeff != 0.0) {
                const ComplexVector u = svd.matrixU().col(j);
                const ComplexVector v = svd.matrixV().col(j);
                if (layout.structure == Structure::ph) {
                    accumulate_ph(rom, lu, u, v, coeff, layout, *grad);
                } else {
                    accumulate_sso(rom, lu, s, u, v, coeff, layout, *grad);
                }
            }
        }
    }
    out.value = (mode == Mode::least_squares) ? sum : sum / gamma;
    return out;
}

} // namespace

std::vector<SVDTriplet> svd_triplets(const ComplexMatrix& E) {
    Eigen::JacobiSVD<ComplexMatrix> svd(E, Eigen::ComputeFullU | Eigen::ComputeFullV);
    std::vector<SVDTriplet> out;
    for (Index j = 0; j < svd.singularValues().size(); ++j) {
        out.push_back({svd.singularValues()(j), svd.matrixU().col(j), svd.matrixV().col(j),
                       static_cast<int>(j)});
    }
    return out;
}

LossValue loss(double gamma, const FrequencySampleSet& samples, const ParamVector& theta,
               const ObjectiveOptions& opts) {
    return evaluate(Mode::leveled, gamma, samples, theta, nullptr, opts);
}

LossValue loss_tilde(double gamma, const FrequencySampleSet& samples, const ParamVector& theta,
                     const ObjectiveOptions& opts) {
    return evaluate(Mode::spectral_only, gamma, samples, theta, nullptr, opts);
}

double lsq(const FrequencySampleSet& samples, const ParamVector& theta,
           const ObjectiveOptions& opts) {
    return evaluate(Mode::least_squares, 0.0, samples, theta, nullptr, opts).value;
}

Vector grad_loss(double gamma, const FrequencySampleSet& samples, const ParamVector& theta,
                 const ObjectiveOptions& opts) {
    Vector g;
    evaluate(Mode::leveled, gamma, samples, theta, &g, opts);
    return g;
}

Vector grad_lsq(const FrequencySampleSet& samples, const ParamVector& theta,
                const ObjectiveOptions& opts) {
    Vector g;
    evaluate(Mode::least_squares, 0.0, samples, theta, &g, opts);
    return g;
}

LossValue loss_and_grad(double gamma, const FrequencySampleSet& samples,
                        const ParamVector& theta, Vector& grad, const ObjectiveOptions& opts) {
    return evaluate(Mode::leveled, gamma, samples, theta, &grad, opts);
}

namespace {

GradSigmaResult grad_sigma_impl(const ParamVector& theta, Complex s0, const ComplexMatrix& G0,
                                int j, const ObjectiveOptions& opts) {
    const auto& layout = theta.layout();
    if (G0.rows() != layout.n_u || G0.cols() != layout.n_u) {
        throw DimensionError("G0 must be n_u x n_u");
    }
    if (j < 0 || j >= layout.n_u) throw DimensionError("singular value index out of range");
    const AssembledRom rom(theta, opts);

    Eigen::PartialPivLU<ComplexMatrix> lu(rom.pencil(s0));
    check_pencil(lu, s0);
    const ComplexMatrix Cc = (layout.structure == Structure::ph)
                                 ? ComplexMatrix(rom.BtQ.cast<Complex>())
                                 : ComplexMatrix(rom.B.transpose().cast<Complex>());
    const ComplexMatrix E = G0 - Cc * lu.solve(rom.B.cast<Complex>());
    Eigen::JacobiSVD<ComplexMatrix> svd(E, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vector& sig = svd.singularValues();

    GradSigmaResult res;
    const double smax = std::max(sig(0), 1e-300);
    res.degenerate = sig(j) <= opts.cluster_gap_tol * smax;
    if (j > 0 && std::abs(sig(j) - sig(j - 1)) <= opts.cluster_gap_tol * smax) res.degenerate = true;
    if (j + 1 < sig.size() && std::abs(sig(j) - sig(j + 1)) <= opts.cluster_gap_tol * smax) {
        res.degenerate = true;
    }

    res.grad = Vector::Zero(layout.size());
    const ComplexVector u = svd.matrixU().col(j);
    const ComplexVector v = svd.matrixV().col(j);
    if (layout.structure == Structure::ph) {
        accumulate_ph(rom, lu, u, v, 1.0, layout, res.grad);
    } else {
        accumulate_sso(rom, lu, s0, u, v, 1.0, layout, res.grad);
    }
    return res;
}

} // namespace

GradSigmaResult grad_sigma_ph(const ParamVector& theta, Complex s0, const ComplexMatrix& G0,
                              int j, const ObjectiveOptions& opts) {
    if (theta.layout().structure != Structure::ph) {
        throw StructureError("grad_sigma_ph requires a ph layout");
    }
    return grad_sigma_impl(theta, s0, G0, j, opts);
}

GradSigmaResult grad_sigma_sso(const ParamVector& theta, Complex s0, const ComplexMatrix& G0,
                               int j, const ObjectiveOptions& opts) {
    if (theta.layout().structure == Structure::ph) {
        throw StructureError("grad_sigma_sso requires an sso layout");
    }
    return grad_sigma_impl(theta, s0, G0, j, opts);
}

} // namespace sobmor
