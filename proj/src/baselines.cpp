#include "sobmor/baselines.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <numeric>

namespace sobmor {

namespace {

double spectral_abscissa(const Matrix& A) {
    return A.eigenvalues().real().maxCoeff();
}

// Block back-substitution for T X + X T^T = C with T quasi upper triangular.
Matrix solve_schur_lyap(const Matrix& T, const Matrix& C) {
    const Index n = T.rows();
    // diagonal block boundaries (1x1 or 2x2)
    std::vector<Index> starts;
    for (Index i = 0; i < n;) {
        starts.push_back(i);
        if (i + 1 < n && std::abs(T(i + 1, i)) > 0.0) i += 2;
        else i += 1;
    }
    const auto nb = static_cast<Index>(starts.size());
    auto blk_size = [&](Index b) {
        return (b + 1 < nb ? starts[static_cast<std::size_t>(b + 1)] : n) -
               starts[static_cast<std::size_t>(b)];
    };

    Matrix X = Matrix::Zero(n, n);
    for (Index bi = nb - 1; bi >= 0; --bi) {
        const Index i0 = starts[static_cast<std::size_t>(bi)];
        const Index ni = blk_size(bi);
        for (Index bj = nb - 1; bj >= 0; --bj) {
            const Index j0 = starts[static_cast<std::size_t>(bj)];
            const Index nj = blk_size(bj);
            Matrix rhs = C.block(i0, j0, ni, nj);
            // subtract contributions of already-solved blocks
            const Index tail_i = i0 + ni;
            const Index tail_j = j0 + nj;
            if (tail_i < n) {
                rhs.noalias() -= T.block(i0, tail_i, ni, n - tail_i) *
                                 X.block(tail_i, j0, n - tail_i, nj);
            }
            if (tail_j < n) {
                rhs.noalias() -= X.block(i0, tail_j, ni, n - tail_j) *
                                 T.block(j0, tail_j, nj, n - tail_j).transpose();
            }
            // small Sylvester Tii Xij + Xij Tjj^T = rhs via Kronecker
            const Matrix Tii = T.block(i0, i0, ni, ni);
            const Matrix Tjj = T.block(j0, j0, nj, nj);
            Matrix sys = Matrix::Zero(ni * nj, ni * nj);
            Vector vec(ni * nj);
            for (Index c = 0; c < nj; ++c) {
                for (Index rr = 0; rr < ni; ++rr) {
                    vec(c * ni + rr) = rhs(rr, c);
                    for (Index rr2 = 0; rr2 < ni; ++rr2) {
                        sys(c * ni + rr, c * ni + rr2) += Tii(rr, rr2);
                    }
                    for (Index c2 = 0; c2 < nj; ++c2) {
                        sys(c * ni + rr, c2 * ni + rr) += Tjj(c, c2);
                    }
                }
            }
            const Vector sol = sys.partialPivLu().solve(vec);
            for (Index c = 0; c < nj; ++c) {
                X.block(i0, j0, ni, nj).col(c) = sol.segment(c * ni, ni);
            }
        }
    }
    return X;
}

// Factor S = L L^T with L = V diag(sqrt(clip(lambda))) for symmetric S.
Matrix psd_sqrt_factor(const Matrix& S, const char* what) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (S + S.transpose()));
    const Vector& lam = es.eigenvalues();
    const double lmax = lam.cwiseAbs().maxCoeff();
    if (lam.minCoeff() < -1e-10 * std::max(lmax, 1e-300)) {
        throw NumericalError(std::string(what) + " is indefinite beyond tolerance");
    }
    Matrix L = es.eigenvectors();
    for (Index i = 0; i < L.cols(); ++i) L.col(i) *= std::sqrt(std::max(lam(i), 0.0));
    return L;
}

} // namespace

Matrix lyap_solve(const Matrix& A, const Matrix& W) {
    if (A.rows() != A.cols() || W.rows() != W.cols() || A.rows() != W.rows()) {
        throw DimensionError("lyap_solve: A and W must be square of equal size");
    }
    const double wscale = std::max(1.0, W.cwiseAbs().maxCoeff());
    if ((W - W.transpose()).cwiseAbs().maxCoeff() > 1e-10 * wscale) {
        throw StructureError("lyap_solve: W must be symmetric");
    }
    if (!(spectral_abscissa(A) < 0.0)) {
        throw NumericalError("lyap_solve: A is not Hurwitz");
    }
    Eigen::RealSchur<Matrix> schur(A);
    const Matrix& U = schur.matrixU();
    const Matrix& T = schur.matrixT();
    const Matrix Ct = -(U.transpose() * W * U);
    Matrix X = solve_schur_lyap(T, Ct);
    X = U * X * U.transpose();
    X = 0.5 * (X + X.transpose());

    const double resid = (A * X + X * A.transpose() + W).norm();
    const double tol = 1e-8 * (A.norm() * X.norm() + W.norm());
    if (!(resid <= std::max(tol, 1e-300))) {
        throw NumericalError("lyap_solve: residual " + std::to_string(resid) +
                             " exceeds tolerance");
    }
    return X;
}

namespace {

struct GramianFactors {
    Matrix Rc; // P = Rc Rc^T
    Matrix Lo; // Q = Lo Lo^T
    Matrix U, V;
    Vector hankel;
};

GramianFactors balancing_factors(const StateSpaceModel& fom) {
    GramianFactors f;
    const Matrix P = lyap_solve(fom.A, fom.B * fom.B.transpose());
    const Matrix Q = lyap_solve(fom.A.transpose(), fom.C.transpose() * fom.C);
    f.Rc = psd_sqrt_factor(P, "controllability Gramian");
    f.Lo = psd_sqrt_factor(Q, "observability Gramian");
    Eigen::JacobiSVD<Matrix> svd(f.Lo.transpose() * f.Rc,
                                 Eigen::ComputeThinU | Eigen::ComputeThinV);
    f.U = svd.matrixU();
    f.V = svd.matrixV();
    f.hankel = svd.singularValues();
    return f;
}

void check_truncation_gap(const Vector& hankel, Index r) {
    if (r < 1 || r > hankel.size()) throw DimensionError("invalid reduced order r");
    if (r < hankel.size() &&
        hankel(r - 1) - hankel(r) <= 1e-12 * std::max(hankel(0), 1e-300)) {
        throw NumericalError(
            "Hankel singular values sigma_r and sigma_{r+1} are tied; pick a different r");
    }
}

} // namespace

BalancingData compute_balancing(const StateSpaceModel& fom) {
    const GramianFactors f = balancing_factors(fom);
    const Index n = fom.order();
    if (f.hankel(n - 1) <= 1e-14 * f.hankel(0)) {
        throw NumericalError("Hankel spectrum too ill-conditioned for a full balancing");
    }
    BalancingData data;
    const Vector s_inv_half = f.hankel.array().sqrt().inverse().matrix();
    data.T = f.Rc * f.V * s_inv_half.asDiagonal();
    data.Tinv = s_inv_half.asDiagonal() * f.U.transpose() * f.Lo.transpose();
    data.hankel = f.hankel;
    return data;
}

BTResult balanced_truncation(const StateSpaceModel& fom, Index r) {
    if (!(spectral_abscissa(fom.A) < 0.0)) {
        throw NumericalError("balanced_truncation requires an asymptotically stable model");
    }
    const GramianFactors f = balancing_factors(fom);
    check_truncation_gap(f.hankel, r);
    const Vector s_inv_half = f.hankel.head(r).array().sqrt().inverse().matrix();
    const Matrix Tr = f.Rc * f.V.leftCols(r) * s_inv_half.asDiagonal();
    const Matrix Wr = f.Lo * f.U.leftCols(r) * s_inv_half.asDiagonal();
    BTResult out{StateSpaceModel(Wr.transpose() * fom.A * Tr, Wr.transpose() * fom.B,
                                 fom.C * Tr, fom.D),
                 2.0 * f.hankel.tail(f.hankel.size() - r).sum(), f.hankel};
    return out;
}

PHModel ph_bt(const PHModel& fom, Index r) {
    const StateSpaceModel ss = ph_to_state_space(fom);
    if (!(spectral_abscissa(ss.A) < 0.0)) {
        throw NumericalError("ph_bt requires an asymptotically stable model");
    }
    const GramianFactors f = balancing_factors(ss);
    check_truncation_gap(f.hankel, r);
    const Index n = fom.order();
    const Vector s_inv_half = f.hankel.head(r).array().sqrt().inverse().matrix();
    const Matrix Wr = f.Lo * f.U.leftCols(r) * s_inv_half.asDiagonal(); // rows of T^{-1}

    Matrix Jr = Wr.transpose() * fom.J * Wr;
    Jr = 0.5 * (Jr - Jr.transpose());
    Matrix Rr = Wr.transpose() * fom.R * Wr;
    Rr = 0.5 * (Rr + Rr.transpose());

    // Schur complement Q11 - Q12 Q22^{-1} Q21 of the balanced Q equals
    // (W_r^T Q^{-1} W_r)^{-1}; this form never touches the ill-conditioned
    // truncated columns of the balancing transformation.
    Matrix Qr;
    Eigen::FullPivLU<Matrix> qlu(fom.Q);
    if (qlu.isInvertible()) {
        Qr = (Wr.transpose() * qlu.solve(Wr)).inverse();
    } else {
        // literal path: full transformation, partition, invert Q22
        const BalancingData bal = compute_balancing(ss);
        const Matrix Qb = bal.T.transpose() * fom.Q * bal.T;
        const Matrix Q11 = Qb.topLeftCorner(r, r);
        const Matrix Q12 = Qb.topRightCorner(r, n - r);
        const Matrix Q22 = Qb.bottomRightCorner(n - r, n - r);
        Eigen::FullPivLU<Matrix> lu22(Q22);
        if (!lu22.isInvertible()) {
            throw NumericalError("ph_bt: truncated block Q22 is singular");
        }
        Qr = Q11 - Q12 * lu22.solve(Q12.transpose());
    }
    Qr = 0.5 * (Qr + Qr.transpose());
    return PHModel(std::move(Jr), std::move(Rr), std::move(Qr), Wr.transpose() * fom.B);
}

namespace {

// Real basis spanning the solves (s_i I - A)^{-1} B b_i, conjugate pairs merged.
Matrix irka_basis(const Matrix& A, const Matrix& B, const ComplexVector& shifts,
                  const ComplexMatrix& dirs, Index r) {
    const Index n = A.rows();
    Matrix T(n, r);
    Index col = 0;
    std::vector<bool> done(static_cast<std::size_t>(r), false);
    for (Index i = 0; i < r && col < r; ++i) {
        if (done[static_cast<std::size_t>(i)]) continue;
        const Complex s = shifts(i);
        ComplexMatrix F = (-A).cast<Complex>();
        F.diagonal().array() += s;
        const ComplexVector x = F.partialPivLu().solve(B.cast<Complex>() * dirs.col(i));
        if (std::abs(s.imag()) <= 1e-12 * std::max(1.0, std::abs(s))) {
            T.col(col++) = x.real();
        } else {
            T.col(col++) = x.real();
            if (col < r) T.col(col++) = x.imag();
            // mark the conjugate partner as consumed
            for (Index k = i + 1; k < r; ++k) {
                if (!done[static_cast<std::size_t>(k)] &&
                    std::abs(shifts(k) - std::conj(s)) <=
                        1e-8 * std::max(1.0, std::abs(s))) {
                    done[static_cast<std::size_t>(k)] = true;
                    break;
                }
            }
        }
        done[static_cast<std::size_t>(i)] = true;
    }
    // fill any remaining columns with unit vectors before orthonormalization
    for (; col < r; ++col) T.col(col) = Matrix::Identity(n, r).col(col);
    Eigen::HouseholderQR<Matrix> qr(T);
    return Matrix(qr.householderQ()) * Matrix::Identity(n, r);
}

struct PhProjection {
    PHModel rom;
    bool regularized = false;
};

// Structure-preserving projection with W = Q T (T^T Q T)^{-1}.
PhProjection ph_project(const PHModel& fom, const Matrix& T) {
    bool regularized = false;
    Matrix QT = T.transpose() * fom.Q * T;
    QT = 0.5 * (QT + QT.transpose());
    Eigen::FullPivLU<Matrix> lu(QT);
    if (!lu.isInvertible() || lu.rcond() < 1e-14) {
        QT.diagonal().array() += 1e-12 * std::max(1.0, QT.cwiseAbs().maxCoeff());
        lu.compute(QT);
        regularized = true;
    }
    const Matrix W = (lu.solve((fom.Q * T).transpose())).transpose();
    Matrix Jr = W.transpose() * fom.J * W;
    Jr = 0.5 * (Jr - Jr.transpose());
    Matrix Rr = W.transpose() * fom.R * W;
    Rr = 0.5 * (Rr + Rr.transpose());
    return {PHModel(std::move(Jr), std::move(Rr), std::move(QT), W.transpose() * fom.B),
            regularized};
}

ComplexVector sorted_by_real_imag(ComplexVector v) {
    std::sort(v.begin(), v.end(), [](Complex a, Complex b) {
        if (a.real() != b.real()) return a.real() < b.real();
        return a.imag() < b.imag();
    });
    return v;
}

} // namespace

PhIrkaResult ph_irka(const PHModel& fom, Index r, const PhIrkaOptions& opts) {
    const Index n = fom.order();
    const Index nu = fom.inputs();
    if (r < 1 || r > n) throw DimensionError("ph_irka: invalid reduced order");
    const Matrix A = (fom.J - fom.R) * fom.Q;
    const Eigen::VectorXcd eigs = A.eigenvalues();
    if (!(eigs.real().maxCoeff() < 0.0)) {
        throw NumericalError("ph_irka requires an asymptotically stable model");
    }

    // initial shifts: log-spaced across the spectral-abscissa decade range;
    // initial directions: dominant right singular vectors of G at the shifts
    const double lo = std::max(eigs.real().cwiseAbs().minCoeff(), 1e-12);
    const double hi = std::max(eigs.real().cwiseAbs().maxCoeff(), lo * (1.0 + 1e-6));
    ComplexVector shifts(r);
    ComplexMatrix dirs(nu, r);
    for (Index i = 0; i < r; ++i) {
        const double t = (r == 1) ? 0.5 : static_cast<double>(i) / (r - 1);
        shifts(i) = Complex(std::pow(10.0, std::log10(lo) + t * (std::log10(hi / lo))), 0.0);
        Eigen::JacobiSVD<ComplexMatrix> svd(eval_tf_ph(fom, shifts(i)), Eigen::ComputeFullV);
        dirs.col(i) = svd.matrixV().col(0);
    }

    PhIrkaResult res;
    ComplexVector prev = sorted_by_real_imag(shifts);
    for (int it = 1; it <= opts.max_fp_iters; ++it) {
        const Matrix T = irka_basis(A, fom.B, shifts, dirs, r);
        PhProjection proj = ph_project(fom, T);
        res.rom = proj.rom;
        res.regularized = res.regularized || proj.regularized;
        res.points = shifts;
        res.directions = dirs;
        res.iterations = it;

        const Matrix Ar = (res.rom.J - res.rom.R) * res.rom.Q;
        Eigen::EigenSolver<Matrix> es(Ar);
        const ComplexVector lam = es.eigenvalues();
        const ComplexMatrix X = es.eigenvectors();
        // left eigenvectors normalized y_i^H x_i = 1 are the rows of X^{-1} (conjugated)
        const ComplexMatrix Yl = X.inverse().adjoint();

        ComplexVector new_shifts = -lam;
        ComplexMatrix new_dirs = res.rom.B.transpose().cast<Complex>() * Yl;

        const ComplexVector sorted_new = sorted_by_real_imag(new_shifts);
        const double rel = (sorted_new - prev).norm() / std::max(prev.norm(), 1e-300);
        prev = sorted_new;
        shifts = new_shifts;
        dirs = new_dirs;
        if (rel < opts.fp_tol) {
            res.converged = true;
            return res;
        }
    }
    res.converged = false;
    return res;
}

SSOModel so_bt(const SSOModel& fom, Index r) {
    const Index n = fom.order();
    if (r < 1 || r > n) throw DimensionError("so_bt: invalid reduced order");
    for (const auto* m : {&fom.M, &fom.K}) {
        Eigen::FullPivLU<Matrix> lu(*m);
        if (!lu.isInvertible()) {
            throw NumericalError("so_bt requires invertible M and K");
        }
    }
    const StateSpaceModel fo = sso_to_first_order_explicit(fom);
    if (!(spectral_abscissa(fo.A) < 0.0)) {
        throw NumericalError("so_bt requires a stable first-order embedding");
    }
    const Matrix P = lyap_solve(fo.A, fo.B * fo.B.transpose());
    const Matrix Pp = 0.5 * (P.topLeftCorner(n, n) + P.topLeftCorner(n, n).transpose());

    Matrix Rp;
    Eigen::LLT<Matrix> llt(Pp);
    if (llt.info() == Eigen::Success) {
        Rp = llt.matrixL();
    } else {
        Rp = psd_sqrt_factor(Pp, "position Gramian");
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(Rp.transpose() * fom.M * Rp);
    if (es.info() != Eigen::Success) throw NumericalError("so_bt: eigendecomposition failed");
    // eigenvalues ascending; take the r largest
    Matrix Tr(n, r);
    for (Index i = 0; i < r; ++i) {
        const Index k = n - 1 - i;
        const double sv = es.eigenvalues()(k);
        if (!(sv > 0.0)) throw NumericalError("so_bt: nonpositive balancing value");
        Tr.col(i) = Rp * es.eigenvectors().col(k) / std::sqrt(sv);
    }
    Matrix Mr = Tr.transpose() * fom.M * Tr;
    Matrix Dr = Tr.transpose() * fom.D * Tr;
    Matrix Kr = Tr.transpose() * fom.K * Tr;
    Mr = 0.5 * (Mr + Mr.transpose());
    Dr = 0.5 * (Dr + Dr.transpose());
    Kr = 0.5 * (Kr + Kr.transpose());
    return SSOModel(std::move(Mr), std::move(Dr), std::move(Kr), Tr.transpose() * fom.B);
}

SoBtGramians so_bt_gramians(const SSOModel& fom) {
    const Index n = fom.order();
    const StateSpaceModel fo = sso_to_first_order_explicit(fom);
    if (!(spectral_abscissa(fo.A) < 0.0)) {
        throw NumericalError("so_bt_gramians requires a stable embedding");
    }
    const Matrix P = lyap_solve(fo.A, fo.B * fo.B.transpose());
    const Matrix Qex = lyap_solve(fo.A.transpose(), fo.C.transpose() * fo.C);
    // generalized observability Gramian E^{-1} Q_expl E^{-1}; only the velocity
    // block is needed, and E = diag(I, M)
    Eigen::PartialPivLU<Matrix> mlu(fom.M);
    const Matrix Qv = mlu.solve(mlu.solve(Qex.bottomRightCorner(n, n)).transpose()).transpose();
    SoBtGramians out;
    out.Pp = P.topLeftCorner(n, n);
    out.Qv = 0.5 * (Qv + Qv.transpose());
    return out;
}

} // namespace sobmor
