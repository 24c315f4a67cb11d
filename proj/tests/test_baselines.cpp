#include <doctest.h>

#include "oracles.hpp"
#include "sobmor/baselines.hpp"
#include "sobmor/benchmarks.hpp"
#include "sobmor/metrics.hpp"
#include "sobmor/param.hpp"

using namespace sobmor;

namespace {

double grid_hinf(const AnyModel& fom, const AnyModel& rom, const GridSpec& spec) {
    FrequencySampleSet grid = make_grid(spec);
    double e = 0.0;
    for (Index i = 0; i < grid.size(); ++i) {
        e = std::max(e, oracles::sigma_max(eval_tf_any(fom, grid.point(i)) -
                                           eval_tf_any(rom, grid.point(i))));
    }
    return e;
}

GridSpec small_grid() {
    GridSpec spec;
    spec.omega_lo = 1e-3;
    spec.omega_hi = 1e3;
    spec.count = 200;
    spec.extras = {0.0};
    return spec;
}

} // namespace

TEST_CASE("lyap_solve closed forms") {
    // A = -I, W = 2I -> X = I
    const Matrix X = lyap_solve(-Matrix::Identity(3, 3), 2.0 * Matrix::Identity(3, 3));
    CHECK((X - Matrix::Identity(3, 3)).norm() < 1e-12);
    // scalar: a = -1, w = 6 -> x = 3
    const Matrix Xs = lyap_solve(Matrix::Constant(1, 1, -1.0), Matrix::Constant(1, 1, 6.0));
    CHECK(Xs(0, 0) == doctest::Approx(3.0));
}

TEST_CASE("lyap_solve matches the Kronecker oracle on random Hurwitz systems") {
    for (unsigned seed : {1u, 2u, 3u}) {
        const auto m = oracles::random_stable_ss(8, 2, 2, seed);
        const Matrix W = m.B * m.B.transpose();
        const Matrix X = lyap_solve(m.A, W);
        const Matrix ref = oracles::kron_lyap(m.A, W);
        CHECK((X - ref).norm() <= 1e-8 * std::max(1.0, ref.norm()));
        CHECK((X - X.transpose()).norm() <= 1e-12 * std::max(1.0, X.norm()));
    }
}

TEST_CASE("lyap_solve input validation") {
    CHECK_THROWS_AS(lyap_solve(Matrix::Identity(2, 2), Matrix::Identity(2, 2)),
                    NumericalError); // not Hurwitz
    Matrix W(2, 2);
    W << 1, 2, 3, 4;
    CHECK_THROWS_AS(lyap_solve(-Matrix::Identity(2, 2), W), StructureError); // asymmetric
}

TEST_CASE("balanced truncation: exactness at full order and the error bound") {
    const auto fom = oracles::random_stable_ss(10, 2, 2, 4);
    const BTResult full = balanced_truncation(fom, 10);
    CHECK(full.bound == doctest::Approx(0.0));
    CHECK(grid_hinf(AnyModel(fom), AnyModel(full.rom), small_grid()) < 1e-8);

    const BTResult red = balanced_truncation(fom, 4);
    const double err = grid_hinf(AnyModel(fom), AnyModel(red.rom), small_grid());
    CHECK(err <= red.bound + 1e-8);
}

TEST_CASE("balancing transformation diagonalizes both Gramians") {
    const auto fom = oracles::random_stable_ss(6, 2, 2, 5);
    const BalancingData bal = compute_balancing(fom);
    CHECK((bal.T * bal.Tinv - Matrix::Identity(6, 6)).norm() < 1e-8);
    const Matrix P = lyap_solve(fom.A, fom.B * fom.B.transpose());
    const Matrix Q = lyap_solve(fom.A.transpose(), fom.C.transpose() * fom.C);
    const Matrix Pb = bal.Tinv * P * bal.Tinv.transpose();
    const Matrix Qb = bal.T.transpose() * Q * bal.T;
    const Matrix S = bal.hankel.asDiagonal();
    CHECK((Pb - S).norm() <= 1e-8 * bal.hankel(0));
    CHECK((Qb - S).norm() <= 1e-8 * bal.hankel(0));
}

TEST_CASE("ph_bt preserves structure and reproduces the FOM at full order") {
    const PHModel fom = msd_ph_chain(10); // n_x = 20
    for (Index r : {2, 4, 6}) {
        const PHModel rom = ph_bt(fom, r);
        CHECK_NOTHROW(rom.check_structure());
    }
    const PHModel full = ph_bt(fom, 20);
    CHECK(grid_hinf(AnyModel(fom), AnyModel(full), small_grid()) < 1e-8);
}

TEST_CASE("Schur complement of an SPD matrix stays SPD") {
    const Matrix A = oracles::random_matrix(6, 6, 91);
    const Matrix S = A * A.transpose() + 0.5 * Matrix::Identity(6, 6);
    const Matrix S11 = S.topLeftCorner(3, 3);
    const Matrix S12 = S.topRightCorner(3, 3);
    const Matrix S22 = S.bottomRightCorner(3, 3);
    const Matrix schur = S11 - S12 * S22.inverse() * S12.transpose();
    Eigen::SelfAdjointEigenSolver<Matrix> es(schur, Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues().minCoeff() > 0.0);
}

TEST_CASE("ph_irka interpolates tangentially at its final points") {
    const PHModel fom = msd_ph_chain(20); // n_x = 40
    const PhIrkaResult res = ph_irka(fom, 6);
    CHECK_NOTHROW(res.rom.check_structure());
    for (Index i = 0; i < res.points.size(); ++i) {
        const Complex s = res.points(i);
        const ComplexVector b = res.directions.col(i);
        const ComplexVector lhs = eval_tf_ph(fom, s) * b;
        const ComplexVector rhs = eval_tf_ph(res.rom, s) * b;
        CHECK((lhs - rhs).norm() <= 1e-8 * std::max(lhs.norm(), 1e-300));
    }
}

TEST_CASE("ph_irka at full order reproduces the FOM") {
    const PHModel fom = assemble_ph(oracles::random_theta(Structure::ph, 5, 2, 92));
    // random pH models are stable; full-order projection is exact
    const PhIrkaResult res = ph_irka(fom, 5, {50, 1e-6});
    CHECK(grid_hinf(AnyModel(fom), AnyModel(res.rom), small_grid()) < 1e-8);
}

TEST_CASE("ph_irka fixed point mirrors the ROM eigenvalues on convergence") {
    const PHModel fom = msd_ph_chain(15);
    const PhIrkaResult res = ph_irka(fom, 4);
    if (res.converged) {
        const Matrix Ar = (res.rom.J - res.rom.R) * res.rom.Q;
        Eigen::VectorXcd lam = Ar.eigenvalues();
        // every mirrored eigenvalue appears among the final points
        for (Index i = 0; i < lam.size(); ++i) {
            double best = 1e300;
            for (Index j = 0; j < res.points.size(); ++j) {
                best = std::min(best, std::abs(res.points(j) - (-lam(i))));
            }
            CHECK(best <= 1e-4 * std::max(1.0, std::abs(lam(i))));
        }
    }
}

TEST_CASE("so_bt preserves structure and the Gramian identity holds") {
    const SSOModel fom = triple_chain_sso(10); // n_x = 31
    const SoBtGramians gram = so_bt_gramians(fom);
    CHECK((gram.Pp - gram.Qv).norm() <= 1e-8 * gram.Pp.norm());

    const SSOModel rom = so_bt(fom, 6);
    CHECK_NOTHROW(rom.check_structure());
}

TEST_CASE("so_bt balances the position Gramian against M") {
    // a random dense SSO model keeps the position Gramian well-conditioned,
    // so even the full-order transformation is computable
    const SSOModel fom = assemble_sso(oracles::random_theta(Structure::sso_full, 6, 2, 94));
    const Index n = fom.order();
    const SSOModel full = so_bt(fom, n);
    // balanced M is the identity; the transformed position Gramian matches the
    // diagonal balancing values, which makes Pp and Qv diagonal and equal
    CHECK((full.M - Matrix::Identity(n, n)).norm() < 1e-6);
    const SoBtGramians bal = so_bt_gramians(full);
    CHECK((bal.Pp - bal.Pp.diagonal().asDiagonal().toDenseMatrix()).norm() <=
          1e-6 * bal.Pp.norm());
    CHECK((bal.Pp - bal.Qv).norm() <= 1e-6 * bal.Pp.norm());
    CHECK(grid_hinf(AnyModel(fom), AnyModel(full), small_grid()) < 1e-8);
}

TEST_CASE("so_bt rejects singular M or K") {
    SSOModel bad(Matrix::Zero(2, 2), Matrix::Identity(2, 2), Matrix::Identity(2, 2),
                 Matrix::Identity(2, 2));
    CHECK_THROWS_AS(so_bt(bad, 1), NumericalError);
}

TEST_CASE("bt bound sweep over random stable systems") {
    for (unsigned seed = 0; seed < 5; ++seed) {
        const auto fom = oracles::random_stable_ss(10, 2, 2, 200 + seed);
        for (Index r : {2, 4, 6}) {
            const BTResult res = balanced_truncation(fom, r);
            const double err = grid_hinf(AnyModel(fom), AnyModel(res.rom), small_grid());
            CHECK(err <= res.bound + 1e-8);
        }
    }
}
