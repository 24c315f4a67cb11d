#include "sobmor/benchmarks.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace sobmor {

PHModel msd_ph_chain(Index n_cells, const MsdParams& params) {
    if (n_cells < 2) throw DimensionError("msd_ph_chain requires n_cells >= 2");
    if (!(params.mass > 0.0 && params.stiffness > 0.0 && params.damping > 0.0)) {
        throw DimensionError("msd_ph_chain requires positive mass, stiffness, damping");
    }
    const Index N = n_cells;
    const double k = params.stiffness;

    Matrix Kq = Matrix::Zero(N, N);
    for (Index i = 0; i < N; ++i) {
        Kq(i, i) += k; // spring toward the wall (i = 0) or the previous mass
        if (i + 1 < N) {
            Kq(i, i) += k;
            Kq(i, i + 1) -= k;
            Kq(i + 1, i) -= k;
        }
    }

    Matrix J = Matrix::Zero(2 * N, 2 * N);
    J.topRightCorner(N, N) = -Matrix::Identity(N, N);
    J.bottomLeftCorner(N, N) = Matrix::Identity(N, N);

    Matrix R = Matrix::Zero(2 * N, 2 * N);
    R.topLeftCorner(N, N) = params.damping * Matrix::Identity(N, N);

    Matrix Q = Matrix::Zero(2 * N, 2 * N);
    Q.topLeftCorner(N, N) = (1.0 / params.mass) * Matrix::Identity(N, N);
    Q.bottomRightCorner(N, N) = Kq;

    Matrix B = Matrix::Zero(2 * N, 2);
    B(0, 0) = 1.0;
    B(1, 1) = 1.0;

    PHModel model(std::move(J), std::move(R), std::move(Q), std::move(B));
    const double abscissa =
        Matrix((model.J - model.R) * model.Q).eigenvalues().real().maxCoeff();
    if (!(abscissa < 0.0)) {
        throw NumericalError("msd_ph_chain: generated model is not asymptotically stable");
    }
    return model;
}

SSOModel triple_chain_sso(Index n0, const TripleChainParams& params) {
    if (n0 < 1) throw DimensionError("triple_chain_sso requires n0 >= 1");
    if (!(params.mass > 0.0 && params.coupling_mass > 0.0 && params.stiffness > 0.0 &&
          params.alpha > 0.0 && params.beta > 0.0)) {
        throw DimensionError("triple_chain_sso requires positive physical parameters");
    }
    const Index n = 3 * n0 + 1;
    const Index cm = 3 * n0; // coupling mass index
    const double k = params.stiffness;
    const double visc = params.damper_viscosity > 0.0
                            ? params.damper_viscosity
                            : std::sqrt(params.mass * params.stiffness);
    const Index n_damp = params.damper_count > 0
                             ? std::min(params.damper_count, n0)
                             : (n0 + 4) / 5;

    Vector masses = Vector::Constant(n, params.mass);
    masses(cm) = params.coupling_mass;
    Matrix M = masses.asDiagonal();

    Matrix K = Matrix::Zero(n, n);
    auto add_spring = [&](Index a, Index b) {
        K(a, a) += k;
        K(b, b) += k;
        K(a, b) -= k;
        K(b, a) -= k;
    };
    for (Index c = 0; c < 3; ++c) {
        const Index base = c * n0;
        K(base, base) += k; // wall spring at the head of each chain
        for (Index i = 0; i + 1 < n0; ++i) add_spring(base + i, base + i + 1);
        add_spring(base + n0 - 1, cm);
    }
    K(cm, cm) += k; // anchor the coupling mass

    Matrix D = params.alpha * M + params.beta * K;
    for (Index i = 0; i < n_damp; ++i) D(i, i) += visc;

    Matrix B = Matrix::Zero(n, 3);
    B(0, 0) = B(1, 1) = B(2, 2) = 1.0;

    SSOModel model(std::move(M), std::move(D), std::move(K), std::move(B));
    const StateSpaceModel fo = sso_to_first_order_explicit(model);
    if (!(fo.A.eigenvalues().real().maxCoeff() < 0.0)) {
        throw NumericalError("triple_chain_sso: embedding is not asymptotically stable");
    }
    return model;
}

} // namespace sobmor
