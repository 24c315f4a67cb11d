#ifndef SOBMOR_BASELINES_HPP
#define SOBMOR_BASELINES_HPP

#include "sobmor/models.hpp"

namespace sobmor {

/// Solves A X + X A^T + W = 0 for symmetric W with Hurwitz A
/// (Bartels-Stewart on the real Schur form). The result is symmetrized.
Matrix lyap_solve(const Matrix& A, const Matrix& W);

/// Full balancing transformation: T^{-1} P T^{-T} = T^T Q T = diag(hankel).
struct BalancingData {
    Matrix T, Tinv;
    Vector hankel; // nonincreasing
};

BalancingData compute_balancing(const StateSpaceModel& fom);

struct BTResult {
    StateSpaceModel rom;
    double bound = 0.0; // 2 * sum of truncated Hankel singular values
    Vector hankel;
};

/// Square-root balanced truncation with the 2-tail-sum error bound.
BTResult balanced_truncation(const StateSpaceModel& fom, Index r);

/// Effort-constraint balanced truncation: balance, partition, Schur-complement
/// the truncated block of Q. The returned model is port-Hamiltonian.
PHModel ph_bt(const PHModel& fom, Index r);

struct PhIrkaOptions {
    int max_fp_iters = 100;
    double fp_tol = 1e-6;
};

struct PhIrkaResult {
    PHModel rom;
    ComplexVector points;     // interpolation points used to build the final ROM
    ComplexMatrix directions; // n_u x r tangential directions aligned with points
    int iterations = 0;
    bool converged = false;
    bool regularized = false; // T^T Q T needed a ridge at some iteration
};

/// Structure-preserving IRKA fixed point with left projection Q T (T^T Q T)^{-1}.
PhIrkaResult ph_irka(const PHModel& fom, Index r, const PhIrkaOptions& opts = {});

/// Second-order balanced truncation (position/velocity balancing, one-sided
/// congruence). Requires M and K invertible and a stable embedding.
SSOModel so_bt(const SSOModel& fom, Index r);

struct SoBtGramians {
    Matrix Pp; // position controllability Gramian
    Matrix Qv; // velocity observability Gramian (generalized convention)
};

SoBtGramians so_bt_gramians(const SSOModel& fom);

} // namespace sobmor

#endif
