#ifndef SOBMOR_OBJECTIVE_HPP
#define SOBMOR_OBJECTIVE_HPP

#include <vector>

#include "sobmor/param.hpp"

namespace sobmor {

/// One singular triplet of an error matrix, sorted nonincreasing in sigma.
struct SVDTriplet {
    double sigma = 0.0;
    ComplexVector u; // left singular vector
    ComplexVector v; // right singular vector
    int index = 0;   // j, position in the nonincreasing ordering
};

std::vector<SVDTriplet> svd_triplets(const ComplexMatrix& E);

struct LossValue {
    double value = 0.0;
    double gamma = 0.0;
    int active_count = 0; // number of (i, j) with sigma_j(s_i) > gamma
};

struct ObjectiveOptions {
    double ridge = 0.0;            // forwarded to assembly
    double cluster_gap_tol = 1e-10; // relative gap below which sigma_j counts as clustered
};

// Leveled least squares L(gamma, ...) = (1/gamma) sum_i sum_j ([sigma_j - gamma]_+)^2
// over the cached FOM samples; sigma_j are the singular values of
// G(s_i) - G_r(s_i, theta). Terms with sigma_j <= gamma are inactive.
LossValue loss(double gamma, const FrequencySampleSet& samples, const ParamVector& theta,
               const ObjectiveOptions& opts = {});

/// Spectral-norm-only variant (j = 1 term per sample).
LossValue loss_tilde(double gamma, const FrequencySampleSet& samples, const ParamVector& theta,
                     const ObjectiveOptions& opts = {});

/// Plain least squares sum_i ||G(s_i) - G_r(s_i, theta)||_2^2.
double lsq(const FrequencySampleSet& samples, const ParamVector& theta,
           const ObjectiveOptions& opts = {});

Vector grad_loss(double gamma, const FrequencySampleSet& samples, const ParamVector& theta,
                 const ObjectiveOptions& opts = {});
Vector grad_lsq(const FrequencySampleSet& samples, const ParamVector& theta,
                const ObjectiveOptions& opts = {});

/// Value and gradient in one pass (one factorization per sample point).
LossValue loss_and_grad(double gamma, const FrequencySampleSet& samples,
                        const ParamVector& theta, Vector& grad,
                        const ObjectiveOptions& opts = {});

struct GradSigmaResult {
    Vector grad;
    /// Set when sigma_j is zero or clustered within the relative gap tolerance;
    /// the gradient is still the one-branch value.
    bool degenerate = false;
};

/// Gradient of theta -> sigma_j(G0 - G_ph(s0, theta)) for a pH-parametrized theta.
GradSigmaResult grad_sigma_ph(const ParamVector& theta, Complex s0, const ComplexMatrix& G0,
                              int j, const ObjectiveOptions& opts = {});

/// Gradient of theta -> sigma_j(G0 - G_sso(s0, theta)) for an SSO-parametrized theta.
GradSigmaResult grad_sigma_sso(const ParamVector& theta, Complex s0, const ComplexMatrix& G0,
                               int j, const ObjectiveOptions& opts = {});

} // namespace sobmor

#endif
