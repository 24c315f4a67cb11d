#ifndef SOBMOR_BENCHMARKS_HPP
#define SOBMOR_BENCHMARKS_HPP

#include "sobmor/models.hpp"

namespace sobmor {

struct MsdParams {
    double mass = 4.0;
    double stiffness = 4.0;
    double damping = 1.0;
};

/// Mass-spring-damper chain as a pH system (n_x = 2 n_cells, n_u = 2).
/// Masses in a chain with a wall spring on the first one, a viscous damper on
/// every mass, forces applied to the first two masses, velocity outputs.
/// State ordering (momenta, positions): J = [[0,-I],[I,0]],
/// Q = diag(M^{-1}, K_spring), R = diag(cI, 0).
PHModel msd_ph_chain(Index n_cells, const MsdParams& params = {});

struct TripleChainParams {
    double mass = 1.0;
    double coupling_mass = 10.0;
    double stiffness = 2.0;
    double alpha = 0.002; // proportional damping, mass part
    double beta = 0.002;  // proportional damping, stiffness part
    /// Viscosity of the discrete dampers; nonpositive means sqrt(mass*stiffness)
    /// (the matched-impedance value for the chain).
    double damper_viscosity = -1.0;
    /// Number of damped masses at the head of the first chain; nonpositive
    /// means ceil(n0 / 5).
    Index damper_count = -1;
};

/// Triple mass-spring-damper chain as an SSO system (n_x = 3 n0 + 1, n_u = 3):
/// three chains anchored to walls at their heads, coupled through one extra
/// mass at their tails, actuation and measurement at the first three masses.
/// D = alpha M + beta K plus discrete dampers on the leading masses of the
/// first chain.
SSOModel triple_chain_sso(Index n0, const TripleChainParams& params = {});

} // namespace sobmor

#endif
