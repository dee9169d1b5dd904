#pragma once

#include "cdal/problem.hpp"

namespace cdal {

enum class SweepOrder { reverse, forward };

/// Diagonal blocks of the augmented-Lagrangian Hessian for one model and rho.
///
///   phi1 = R/rho + B'B        (input blocks)
///   phi3 = Q/rho + I + A'A    (interior state blocks)
///   phi6 = Q/rho + I          (terminal state block)
///
/// The off-diagonal couplings (-B', A'B, -A') are never formed; their action
/// is applied through the maintained residuals in the iterate's Lambda.
/// The model must outlive the workspace.
struct CdWorkspace {
    const AugmentedModel* model = nullptr;
    double rho = 1.0;
    Matrix phi1, phi3, phi6;
    Vector diag1, diag3, diag6;

    // Q/rho, R/rho and q_lin/rho, cached for the sweeps.
    Matrix Q_rho, R_rho;
    Vector q_rho;

    static CdWorkspace build(const AugmentedModel& m, double rho);
};

struct PassResult {
    double sigma = 0.0;  // sum of squared coordinate moves
    long updates = 0;    // coordinates visited
};

/// Projection onto [lo, hi]; infinite bounds never clip.
inline double clamp(double v, double lo, double hi) {
    if (v >= hi) return hi;
    if (v <= lo) return lo;
    return v;
}

// The block updates below all require that it.Lambda[t] holds the dynamics
// residual  lambda_hat_t + A x_t + B u_t + e - x_{t+1}  for the current
// iterate, and they keep that identity true after every coordinate move.

/// Coordinate sweep over u_t.
void ccd_input_block(int t, const CdWorkspace& ws, PrimalDualIterate& it, double& sigma,
                     SweepOrder order = SweepOrder::reverse);

/// Coordinate sweep over x_{t+1} for 0 <= t <= T-2.
void ccd_state_block(int t, const CdWorkspace& ws, PrimalDualIterate& it, double& sigma,
                     SweepOrder order = SweepOrder::reverse);

/// Coordinate sweep over the terminal state x_T.
void ccd_terminal_state(const CdWorkspace& ws, PrimalDualIterate& it, double& sigma,
                        SweepOrder order = SweepOrder::reverse);

/// One pass over every coordinate of z. Reverse order visits
/// x_T, u_{T-1}, x_{T-1}, u_{T-2}, ..., x_1, u_0 with coordinates from last
/// to first; forward order is the exact mirror.
PassResult cd_full_pass(const CdWorkspace& ws, PrimalDualIterate& it,
                        SweepOrder order = SweepOrder::reverse);

}  // namespace cdal
