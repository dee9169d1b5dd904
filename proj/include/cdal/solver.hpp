#pragma once

#include "cdal/preconditioner.hpp"
#include "cdal/problem.hpp"

namespace cdal {

struct SolverSettings {
    double rho = 0.01;
    int max_outer = 5000;
    int max_inner = 5000;
    double eps_out = 1e-4;  // on ||Lambda^k - Lambda_hat^{k-1}||^2
    double eps_in = 1e-6;   // on the per-pass sum of squared moves
    bool use_acceleration = true;
    bool use_reverse = true;
    bool use_precond = true;

    /// Throws ConfigError on a non-positive rho, tolerance or iteration cap.
    void validate() const;
};

struct SolveReport {
    int outer_iters = 0;
    long inner_iters_total = 0;
    bool converged = false;
    double dual_gap = 0.0;
    double objective = 0.0;
};

/// alpha_{k+1} = (1 + sqrt(1 + 4 alpha_k^2)) / 2
double nesterov_alpha(double alpha_k);

/// On entry it.Lambda holds Lambda_hat; on exit each lambda_t has the current
/// dynamics residual added, i.e. Lambda_hat + (G z - g).
void dual_refresh(const AugmentedModel& m, PrimalDualIterate& it);

/// Accelerated reverse-cyclic coordinate-descent augmented Lagrangian.
///
/// `it` is the warm start on entry and the solution on exit, always in the
/// unscaled coordinates of `m`; X[0] is reset to m.xh0. With preconditioning
/// on, `cached_scaling` (if given) is used instead of recomputing E.
///
/// Throws DivergenceError when the iterates become non-finite.
SolveReport solve(const AugmentedModel& m, PrimalDualIterate& it, const SolverSettings& settings,
                  const DiagonalScaling* cached_scaling = nullptr);

}  // namespace cdal
