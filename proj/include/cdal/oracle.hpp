#pragma once

// Dense reference formulation used to check the structured solver.
// Nothing in here is on the solve path of the coordinate-descent solver.

#include "cdal/problem.hpp"

#include <random>

namespace cdal::oracle {

/// min 0.5 z'Hz + h'z  s.t.  Gz = g, lo <= z <= hi,
/// with z = [u_0; x_1; u_1; x_2; ...; u_{T-1}; x_T].
struct ExplicitQp {
    Matrix H;
    Vector h;
    Matrix G;
    Vector g;
    Vector lo, hi;
    double cost_offset = 0.0;  // sum of stage constants, so objective() is the MPC cost
    int nxh = 0;
    int nu = 0;
    int horizon = 0;

    int nz() const { return static_cast<int>(H.rows()); }
    double objective(const Vector& z) const { return 0.5 * z.dot(H * z) + h.dot(z) + cost_offset; }
};

ExplicitQp build_qp(const AugmentedModel& m);

/// Stack an iterate into z.
Vector pack(const PrimalDualIterate& it);
/// Stack the multipliers (T blocks of n_xh).
Vector pack_multipliers(const std::vector<Vector>& Lambda);
/// Split z back into U and X (X[0] = m.xh0); multipliers are zero.
PrimalDualIterate unpack(const Vector& z, const AugmentedModel& m);

/// F_rho(z; Lambda) = 0.5 z'(H/rho + G'G) z + (h/rho + G'Lambda - G'g)'z
double eval_F_rho(const ExplicitQp& qp, const Vector& z, const Vector& lambda_hat, double rho);

/// Gradient of eval_F_rho with respect to z.
Vector grad_F_rho(const ExplicitQp& qp, const Vector& z, const Vector& lambda_hat, double rho);

/// Exact minimizer of 0.5 z'Pz + c'z over lo <= z <= hi for positive definite P,
/// by a primal active-set method with dense LDLT solves.
Vector solve_box_qp(const Matrix& P, const Vector& c, const Vector& lo, const Vector& hi,
                    const Vector& z0);

struct ReferenceResult {
    Vector z;
    Vector lambda;  // scaled multipliers at convergence
    int outer_iters = 0;
};

/// Solves the explicit QP to high accuracy: a plain multiplier method whose
/// subproblems are solved exactly by solve_box_qp. Throws OracleError when
/// the iteration budget runs out.
ReferenceResult solve_qp_reference(const ExplicitQp& qp, double rho = 100.0,
                                   double tol = 1e-11, int max_outer = 200000);

/// Minimizer of F_rho(.; lambda_hat) over the box.
Vector solve_al_subproblem(const ExplicitQp& qp, const Vector& lambda_hat, double rho);

struct RandomInstanceOptions {
    int nx_max = 4;
    int nu_max = 2;
    int horizon_max = 5;
    double infinite_bound_probability = 0.3;
    // Bounds sit this far (at least) outside the rolled-out trajectory, so the
    // instance has a strictly feasible point. Zero margins can pin a coordinate
    // from both sides and leave the multipliers unbounded.
    double min_margin = 0.05;
    double zero_margin_probability = 0.0;
    bool affine_offset = true;
};

/// Random tracking problem, feasible by construction: bounds are placed around
/// a rolled-out trajectory with random, sometimes zero, margins.
MpcProblem random_problem(std::mt19937_64& rng, const RandomInstanceOptions& opts = {});

}  // namespace cdal::oracle
