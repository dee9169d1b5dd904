#pragma once

#include <Eigen/Dense>

#include <limits>
#include <optional>
#include <vector>

namespace cdal {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Tracking MPC with input-increment penalty.
///
/// Unbounded entries use +/-infinity. The reference `r` and `u_ref` are held
/// constant over the prediction horizon. When `u_ref` is left empty it
/// defaults to `u_prev`.
struct MpcProblem {
    Matrix A, B, C;
    Matrix W_y, W_u, W_du;
    int horizon = 1;

    Vector x_min, x_max;
    Vector u_min, u_max;
    Vector du_min, du_max;

    Vector r;
    Vector u_ref;
    Vector x0;
    Vector u_prev;
    Vector e;  // affine offset, zero when empty

    int nx() const { return static_cast<int>(A.rows()); }
    int nu() const { return static_cast<int>(B.cols()); }
    int ny() const { return static_cast<int>(C.rows()); }

    /// Problem with the given dimensions, zero matrices, unbounded boxes.
    static MpcProblem unconstrained(int nx, int nu, int ny, int horizon);
};

/// Convert output bounds into state bounds.
///
/// Only accepted when every row of C with a finite bound is a unit vector
/// (pure state selection); throws ConfigError otherwise.
void apply_output_bounds(MpcProblem& p, const Vector& y_min, const Vector& y_max);

/// Prediction model in the augmented coordinates x_hat = [x; u_{t-1}], u_hat = du.
struct AugmentedModel {
    Matrix A_hat;  // [[A, B], [0, I]]
    Matrix B_hat;  // [B; I]
    Matrix Q;      // C_hat' W_hat C_hat
    Matrix R;      // W_du
    Vector q_lin;  // -C_hat' W_hat r_hat, identical at every stage
    Vector xh_min, xh_max;
    Vector uh_min, uh_max;
    Vector e_hat;  // [e; 0]
    Vector xh0;    // [x0; u_prev]
    int horizon = 1;

    /// 0.5 * r_hat' W_hat r_hat; added per stage so the objective equals the MPC cost.
    double stage_constant = 0.0;

    int nxh() const { return static_cast<int>(A_hat.rows()); }
    int nu() const { return static_cast<int>(B_hat.cols()); }
};

/// Validates `p` and builds the augmented model. Throws ConfigError naming the
/// offending field on any dimension or bound inconsistency.
AugmentedModel augment(const MpcProblem& p);

/// Primal-dual iterate of the solver. `X[0]` is the fixed initial state.
/// `Lambda` holds scaled multipliers, one per dynamics constraint.
struct PrimalDualIterate {
    std::vector<Vector> U;            // T entries, n_u each
    std::vector<Vector> X;            // T+1 entries, n_xh each
    std::vector<Vector> Lambda;       // T entries, n_xh each
    std::vector<Vector> Lambda_prev;  // previous outer iterate of Lambda

    int horizon() const { return static_cast<int>(U.size()); }
};

/// Zero inputs and multipliers, states rolled out from xh0 and clamped to the box.
PrimalDualIterate cold_start(const AugmentedModel& m);

/// Shift by one stage, duplicating the last block, and install `new_xh0`.
/// Shifted entries are re-projected onto the boxes of `m`.
PrimalDualIterate shift_warm_start(const PrimalDualIterate& prev, const Vector& new_xh0,
                                   const AugmentedModel& m);

/// Tracking cost of an iterate:
/// sum_t 0.5 x'Qx + q'x + 0.5 u'Ru plus the stage constants.
double mpc_objective(const AugmentedModel& m, const PrimalDualIterate& it);

/// max_t || A_hat x_t + B_hat u_t + e_hat - x_{t+1} ||_inf
double dynamics_residual(const AugmentedModel& m, const PrimalDualIterate& it);

/// One closed-loop sample: y and r are at t+1, u and du at t.
struct StageRecord {
    double time = 0.0;
    Vector x;  // plant state after applying u
    Vector y;
    Vector u;
    Vector du;
    Vector r;
    Vector u_ref;
    int outer_iters = 0;
    long inner_iters = 0;
    bool converged = true;
    double solve_ms = 0.0;
    double total_ms = 0.0;  // model construction + solve
    double u_violation = 0.0;      // max excess over the input box
    double du_violation = 0.0;     // max excess over the increment box
    double state_violation = 0.0;  // max excess over the state box (incl. output bounds)
    double model_defect = 0.0;     // LPV only, see simulate_lpv_cstr
};

struct ClosedLoopLog {
    Matrix W_y, W_u, W_du;
    std::vector<StageRecord> records;
};

/// Mean over the log of e_y' W_y e_y + e_u' W_u e_u + du' W_du du.
/// Throws std::invalid_argument on an empty log.
double closed_loop_cost(const ClosedLoopLog& log);

}  // namespace cdal
